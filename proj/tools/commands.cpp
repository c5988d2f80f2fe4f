#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "romsram/analysis.hpp"
#include "romsram/config.hpp"
#include "romsram/errors.hpp"

namespace romsram::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out_dir;
};

RunConfig load(const Common& c) {
    const std::string path = c.config.empty() ? config_path_from_env() : c.config;
    RunConfig rc = path.empty() ? parse_run_config("", c.sets) : load_run_config(path, c.sets);
    if (!c.out_dir.empty()) rc.output_dir = c.out_dir;
    return rc;
}

std::string out_path(const RunConfig& rc, const std::string& name) { return (fs::path(rc.output_dir) / name).string(); }

int parse_case_code(const std::string& s) {
    if (s.size() == 2 && (s[0] == '0' || s[0] == '1') && (s[1] == '0' || s[1] == '1'))
        return (s[0] - '0') * 2 + (s[1] - '0');
    throw InvalidParams("case must be one of 00, 01, 10, 11");
}

std::vector<Mode> modes_for(const std::string& name) {
    if (name == "all") return {Mode::RomOnly, Mode::RamOnlyReliability, Mode::RamOnlyDelay, Mode::DualContext};
    return {mode_from_string(name)};
}

const char* figure_for(Mode m) {
    switch (m) {
        case Mode::RomOnly: return "fig5.csv";
        case Mode::RamOnlyReliability: return "fig6.csv";
        case Mode::RamOnlyDelay: return "fig7.csv";
        case Mode::DualContext: return "fig8.csv";
    }
    return "fig.csv";
}

std::string trace_csv(const VoltageTrace& tr) {
    std::ostringstream os;
    os << "time_s,v_rbl_V\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        os << format_double(tr.times[i]) << ',' << format_double(tr.v_rbl[i]) << '\n';
    return os.str();
}

// Quantity from the command line; plain numbers are taken in SI base units.
double cli_quantity(const std::string& s, const std::string& unit) {
    try {
        return parse_quantity(s, "");
    } catch (const ConfigError&) {
        return parse_quantity(s, unit);
    }
}

ModeConfig calibrated(const RunConfig& rc, Mode m, std::ostream& out) {
    const ModeConfig& mc = rc.mode(m);
    if (mc.calibrated()) return mc;
    const auto res = calibrate(mc, rc.calibration, rc.sim, rc.mc, rc.device);
    char buf[160];
    for (std::size_t i = 0; i < res.phases.size(); ++i) {
        std::snprintf(buf, sizeof buf, "calibrated %s phase %zu: v_ref %.4f V, t_strobe %.4g s, margin %.2f mV\n",
                      std::string(to_string(m)).c_str(), i + 1, res.phases[i].v_ref, res.phases[i].t_strobe,
                      res.phases[i].margin * 1e3);
        out << buf;
    }
    return res.mode;
}

// --- simulate ---

struct FigureSpec {
    const char* name;
    double vsl;
    std::vector<int> cases;
    bool envelope;
};

int cmd_figures(const RunConfig& rc, const std::string& which, std::ostream& out) {
    static const FigureSpec figs[] = {{"fig2a", -0.10, {0, 1, 2, 3}, false},
                                      {"fig2b", -0.10, {0, 1, 2, 3}, true},
                                      {"fig2c", 0.20, {2, 3}, true},
                                      {"fig2d", -0.45, {0, 1}, true}};
    bool any = false;
    for (const auto& f : figs) {
        if (which != "all" && which != f.name) continue;
        any = true;
        PhasePlan plan = rc.rom_only.phase1;
        plan.vsl = f.vsl;
        const std::size_t points = 201;
        std::vector<double> grid(points);
        for (std::size_t i = 0; i < points; ++i) grid[i] = plan.window * double(i) / double(points - 1);
        std::vector<std::string> header{"time_s"};
        std::vector<std::vector<double>> cols;
        for (int c : f.cases) {
            const BitCell cell = BitCell::nominal(case_ram(c), flavor_for_rom_bit(case_rom(c)));
            const auto tr = simulate_read_event(cell, plan.waveforms(rc.sim.vdd), rc.sim, rc.device);
            header.push_back("v_case" + case_label(c) + "_nominal_V");
            cols.emplace_back();
            for (double t : grid) cols.back().push_back(tr.at(t));
            if (!f.envelope) continue;
            const auto pop = simulate_population(c, plan, rc.mc.samples_per_case, rc.mc.variation, rc.sim,
                                                 rc.device, rc.mc.threads);
            std::vector<double> lo(points, 1e300), hi(points, -1e300);
            for (const auto& p : pop)
                for (std::size_t i = 0; i < points; ++i) {
                    const double v = p.at(grid[i]);
                    lo[i] = std::min(lo[i], v);
                    hi[i] = std::max(hi[i], v);
                }
            header.push_back("v_case" + case_label(c) + "_min_V");
            header.push_back("v_case" + case_label(c) + "_max_V");
            cols.push_back(lo);
            cols.push_back(hi);
        }
        std::ostringstream os;
        for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
        os << '\n';
        for (std::size_t i = 0; i < points; ++i) {
            os << format_double(grid[i]);
            for (const auto& col : cols) os << ',' << format_double(col[i]);
            os << '\n';
        }
        const std::string path = out_path(rc, std::string(f.name) + ".csv");
        write_file_atomic(path, os.str());
        out << "wrote " << path << '\n';
    }
    if (!any) throw InvalidParams("unknown figure '" + which + "' (fig2a, fig2b, fig2c, fig2d or all)");
    return kOk;
}

int cmd_simulate(const RunConfig& rc, const std::string& mode_name, const std::string& case_name,
                 const std::string& output, std::ostream& out, std::ostream& err) {
    const Mode m = mode_from_string(mode_name);
    const ModeConfig& mc = rc.mode(m);
    mc.validate(rc.device, rc.sim);
    const int code = parse_case_code(case_name);
    const auto allowed = mc.cases();
    if (std::find(allowed.begin(), allowed.end(), code) == allowed.end())
        throw InvalidParams("case " + case_name + " cannot occur in mode " + mode_name);
    const BitCell cell = BitCell::nominal(case_ram(code), flavor_for_rom_bit(case_rom(code)));

    VoltageTrace tr;
    std::vector<const VoltageTrace*> parts;
    DualContextRead dc;
    if (m == Mode::DualContext) {
        if (mc.calibrated()) {
            dc = read_dual_context(cell, mc, rc.sim, rc.device);
        } else {
            // Without comparator settings, phase II follows the stored RAM bit.
            dc.ram = cell.q;
            dc.phase1 = simulate_read_event(cell, mc.phase1.waveforms(rc.sim.vdd), rc.sim, rc.device);
            const PhasePlan& p2 = sl_select(cell.q, mc);
            dc.phase2_vsl = p2.vsl;
            dc.phase2 = simulate_read_event(cell, p2.waveforms(rc.sim.vdd), rc.sim, rc.device);
        }
        tr = dual_context_timeline(dc, mc, rc.sim.vdd);
        parts = {&dc.phase1, &dc.phase2};
    } else {
        tr = simulate_read_event(cell, mc.phase1.waveforms(rc.sim.vdd), rc.sim, rc.device);
        parts = {&tr};
    }
    const std::string path = output.empty() ? out_path(rc, "trace_" + mode_name + "_" + case_name + ".csv") : output;
    write_file_atomic(path, trace_csv(tr));
    for (const auto* p : parts) {
        if (p->reliability_warning) err << "warning: " << p->warning << '\n';
    }
    out << "wrote " << path << '\n';
    out << "final_voltage_V " << format_double(tr.final_voltage()) << '\n';
    out << "energy_J " << format_double(tr.energy_drawn) << '\n';
    if (m == Mode::DualContext && mc.calibrated()) out << "ram " << dc.ram << " rom " << dc.rom << '\n';
    return kOk;
}

// --- mc ---

int cmd_mc(const RunConfig& rc, const std::string& mode_name, std::ostream& out, std::ostream& err) {
    int status = kOk;
    for (Mode m : modes_for(mode_name)) {
        const ModeConfig mc = calibrated(rc, m, out);
        const auto rep = run_monte_carlo(mc, rc.mc, rc.sim, rc.device);
        const std::string name(to_string(m));
        write_file_atomic(out_path(rc, "mc_" + name + ".csv"), yield_csv(rep));
        write_file_atomic(out_path(rc, figure_for(m)), samples_csv(rep));
        const std::string text = summary(rep, rc.mc.yield_threshold);
        write_file_atomic(out_path(rc, "mc_" + name + ".txt"), text);
        out << text;
        if (!rep.passes(rc.mc.yield_threshold)) {
            for (const auto& c : rep.cases)
                if (c.correct_fraction() < rc.mc.yield_threshold)
                    err << name << " case " << case_label(c.case_code) << ": correct fraction "
                        << c.correct_fraction() << " below threshold " << rc.mc.yield_threshold
                        << ", worst margin " << c.worst_margin() * 1e3 << " mV\n";
            status = kThreshold;
        }
    }
    return status;
}

// --- table1 ---

int cmd_table1(const RunConfig& rc, bool baseline_only, std::ostream& out) {
    MetricsReport rep;
    const BaselineCell base = rc.baseline();
    if (baseline_only) {
        rep = measure_metrics({}, rc.sim, rc.device, base, rc.metrics);
        ModeMetrics self = rep.baseline;
        self.delay_ratio = self.delay / rep.baseline.delay;
        self.energy_ratio = self.energy / rep.baseline.energy;
        self.leakage_ratio = self.leakage / rep.baseline.leakage;
        rep.modes.push_back(self);
    } else {
        std::vector<ModeConfig> modes;
        for (Mode m : {Mode::RamOnlyDelay, Mode::RomOnly, Mode::RamOnlyReliability, Mode::DualContext})
            modes.push_back(calibrated(rc, m, out));
        rep = measure_metrics(modes, rc.sim, rc.device, base, rc.metrics);
    }
    write_file_atomic(out_path(rc, "table1.csv"), metrics_csv(rep));
    write_file_atomic(out_path(rc, "table1_raw.csv"), metrics_raw_csv(rep));
    const std::string text = summary(rep);
    write_file_atomic(out_path(rc, "table1.txt"), text);
    out << text;
    return kOk;
}

// --- sweep ---

int cmd_sweep(const RunConfig& rc, const std::string& param, const std::string& mode_name, const std::string& from,
              const std::string& to, std::size_t points, bool with_mc, const std::string& output,
              std::ostream& out) {
    const Mode m = mode_from_string(mode_name);
    std::string unit;
    if (param == "vsl" || param == "v_ref" || param == "sigma_vt") unit = "V";
    else if (param == "c_bl") unit = "F";
    else throw InvalidParams("sweep parameter must be one of vsl, v_ref, sigma_vt, c_bl");

    std::ostringstream os;
    os << "param,value,feasible,calibration_margin_V,v_ref_V,t_strobe_s,min_correct_fraction,worst_margin_V\n";
    if (points > 0) {
        const double a = cli_quantity(from, unit), b = cli_quantity(to, unit);
        for (std::size_t i = 0; i < points; ++i) {
            const double v = points == 1 ? a : a + (b - a) * double(i) / double(points - 1);
            RunConfig pc = rc;
            ModeConfig& mc = pc.mode(m);
            PhasePlan& swept = m == Mode::DualContext ? mc.phase2_if_ram0 : mc.phase1;
            if (param == "vsl") swept.vsl = v;
            if (param == "sigma_vt") pc.mc.variation.sigma_vt = v;
            if (param == "c_bl") pc.sim.c_bl = v;
            if (param != "v_ref") {
                mc.phase1.sense = {};
                mc.phase2_if_ram0.sense = {};
                mc.phase2_if_ram1.sense = {};
            }
            pc.validate();
            os << param << ',' << format_double(v);
            ModeConfig cal;
            try {
                const auto res = calibrate(mc, pc.calibration, pc.sim, pc.mc, pc.device);
                cal = res.mode;
                const auto& first = res.phases.front();
                os << ",1," << format_double(res.worst_margin()) << ',' << format_double(first.v_ref) << ','
                   << format_double(first.t_strobe);
            } catch (const CalibrationInfeasible& e) {
                if (param != "v_ref") {
                    os << ",0," << format_double(e.best_margin()) << ",,,,\n";
                    continue;
                }
                // A fixed reference can still be evaluated; use the template strobe time.
                cal = mc;
                cal.phase1.sense.t_strobe = mc.phase1.window;
                os << ",0," << format_double(e.best_margin()) << ",,";
                os << format_double(cal.phase1.sense.t_strobe);
            }
            if (param == "v_ref") cal.phase1.sense.v_ref = v;
            if (with_mc) {
                const auto rep = run_monte_carlo(cal, pc.mc, pc.sim, pc.device);
                double worst = 1e300;
                for (const auto& c : rep.cases) worst = std::min(worst, c.worst_margin());
                os << ',' << format_double(rep.min_correct_fraction()) << ',' << format_double(worst) << '\n';
            } else {
                os << ",,\n";
            }
        }
    }
    const std::string path = output.empty() ? out_path(rc, "sweep_" + param + "_" + mode_name + ".csv") : output;
    write_file_atomic(path, os.str());
    out << "wrote " << path << '\n';
    return kOk;
}

// --- calibrate ---

int cmd_calibrate(const RunConfig& rc, const std::string& mode_name, std::ostream& out) {
    std::ostringstream csv, yaml;
    csv << "mode,phase,v_ref_V,t_strobe_s,margin_V\n";
    yaml << "modes:\n";
    char buf[200];
    for (Mode m : modes_for(mode_name)) {
        const std::string name(to_string(m));
        ModeConfig tmpl = rc.mode(m);
        const auto res = calibrate(tmpl, rc.calibration, rc.sim, rc.mc, rc.device);
        static const char* labels[] = {"phase1", "phase2_if_ram0", "phase2_if_ram1"};
        const PhasePlan* plans[] = {&res.mode.phase1, &res.mode.phase2_if_ram0, &res.mode.phase2_if_ram1};
        yaml << "  " << name << ":\n";
        for (std::size_t i = 0; i < res.phases.size(); ++i) {
            const auto& s = res.phases[i];
            csv << name << ',' << labels[i] << ',' << format_double(s.v_ref) << ',' << format_double(s.t_strobe) << ','
                << format_double(s.margin) << '\n';
            const std::string indent = m == Mode::DualContext ? "    " : "  ";
            if (m == Mode::DualContext) yaml << "    " << labels[i] << ":\n";
            std::snprintf(buf, sizeof buf, "%s  vsl: %.6g V\n%s  v_ref: %.6f V\n%s  t_strobe: %.6f ns\n",
                          indent.c_str(), plans[i]->vsl, indent.c_str(), s.v_ref, indent.c_str(), s.t_strobe * 1e9);
            yaml << buf;
            std::snprintf(buf, sizeof buf, "# %s %s: worst-case margin %.2f mV\n", name.c_str(), labels[i],
                          s.margin * 1e3);
            out << buf;
        }
    }
    write_file_atomic(out_path(rc, "calibration.csv"), csv.str());
    write_file_atomic(out_path(rc, "calibration.yaml"), yaml.str());
    out << yaml.str();
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ROM-augmented 8T SRAM read simulator"};
    app.require_subcommand(1);
    Common common;
    app.add_option("-c,--config", common.config, "config file (default: $ROMSRAM_CONFIG, else built-in defaults)");
    app.add_option("--set", common.sets, "override a config leaf, e.g. --set sim.c_bl='10 fF'")->allow_extra_args(false);
    app.add_option("-o,--out", common.out_dir, "output directory (overrides output.dir)");

    std::string mode = "ram_only_delay", case_name, output, figure;
    auto* sim = app.add_subcommand("simulate", "single read-event trace");
    sim->add_option("-m,--mode", mode, "rom_only | ram_only_reliability | ram_only_delay | dual_context");
    sim->add_option("--case", case_name, "case code XY (RAM bit, ROM bit)");
    sim->add_option("--output", output, "trace CSV path");
    sim->add_option("--figure", figure, "write bit-line figure bundles: fig2a, fig2b, fig2c, fig2d or all");

    std::string mc_mode = "all";
    auto* mc = app.add_subcommand("mc", "Monte-Carlo yield run");
    mc->add_option("-m,--mode", mc_mode, "mode name or all");

    bool baseline_only = false;
    auto* t1 = app.add_subcommand("table1", "normalized delay, energy and leakage table");
    t1->add_flag("--baseline-only", baseline_only, "measure the baseline cell against itself");

    std::string param, from = "0", to = "0", sweep_mode = "rom_only";
    std::size_t points = 11;
    bool no_mc = false;
    auto* sw = app.add_subcommand("sweep", "parameter sweep");
    sw->add_option("-p,--param", param, "vsl | v_ref | sigma_vt | c_bl")->required();
    sw->add_option("-m,--mode", sweep_mode, "mode name");
    sw->add_option("--from", from, "first value (SI units or with a unit, e.g. -50mV)");
    sw->add_option("--to", to, "last value");
    sw->add_option("-n,--points", points, "number of points (0 gives an empty sweep)");
    sw->add_flag("--no-mc", no_mc, "calibrate only, skip the Monte-Carlo run at each point");
    sw->add_option("--output", output, "sweep CSV path");

    std::string cal_mode = "all";
    auto* cal = app.add_subcommand("calibrate", "fit comparator reference and strobe time");
    cal->add_option("-m,--mode", cal_mode, "mode name or all");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const RunConfig rc = load(common);
        if (*sim) {
            if (!figure.empty()) return cmd_figures(rc, figure, out);
            if (case_name.empty()) throw InvalidParams("simulate needs --case or --figure");
            return cmd_simulate(rc, mode, case_name, output, out, err);
        }
        if (*mc) return cmd_mc(rc, mc_mode, out, err);
        if (*t1) return cmd_table1(rc, baseline_only, out);
        if (*sw) return cmd_sweep(rc, param, sweep_mode, from, to, points, !no_mc, output, out);
        if (*cal) return cmd_calibrate(rc, cal_mode, out);
    } catch (const CalibrationInfeasible& e) {
        err << "calibration infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace romsram::cli
