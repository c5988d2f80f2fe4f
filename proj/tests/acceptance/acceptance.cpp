// One line per acceptance criterion: PASS/FAIL, id, description, detail, wall time.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "romsram/analysis.hpp"
#include "romsram/config.hpp"
#include "romsram/errors.hpp"
#include "romsram/memory_array.hpp"

using namespace romsram;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* id, const char* what, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0.0 && secs >= limit_s) {
        o.pass = false;
        o.detail += " [runtime limit " + std::to_string(limit_s) + " s exceeded]";
    }
    failures += !o.pass;
    std::printf("%s %-3s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, what, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

BitCell nominal(int code) { return BitCell::nominal(case_ram(code), flavor_for_rom_bit(case_rom(code))); }

const RunConfig& defaults() {
    static const RunConfig rc = parse_run_config("");
    return rc;
}

std::vector<ModeConfig>& calibrated_modes() {
    static std::vector<ModeConfig> modes;
    if (modes.empty()) {
        const RunConfig& rc = defaults();
        for (Mode m : {Mode::RomOnly, Mode::RamOnlyReliability, Mode::RamOnlyDelay, Mode::DualContext})
            modes.push_back(calibrate(rc.mode(m), rc.calibration, rc.sim, rc.mc, rc.device).mode);
    }
    return modes;
}

Separation separation_at(double vsl, int zero_case, int one_case, std::size_t n) {
    const RunConfig& rc = defaults();
    PhasePlan plan = rc.rom_only.phase1;
    plan.vsl = vsl;
    const auto zeros = simulate_population(zero_case, plan, n, rc.mc.variation, rc.sim, rc.device, rc.mc.threads);
    const auto ones = simulate_population(one_case, plan, n, rc.mc.variation, rc.sim, rc.device, rc.mc.threads);
    return best_separation(zeros, ones, rc.calibration, plan.window);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "romsram");
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

}  // namespace

int main() {
    const RunConfig& rc = defaults();
    const SimConfig& cfg = rc.sim;
    const DeviceParams& dev = rc.device;
    const std::size_t N = 5000;

    report("1", "four-case discharge ordering at V_SL = -0.10 V", 1.0, [&] {
        const auto wave = read_waveforms(-0.10, 2e-9, 2e-9, cfg.vdd);
        VoltageTrace tr[4];
        for (int c = 0; c < 4; ++c) tr[c] = simulate_read_event(nominal(c), wave, cfg, dev);
        int bad = 0;
        const int points = 1000;
        for (int k = 1; k <= points; ++k) {
            const double t = 2e-9 * k / points;
            const double v0 = tr[0].at(t), v1 = tr[1].at(t), v2 = tr[2].at(t), v3 = tr[3].at(t);
            bad += !(v0 > v1 && v1 > v2 && v2 > v3);
        }
        return Outcome{bad == 0, std::to_string(points - bad) + "/" + std::to_string(points) + " samples ordered"};
    });

    report("2", "SL separability triad, 5000 samples per case", 300.0, [&] {
        const auto a = separation_at(-0.10, 0b00, 0b01, N);
        const auto b = separation_at(0.20, 0b10, 0b11, N);
        const auto c = separation_at(-0.45, 0b00, 0b01, N);
        const bool pa = a.margin < rc.calibration.min_margin, pb = b.margin > 0.0, pc = c.margin > 0.0;
        return Outcome{pa && pb && pc, std::string("(a) -0.10 V 00/01 margin ") + fmt("%.2f mV", a.margin * 1e3) +
                                           (pa ? " infeasible" : " SEPARABLE") + "; (b) +0.20 V 10/11 margin " +
                                           fmt("%.2f mV", b.margin * 1e3) + "; (c) -0.45 V 00/01 margin " +
                                           fmt("%.2f mV", c.margin * 1e3)};
    });

    report("3", "calibrated yield of all four modes, 5000 samples per case", 900.0, [&] {
        McConfig mc = rc.mc;
        mc.samples_per_case = N;
        bool ok = true;
        std::string d;
        for (const auto& mode : calibrated_modes()) {
            const auto rep = run_monte_carlo(mode, mc, cfg, dev);
            std::size_t violations = 0, errors = 0;
            double worst = 1e9;
            for (const auto& c : rep.cases) {
                violations += c.state_violations;
                errors += c.errors;
                worst = std::min(worst, c.worst_margin());
            }
            ok = ok && rep.min_correct_fraction() == 1.0 && violations == 0 && errors == 0;
            d += std::string(to_string(mode.mode)) + " " + fmt("%.4f", rep.min_correct_fraction()) + " (worst " +
                 fmt("%.1f mV", worst * 1e3) + (mode.mode == Mode::DualContext
                                                    ? ", q changed in " + std::to_string(violations) + " samples"
                                                    : std::string()) +
                 "); ";
        }
        return Outcome{ok, d};
    });

    report("4", "dual-context truth table and per-phase outputs", 0.0, [&] {
        const ModeConfig& mode = calibrated_modes()[3];
        // (phase I output, phase II SL sign, phase II output) per case.
        const int want[4][3] = {{0, -1, 0}, {0, -1, 1}, {1, +1, 0}, {1, +1, 1}};
        bool ok = true;
        std::string d;
        for (int c = 0; c < 4; ++c) {
            const BitCell cell = nominal(c);
            const auto r = read_dual_context(cell, mode, cfg, dev);
            const int p1 = sense(r.phase1, mode.phase1.sense);
            const int p2 = sense(r.phase2, sl_select(p1, mode).sense);
            const int sign = r.phase2_vsl < 0 ? -1 : +1;
            ok = ok && p1 == want[c][0] && sign == want[c][1] && p2 == want[c][2] && r.ram == case_ram(c) &&
                 r.rom == case_rom(c) && cell == nominal(c);
            d += case_label(c) + "->(" + std::to_string(r.ram) + "," + std::to_string(r.rom) + ") ";
        }
        return Outcome{ok, d};
    });

    MetricsReport metrics;
    report("5a", "read delay ordering RamOnlyDelay < RomOnly < RamOnlyReliability < DualContext", 0.0, [&] {
        const auto& m = calibrated_modes();
        metrics = measure_metrics({m[2], m[0], m[1], m[3]}, cfg, dev, rc.baseline(), rc.metrics);
        const auto& x = metrics.modes;
        const bool ok = x[0].delay_ratio < x[1].delay_ratio && x[1].delay_ratio < x[2].delay_ratio &&
                        x[2].delay_ratio < x[3].delay_ratio;
        std::string d;
        for (const auto& e : x) d += e.name + " " + fmt("%.3fx ", e.delay_ratio);
        return Outcome{ok, d};
    });
    report("5b", "normalized read energy >= 1.0 for every mode", 0.0, [&] {
        bool ok = !metrics.modes.empty();
        std::string d;
        for (const auto& e : metrics.modes) {
            ok = ok && e.energy_ratio >= 1.0;
            d += e.name + " " + fmt("%.3fx ", e.energy_ratio);
        }
        return Outcome{ok, d};
    });
    report("5c", "balanced-array normalized leakage within [0.95, 1.05]", 0.0, [&] {
        if (metrics.modes.empty()) return Outcome{false, "no metrics"};
        const double r = metrics.modes.front().leakage_ratio;
        return Outcome{r >= 0.95 && r <= 1.05, fmt("%.3fx of the midpoint-V_T baseline", r)};
    });

    report("6a", "constant-current stub matches the linear ramp within 1 mV", 0.0, [&] {
        const double i0 = 1e-6;
        DrainCurrentFn stub = [i0](double, double vds, double) { return vds > 0.0 ? i0 : 0.0; };
        const auto tr = simulate_read_event(ReadStack{0.3, 0.3, 1}, read_waveforms(0.0, 2e-9, 2e-9, cfg.vdd), cfg, stub);
        double worst = 0.0;
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            worst = std::max(worst, std::abs(tr.v_rbl[i] - (cfg.vdd - i0 * tr.times[i] / cfg.c_bl)));
        return Outcome{worst < 1e-3, fmt("max error %.3g V", worst)};
    });
    report("6b", "halving dt_max moves final voltages by less than voltage_tolerance", 0.0, [&] {
        SimConfig fine = cfg;
        fine.dt_max /= 2.0;
        double worst = 0.0;
        for (double vsl : {-0.45, -0.10, 0.0, 0.20})
            for (int c = 0; c < 4; ++c) {
                const auto w = read_waveforms(vsl, 2e-9, 2e-9, cfg.vdd);
                worst = std::max(worst, std::abs(simulate_read_event(nominal(c), w, cfg, dev).final_voltage() -
                                                 simulate_read_event(nominal(c), w, fine, dev).final_voltage()));
            }
        return Outcome{worst < cfg.voltage_tolerance, fmt("max change %.3g V", worst)};
    });
    report("6c", "calibration maximin matches an exhaustive grid search", 0.0, [&] {
        PhasePlan plan = rc.rom_only.phase1;
        const auto zeros = simulate_population(0b00, plan, 20, rc.mc.variation, cfg, dev);
        const auto ones = simulate_population(0b01, plan, 20, rc.mc.variation, cfg, dev);
        const auto s = best_separation(zeros, ones, rc.calibration, plan.window);
        double brute = -1e9;
        for (int i = 0; i <= 400; ++i) {
            const double t = rc.calibration.t_min + (plan.window - rc.calibration.t_min) * i / 400.0;
            for (double v = rc.calibration.v_ref_min; v <= rc.calibration.v_ref_max; v += 1e-4)
                brute = std::max(brute, separation_margin(zeros, ones, v, t));
        }
        const double diff = s.margin - brute;
        return Outcome{diff > -1e-4 && diff < 1e-3 &&
                           std::abs(separation_margin(zeros, ones, s.v_ref, s.t_strobe) - s.margin) < 1e-12,
                       fmt("search %.4f mV", s.margin * 1e3) + fmt(" vs grid %.4f mV", brute * 1e3)};
    });

    report("7", "byte-identical reruns, serial and parallel", 0.0, [&] {
        const fs::path base = fs::current_path() / "acceptance_rerun";
        fs::remove_all(base);
        std::vector<std::string> set{"--set", "mc.samples_per_case=200", "--set", "calibration.samples_per_case=200"};
        auto run_into = [&](const std::string& dir, const std::string& threads, std::vector<std::string> cmd) {
            std::vector<std::string> a{"-o", (base / dir).string(), "--set", "mc.threads=" + threads};
            a.insert(a.end(), set.begin(), set.end());
            a.insert(a.end(), cmd.begin(), cmd.end());
            return run_cli(a);
        };
        int rc_sum = 0;
        for (const char* dir : {"a", "b", "c"}) {
            const std::string threads = dir[0] == 'c' ? "1" : "4";
            rc_sum += run_into(dir, threads, {"mc", "-m", "all"});
            rc_sum += run_into(dir, threads, {"table1"});
            rc_sum += run_into(dir, threads, {"calibrate"});
            rc_sum += run_into(dir, threads, {"simulate", "-m", "dual_context", "--case", "01"});
            rc_sum += run_into(dir, threads, {"sweep", "-p", "vsl", "--from", "-0.3", "--to", "-0.45", "-n", "2"});
        }
        std::size_t files = 0, same = 0;
        for (const auto& e : fs::directory_iterator(base / "a")) {
            ++files;
            const auto name = e.path().filename();
            same += slurp(e.path()) == slurp(base / "b" / name) && slurp(e.path()) == slurp(base / "c" / name);
        }
        fs::remove_all(base);
        return Outcome{rc_sum == 0 && files > 0 && same == files,
                       std::to_string(same) + "/" + std::to_string(files) + " files identical across 3 runs"};
    });

    report("8", "protocol invariants (ROM immutability, flavor independence, SL selection)", 0.0, [&] {
        std::mt19937_64 rng(8);
        RomImage img(8, 8);
        for (std::size_t r = 0; r < 8; ++r)
            for (std::size_t c = 0; c < 8; ++c) img.set(r, c, int(rng() & 1));
        auto a = build_array({8, 8}, img, rc.mc.variation, dev);
        const auto orig = a;
        const auto& modes = calibrated_modes();
        int ops = 0, rom_errors = 0;
        for (; ops < 10000; ++ops) {
            const auto op = rng() % 100;
            if (op < 90) a.write_ram(rng() % 8, rng() % 8, int(rng() & 1));
            else if (op < 97) a.enter_rom_only_mode();
            else a.set_sl_granularity(rng() & 1 ? SlGranularity::PerArray : SlGranularity::PerColumn);
            if (ops % 500 == 499) {
                const std::size_t row = rng() % 8;
                const auto w = a.read_word(a.rom_only_entered() ? modes[0] : modes[3], row, cfg, dev);
                for (std::size_t c = 0; c < 8; ++c) rom_errors += (*w.rom)[c] != img.at(row, c);
            }
            for (std::size_t r = 0; r < 8; ++r)
                for (std::size_t c = 0; c < 8; ++c) {
                    const auto& x = a.cell(r, c);
                    const auto& y = orig.cell(r, c);
                    rom_errors += !(x.rom_flavor == y.rom_flavor && x.upper_device == y.upper_device &&
                                    x.lower_device == y.lower_device);
                }
        }
        int flavor_errors = 0;
        for (const auto* m : {&modes[1], &modes[2]})
            for (int q : {0, 1})
                flavor_errors += read_ram_only(nominal(q * 2), *m, cfg, dev) != read_ram_only(nominal(q * 2 + 1), *m, cfg, dev) ||
                                 read_ram_only(nominal(q * 2), *m, cfg, dev) != q;
        int sl_errors = 0;
        for (int bit : {0, 1}) sl_errors += &sl_select(bit, modes[3]) != (bit ? &modes[3].phase2_if_ram1 : &modes[3].phase2_if_ram0);
        return Outcome{rom_errors == 0 && flavor_errors == 0 && sl_errors == 0,
                       std::to_string(ops) + " ops, " + std::to_string(rom_errors) + " ROM changes, " +
                           std::to_string(flavor_errors) + " flavor-dependent reads, " + std::to_string(sl_errors) +
                           " SL selection errors"};
    });

    std::printf("%d criteria failed\n", failures);
    return failures ? 1 : 0;
}
