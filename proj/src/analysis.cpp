#include "romsram/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "romsram/errors.hpp"

namespace romsram {

namespace {

// Runs fn(i) for i in [0, n) on a pool of threads. Work items write only to
// their own slot, so the result is independent of scheduling. If any items
// throw, the exception of the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::mutex m;
    std::size_t failed_at = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(m);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

double signed_margin(double v, double v_ref, int expected) { return expected ? v_ref - v : v - v_ref; }

PhaseSample evaluate_phase(const VoltageTrace& tr, const SenseConfig& sc, int expected) {
    PhaseSample p;
    p.v_strobe = tr.at(sc.t_strobe);
    p.expected = expected;
    p.sensed = sense(tr, sc);
    p.margin = signed_margin(p.v_strobe, sc.v_ref, expected);
    return p;
}

std::vector<int> resolve_cases(const ModeConfig& mode, const McConfig& mc) {
    const auto allowed = mode.cases();
    if (mc.cases.empty()) return allowed;
    for (int c : mc.cases) {
        if (std::find(allowed.begin(), allowed.end(), c) == allowed.end())
            throw InvalidParams("case " + case_label(c) + " cannot occur in mode " + std::string(to_string(mode.mode)));
    }
    return mc.cases;
}

}  // namespace

void McConfig::validate() const {
    if (samples_per_case < 1) throw InvalidParams("mc config: samples_per_case must be >= 1");
    variation.validate();
    for (int c : cases)
        if (c < 0 || c > 3) throw InvalidParams("mc config: case codes must be 00, 01, 10 or 11");
    if (!(yield_threshold >= 0.0 && yield_threshold <= 1.0))
        throw InvalidParams("mc config: yield_threshold must lie in [0, 1]");
}

std::string case_label(int code) {
    return std::string(1, char('0' + case_ram(code))) + char('0' + case_rom(code));
}

BitCell sample_cell(int case_code, std::size_t sample, std::size_t samples_per_case, const VariationSpec& var,
                    const DeviceParams& dev) {
    const VtFlavor f = flavor_for_rom_bit(case_rom(case_code));
    const std::uint64_t base = static_cast<std::uint64_t>(case_code) * samples_per_case + sample;
    BitCell c;
    c.q = case_ram(case_code);
    c.rom_flavor = f;
    c.upper_device = sample_device(f, var, base * 2 + 0, dev);
    c.lower_device = sample_device(f, var, base * 2 + 1, dev);
    return c;
}

std::uint64_t calibration_seed(std::uint64_t seed) {
    std::uint64_t z = seed + 0xD1B54A32D192ED03ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double CaseReport::worst_margin() const {
    double w = std::numeric_limits<double>::infinity();
    for (int p = 0; p < phases; ++p) w = std::min(w, phase[p].worst_margin);
    return phases ? w : 0.0;
}

double YieldReport::min_correct_fraction() const {
    double f = 1.0;
    for (const auto& c : cases) f = std::min(f, c.correct_fraction());
    return f;
}

YieldReport run_monte_carlo(const ModeConfig& mode, const McConfig& mc, const SimConfig& cfg,
                            const DeviceParams& dev) {
    mc.validate();
    cfg.validate();
    mode.validate(dev, cfg);
    if (!mode.calibrated()) throw PreconditionViolation("run_monte_carlo: mode is not calibrated");
    mode.phase1.validate_sense(cfg);
    if (mode.mode == Mode::DualContext) {
        mode.phase2_if_ram0.validate_sense(cfg);
        mode.phase2_if_ram1.validate_sense(cfg);
    }
    const auto cases = resolve_cases(mode, mc);
    const std::size_t n = mc.samples_per_case;

    std::vector<SampleRecord> records(cases.size() * n);
    parallel_for(records.size(), mc.threads, [&](std::size_t i) {
        SampleRecord& r = records[i];
        r.case_code = cases[i / n];
        r.sample = i % n;
        try {
            const BitCell cell = sample_cell(r.case_code, r.sample, n, mc.variation, dev);
            const int ram = case_ram(r.case_code), rom = case_rom(r.case_code);
            if (mode.mode == Mode::DualContext) {
                const BitCell before = cell;
                const auto dc = read_dual_context(cell, mode, cfg, dev);
                r.phases = 2;
                r.phase[0] = evaluate_phase(dc.phase1, mode.phase1.sense, ram);
                r.phase[1] = evaluate_phase(dc.phase2, sl_select(dc.ram, mode).sense, rom);
                r.state_preserved = cell.q == before.q;
            } else {
                const auto tr = simulate_read_event(cell, mode.phase1.waveforms(cfg.vdd), cfg, dev);
                r.phases = 1;
                r.phase[0] = evaluate_phase(tr, mode.phase1.sense, mode.mode == Mode::RomOnly ? rom : ram);
            }
            r.correct = r.state_preserved;
            for (int p = 0; p < r.phases; ++p)
                r.correct = r.correct && r.phase[p].margin > 0.0 && r.phase[p].sensed == r.phase[p].expected;
        } catch (const std::exception& e) {
            r.error = e.what();
            r.correct = false;
        }
    });
    return aggregate(mode.mode, std::move(records));
}

YieldReport aggregate(Mode mode, std::vector<SampleRecord> samples) {
    std::stable_sort(samples.begin(), samples.end(), [](const SampleRecord& a, const SampleRecord& b) {
        return a.case_code != b.case_code ? a.case_code < b.case_code : a.sample < b.sample;
    });
    YieldReport out;
    out.mode = mode;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j].case_code == samples[i].case_code) ++j;
        CaseReport c;
        c.case_code = samples[i].case_code;
        c.samples = j - i;
        for (std::size_t k = i; k < j; ++k) {
            const auto& s = samples[k];
            c.correct += s.correct ? 1 : 0;
            c.errors += s.error.empty() ? 0 : 1;
            c.state_violations += s.state_preserved ? 0 : 1;
            c.phases = std::max(c.phases, s.phases);
        }
        for (int p = 0; p < c.phases; ++p) {
            PhaseStats& st = c.phase[p];
            st.v_min = std::numeric_limits<double>::infinity();
            st.v_max = -std::numeric_limits<double>::infinity();
            st.worst_margin = std::numeric_limits<double>::infinity();
            // Sums are taken about the first value so identical samples give exactly zero spread.
            double sum = 0.0, shift = 0.0;
            std::size_t m = 0;
            for (std::size_t k = i; k < j; ++k) {
                const auto& s = samples[k];
                if (!s.error.empty() || s.phases <= p) continue;
                const double v = s.phase[p].v_strobe;
                st.v_min = std::min(st.v_min, v);
                st.v_max = std::max(st.v_max, v);
                st.worst_margin = std::min(st.worst_margin, s.phase[p].margin);
                if (m == 0) shift = v;
                sum += v - shift;
                ++m;
            }
            if (m == 0) {
                st = PhaseStats{};
                st.worst_margin = -std::numeric_limits<double>::infinity();
                continue;
            }
            const double mean_shifted = sum / double(m);
            st.v_mean = shift + mean_shifted;
            double ss = 0.0;
            for (std::size_t k = i; k < j; ++k) {
                const auto& s = samples[k];
                if (!s.error.empty() || s.phases <= p) continue;
                const double d = (s.phase[p].v_strobe - shift) - mean_shifted;
                ss += d * d;
            }
            st.v_std = m > 1 ? std::sqrt(ss / double(m - 1)) : 0.0;
        }
        out.cases.push_back(c);
        i = j;
    }
    out.samples = std::move(samples);
    return out;
}

// --- calibration ---

void CalibrationTargets::validate(double vdd) const {
    if (!(v_ref_min > 0.0 && v_ref_min < v_ref_max && v_ref_max < vdd))
        throw InvalidParams("calibration: need 0 < v_ref_min < v_ref_max < vdd");
    if (!(t_min > 0.0)) throw InvalidParams("calibration: t_min must be > 0");
    if (t_max != 0.0 && !(t_max > t_min)) throw InvalidParams("calibration: t_max must exceed t_min");
    if (grid_t < 2) throw InvalidParams("calibration: grid_t must be >= 2");
    if (refine_iterations < 0) throw InvalidParams("calibration: refine_iterations must be >= 0");
    if (samples_per_case < 1) throw InvalidParams("calibration: samples_per_case must be >= 1");
}

double separation_margin(const std::vector<VoltageTrace>& zeros, const std::vector<VoltageTrace>& ones,
                         double v_ref, double t_strobe) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& z : zeros) m = std::min(m, z.at(t_strobe) - v_ref);
    for (const auto& o : ones) m = std::min(m, v_ref - o.at(t_strobe));
    return m;
}

Separation best_separation(const std::vector<VoltageTrace>& zeros, const std::vector<VoltageTrace>& ones,
                           const CalibrationTargets& targets, double window) {
    if (zeros.empty() || ones.empty()) throw InvalidParams("calibration: both populations must be non-empty");
    const double t_lo = targets.t_min;
    const double t_hi = targets.t_max > 0.0 ? std::min(targets.t_max, window) : window;
    if (!(t_hi > t_lo)) throw InvalidParams("calibration: empty strobe-time range");

    auto at_time = [&](double t) {
        double lo0 = std::numeric_limits<double>::infinity();
        double hi1 = -std::numeric_limits<double>::infinity();
        for (const auto& z : zeros) lo0 = std::min(lo0, z.at(t));
        for (const auto& o : ones) hi1 = std::max(hi1, o.at(t));
        const double v = std::clamp(0.5 * (lo0 + hi1), targets.v_ref_min, targets.v_ref_max);
        return Separation{v, t, std::min(lo0 - v, v - hi1)};
    };

    const int g = targets.grid_t;
    const double step = (t_hi - t_lo) / (g - 1);
    Separation best = at_time(t_lo);
    int best_k = 0;
    for (int k = 1; k < g; ++k) {
        const Separation s = at_time(k == g - 1 ? t_hi : t_lo + k * step);
        if (s.margin > best.margin) {
            best = s;
            best_k = k;
        }
    }

    // Golden-section refinement between the grid neighbours of the best point.
    double a = t_lo + std::max(0, best_k - 1) * step;
    double b = std::min(t_hi, t_lo + std::min(g - 1, best_k + 1) * step);
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    Separation s1 = at_time(x1), s2 = at_time(x2);
    for (int it = 0; it < targets.refine_iterations; ++it) {
        if (s1.margin >= s2.margin) {
            b = x2;
            x2 = x1;
            s2 = s1;
            x1 = b - r * (b - a);
            s1 = at_time(x1);
        } else {
            a = x1;
            x1 = x2;
            s1 = s2;
            x2 = a + r * (b - a);
            s2 = at_time(x2);
        }
    }
    for (const auto& s : {s1, s2})
        if (s.margin > best.margin) best = s;
    return best;
}

std::vector<VoltageTrace> simulate_population(int case_code, const PhasePlan& plan, std::size_t n,
                                              const VariationSpec& var, const SimConfig& cfg,
                                              const DeviceParams& dev, unsigned threads) {
    std::vector<VoltageTrace> out(n);
    const auto wave = plan.waveforms(cfg.vdd);
    parallel_for(n, threads, [&](std::size_t i) {
        out[i] = simulate_read_event(sample_cell(case_code, i, n, var, dev), wave, cfg, dev);
    });
    return out;
}

double CalibrationResult::worst_margin() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& p : phases) w = std::min(w, p.margin);
    return w;
}

CalibrationResult calibrate(const ModeConfig& tmpl, const CalibrationTargets& targets, const SimConfig& cfg,
                            const McConfig& mc, const DeviceParams& dev) {
    cfg.validate();
    tmpl.validate(dev, cfg);
    targets.validate(cfg.vdd);
    mc.variation.validate();

    VariationSpec var = mc.variation;
    var.seed = calibration_seed(mc.variation.seed);
    const std::size_t n = targets.samples_per_case;

    auto population = [&](std::initializer_list<int> codes, const PhasePlan& plan) {
        std::vector<VoltageTrace> all;
        for (int c : codes) {
            auto p = simulate_population(c, plan, n, var, cfg, dev, mc.threads);
            std::move(p.begin(), p.end(), std::back_inserter(all));
        }
        return all;
    };
    CalibrationResult res;
    res.mode = tmpl;
    auto fit = [&](PhasePlan& plan, std::initializer_list<int> zeros, std::initializer_list<int> ones,
                   const std::string& label) {
        const Separation s = best_separation(population(zeros, plan), population(ones, plan), targets, plan.window);
        if (s.margin < targets.min_margin) {
            throw CalibrationInfeasible(std::string(to_string(tmpl.mode)) + " " + label +
                                            ": best worst-case margin " + std::to_string(s.margin * 1e3) +
                                            " mV is below the " + std::to_string(targets.min_margin * 1e3) +
                                            " mV minimum",
                                        s.margin);
        }
        plan.sense = {s.v_ref, s.t_strobe};
        res.phases.push_back(s);
    };

    switch (tmpl.mode) {
        case Mode::RomOnly: fit(res.mode.phase1, {0b00}, {0b01}, "phase I"); break;
        case Mode::RamOnlyReliability:
        case Mode::RamOnlyDelay: fit(res.mode.phase1, {0b00, 0b01}, {0b10, 0b11}, "phase I"); break;
        case Mode::DualContext:
            fit(res.mode.phase1, {0b00, 0b01}, {0b10, 0b11}, "phase I");
            fit(res.mode.phase2_if_ram0, {0b00}, {0b01}, "phase II (RAM 0)");
            fit(res.mode.phase2_if_ram1, {0b10}, {0b11}, "phase II (RAM 1)");
            break;
    }
    return res;
}

// --- metrics ---

namespace {

ReadStack nominal_stack(int code, const DeviceParams& dev) {
    const double vt = dev.vt_nominal(flavor_for_rom_bit(case_rom(code)));
    return {vt, vt, case_ram(code)};
}

// Energy of one read under `vsl` with RWL held for `pulse`, up to the decision point.
double read_energy(const ReadStack& s, double vsl, double pulse, const SimConfig& cfg, const DeviceParams& dev) {
    return simulate_read_event(s, read_waveforms(vsl, pulse, pulse, cfg.vdd), cfg, dev).energy_drawn;
}

}  // namespace

double phase_delay(const PhasePlan& plan, const std::vector<ReadStack>& discharging, const SimConfig& cfg,
                   const DeviceParams& dev, double sense_swing) {
    if (!(sense_swing > 0.0 && sense_swing < cfg.vdd)) throw InvalidParams("sense_swing must lie in (0, vdd)");
    double worst = 0.0;
    for (const auto& s : discharging) {
        double horizon = plan.window;
        double t = -1.0;
        for (int tries = 0; tries < 8 && t < 0.0; ++tries, horizon *= 4.0) {
            const auto tr = simulate_read_event(s, read_waveforms(plan.vsl, horizon, horizon, cfg.vdd), cfg, dev);
            t = tr.crossing_time(cfg.vdd - sense_swing);
        }
        if (t < 0.0) throw NonConvergence("phase_delay: bit line never develops the sense swing");
        worst = std::max(worst, t);
    }
    return worst;
}

MetricsReport measure_metrics(const std::vector<ModeConfig>& modes, const SimConfig& cfg, const DeviceParams& dev,
                              const BaselineCell& baseline, const MetricsOptions& opt) {
    cfg.validate();
    MetricsReport rep;
    rep.sense_swing = opt.sense_swing;

    PhasePlan grounded;
    grounded.vsl = 0.0;
    rep.baseline.name = "baseline_8t";
    rep.baseline.delay = phase_delay(grounded, {baseline.stack(1)}, cfg, dev, opt.sense_swing);
    rep.baseline.energy = 0.5 * (read_energy(baseline.stack(0), 0.0, rep.baseline.delay, cfg, dev) +
                                 read_energy(baseline.stack(1), 0.0, rep.baseline.delay, cfg, dev));
    rep.baseline.leakage =
        0.5 * (leakage_power(baseline.stack(0), cfg, dev) + leakage_power(baseline.stack(1), cfg, dev));

    // Standby leakage does not depend on the read protocol: balanced image, both RAM values.
    double leak = 0.0;
    for (int code = 0; code < 4; ++code) leak += leakage_power(nominal_stack(code, dev), cfg, dev);
    leak /= 4.0;

    auto stacks = [&](std::initializer_list<int> codes) {
        std::vector<ReadStack> v;
        for (int c : codes) v.push_back(nominal_stack(c, dev));
        return v;
    };

    for (const auto& mc : modes) {
        mc.validate(dev, cfg);
        ModeMetrics m;
        m.name = std::string(to_string(mc.mode));
        m.leakage = leak;
        const auto cases = mc.cases();
        double e = 0.0;
        if (mc.mode == Mode::DualContext) {
            const double d1 = phase_delay(mc.phase1, stacks({0b10, 0b11}), cfg, dev, opt.sense_swing);
            const double d2 =
                std::max(phase_delay(mc.phase2_if_ram0, stacks({0b01}), cfg, dev, opt.sense_swing),
                         phase_delay(mc.phase2_if_ram1, stacks({0b11}), cfg, dev, opt.sense_swing));
            m.delay = d1 + d2;
            for (int c : cases) {
                const auto s = nominal_stack(c, dev);
                e += read_energy(s, mc.phase1.vsl, d1, cfg, dev) +
                     read_energy(s, sl_select(case_ram(c), mc).vsl, d2, cfg, dev);
            }
        } else {
            const auto discharging =
                mc.mode == Mode::RomOnly ? stacks({0b01}) : stacks({0b10, 0b11});
            m.delay = phase_delay(mc.phase1, discharging, cfg, dev, opt.sense_swing);
            for (int c : cases) e += read_energy(nominal_stack(c, dev), mc.phase1.vsl, m.delay, cfg, dev);
        }
        m.energy = e / double(cases.size());
        m.delay_ratio = m.delay / rep.baseline.delay;
        m.energy_ratio = m.energy / rep.baseline.energy;
        m.leakage_ratio = m.leakage / rep.baseline.leakage;
        rep.modes.push_back(m);
    }
    return rep;
}

}  // namespace romsram
