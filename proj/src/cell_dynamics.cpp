#include "romsram/cell_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "romsram/errors.hpp"

namespace romsram {

void BitCell::validate() const {
    if (q != 0 && q != 1) throw InvalidParams("bit cell: q must be 0 or 1");
    if (upper_device.flavor != rom_flavor || lower_device.flavor != rom_flavor)
        throw InvalidParams("bit cell: both read-port devices must share the ROM flavor");
}

ReadStack ReadStack::from_cell(const BitCell& cell, const DeviceParams& p) {
    cell.validate();
    return {p.vt_nominal(cell.upper_device.flavor) + cell.upper_device.delta_vt,
            p.vt_nominal(cell.lower_device.flavor) + cell.lower_device.delta_vt, cell.q};
}

double PiecewiseConstant::at(double t) const {
    auto it = std::upper_bound(starts.begin(), starts.end(), t);
    if (it == starts.begin()) return levels.front();
    return levels[static_cast<std::size_t>(std::distance(starts.begin(), it) - 1)];
}

void ControlWaveforms::validate(double vdd, double reliability_limit) const {
    if (!(duration > 0.0)) throw InvalidParams("waveforms: duration must be > 0");
    for (const auto* sig : {&rwl, &vsl}) {
        if (sig->starts.empty() || sig->starts.size() != sig->levels.size())
            throw InvalidParams("waveforms: each signal needs matching segment starts and levels");
        if (sig->starts.front() != 0.0) throw InvalidParams("waveforms: first segment must start at t = 0");
        for (std::size_t i = 1; i < sig->starts.size(); ++i) {
            if (!(sig->starts[i] > sig->starts[i - 1]))
                throw InvalidParams("waveforms: segment times must be strictly increasing");
        }
        if (sig->starts.back() > duration) throw InvalidParams("waveforms: segment starts beyond duration");
    }
    for (double l : rwl.levels) {
        if (l != 0.0 && l != vdd) throw InvalidParams("waveforms: RWL levels must be 0 or vdd");
    }
    for (double l : vsl.levels) {
        if (std::abs(l) > reliability_limit + 1e-12)
            throw InvalidParams("waveforms: |vsl| exceeds the reliability limit");
    }
}

ControlWaveforms read_waveforms(double vsl, double rwl_pulse, double window, double vdd) {
    ControlWaveforms w;
    w.duration = window;
    w.vsl = PiecewiseConstant::constant(vsl);
    if (rwl_pulse <= 0.0) {
        w.rwl = PiecewiseConstant::constant(0.0);
    } else if (rwl_pulse >= window) {
        w.rwl = PiecewiseConstant::constant(vdd);
    } else {
        w.rwl = {{0.0, rwl_pulse}, {vdd, 0.0}};
    }
    return w;
}

void SimConfig::validate() const {
    if (!(vdd > 0.0)) throw InvalidParams("sim config: vdd must be > 0");
    if (!(c_bl > 0.0)) throw InvalidParams("sim config: c_bl must be > 0");
    if (!(dt_max > 0.0)) throw InvalidParams("sim config: dt_max must be > 0");
    if (!(voltage_tolerance > 0.0)) throw InvalidParams("sim config: voltage_tolerance must be > 0");
    if (!(reliability_limit >= 0.0)) throw InvalidParams("sim config: reliability_limit must be >= 0");
    if (!(core_leakage >= 0.0)) throw InvalidParams("sim config: core_leakage must be >= 0");
}

double VoltageTrace::at(double t) const {
    if (times.empty()) throw OutOfRange("trace: empty");
    // Accept rounding noise at the ends of the window.
    const double slack = 1e-9 * (times.back() - times.front());
    if (t < times.front() - slack || t > times.back() + slack)
        throw OutOfRange("trace: time outside the simulated window");
    t = std::clamp(t, times.front(), times.back());
    auto it = std::lower_bound(times.begin(), times.end(), t);
    const auto i = static_cast<std::size_t>(std::distance(times.begin(), it));
    if (times[i] == t) return v_rbl[i];
    const double t0 = times[i - 1], t1 = times[i];
    const double w = (t - t0) / (t1 - t0);
    return v_rbl[i - 1] + w * (v_rbl[i] - v_rbl[i - 1]);
}

double VoltageTrace::crossing_time(double level) const {
    if (v_rbl.empty()) return -1.0;
    if (v_rbl.front() <= level) return times.front();
    for (std::size_t i = 1; i < v_rbl.size(); ++i) {
        if (v_rbl[i] <= level) {
            const double dv = v_rbl[i - 1] - v_rbl[i];
            const double w = dv > 0.0 ? (v_rbl[i - 1] - level) / dv : 1.0;
            return times[i - 1] + w * (times[i] - times[i - 1]);
        }
    }
    return -1.0;
}

namespace {

template <class Law>
StackSolution solve_stack_impl(const Law& law, const ReadStack& s, double v, double rwl, double vsl,
                               double vdd, double tol) {
    if (v <= vsl) return {0.0, vsl, 0.0};
    const double vgs_low = (s.q ? vdd : 0.0) - vsl;
    auto upper = [&](double x) { return law(rwl - x, v - x, s.vt_upper); };
    auto lower = [&](double x) { return law(vgs_low, x - vsl, s.vt_lower); };
    double lo = vsl, hi = v;
    double f_lo = upper(lo), f_hi = -lower(hi);
    for (int it = 0; hi - lo > tol; ++it) {
        if (it > 200) throw NonConvergence("stack solve: bisection did not converge");
        const double x = 0.5 * (lo + hi);
        const double f = upper(x) - lower(x);
        if (!std::isfinite(f)) throw NonConvergence("stack solve: non-finite current");
        if (f > 0.0) {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
            f_hi = f;
        }
    }
    // Final false-position step inside the tiny bracket.
    const double x = f_lo > f_hi ? lo + (hi - lo) * f_lo / (f_lo - f_hi) : 0.5 * (lo + hi);
    const double iu = upper(x), il = lower(x);
    const double scale = std::max({iu, il, 1e-300});
    return {0.5 * (iu + il), x, std::abs(iu - il) / scale};
}

template <class Law>
VoltageTrace integrate(const Law& law, const ReadStack& stack, const ControlWaveforms& wave,
                       const SimConfig& cfg) {
    cfg.validate();
    wave.validate(cfg.vdd, cfg.reliability_limit);
    if (stack.q != 0 && stack.q != 1) throw InvalidParams("read stack: q must be 0 or 1");

    std::vector<double> breaks;
    for (const auto* sig : {&wave.rwl, &wave.vsl})
        for (double s : sig->starts)
            if (s > 0.0 && s < wave.duration) breaks.push_back(s);
    breaks.push_back(wave.duration);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const double solve_tol = cfg.voltage_tolerance * 1e-2;
    const double step_tol = cfg.voltage_tolerance * 1e-2;
    // Any device terminal pair above the supply counts as overstress.
    const double stress_limit = cfg.vdd;

    VoltageTrace tr;
    tr.times.push_back(0.0);
    tr.v_rbl.push_back(cfg.vdd);

    double v = cfg.vdd, t = 0.0, h = cfg.dt_max, sl_energy = 0.0;
    for (double seg_end : breaks) {
        const double rwl = wave.rwl.at(t);
        const double vsl = wave.vsl.at(t);
        const double vg_low = stack.q ? cfg.vdd : 0.0;
        StackSolution last{};
        auto rhs = [&](double y) {
            last = solve_stack_impl(law, stack, y, rwl, vsl, cfg.vdd, solve_tol);
            tr.max_current_mismatch = std::max(tr.max_current_mismatch, last.mismatch);
            return -last.current / cfg.c_bl;
        };
        auto check_stress = [&](double y, double x) {
            const double pairs[] = {rwl - x, rwl - y, y - x, vg_low - vsl, vg_low - x, x - vsl};
            for (double p : pairs) {
                if (std::abs(p) > stress_limit + 1e-12 && !tr.reliability_warning) {
                    std::ostringstream os;
                    os << "terminal voltage " << std::abs(p) << " V exceeds vdd at t = " << t;
                    tr.reliability_warning = true;
                    tr.warning = os.str();
                }
            }
        };
        while (seg_end - t > 1e-6 * cfg.dt_max) {
            h = std::min({h, cfg.dt_max, seg_end - t});
            const double k1 = rhs(v);
            check_stress(v, last.internal_node);
            // Heun step over h versus two Heun steps over h/2.
            const double full = v + 0.5 * h * (k1 + rhs(v + h * k1));
            const double hh = 0.5 * h;
            const double mid = v + 0.5 * hh * (k1 + rhs(v + hh * k1));
            const double k1m = rhs(mid);
            const double two = mid + 0.5 * hh * (k1m + rhs(mid + hh * k1m));
            const double err = std::abs(two - full) / 3.0;
            if (err > step_tol && h > 1e-18) {
                h *= 0.5;
                continue;
            }
            double next = two + (two - full) / 3.0;
            next = std::min(next, v);
            next = std::max(next, std::min(v, vsl));
            sl_energy += std::abs(vsl) * cfg.c_bl * (v - next);
            v = next;
            t = (seg_end - t - h) <= 1e-6 * cfg.dt_max ? seg_end : t + h;
            tr.times.push_back(t);
            tr.v_rbl.push_back(v);
            if (err < step_tol / 8.0) h *= 1.5;
        }
        t = seg_end;
        tr.times.back() = seg_end;
    }
    tr.supply_charge = cfg.c_bl * (cfg.vdd - v);
    tr.energy_drawn = cfg.vdd * tr.supply_charge + sl_energy;
    return tr;
}

}  // namespace

StackSolution solve_stack(const DeviceModel& model, const ReadStack& stack, double v_rbl, double rwl,
                          double vsl, double vdd, double tolerance) {
    auto law = [&model](double vgs, double vds, double vt) { return model.current(vgs, vds, vt); };
    return solve_stack_impl(law, stack, v_rbl, rwl, vsl, vdd, tolerance);
}

VoltageTrace simulate_read_event(const ReadStack& stack, const ControlWaveforms& wave, const SimConfig& cfg,
                                 const DeviceParams& params) {
    const DeviceModel model(params);
    auto law = [&model](double vgs, double vds, double vt) { return model.current(vgs, vds, vt); };
    return integrate(law, stack, wave, cfg);
}

VoltageTrace simulate_read_event(const BitCell& cell, const ControlWaveforms& wave, const SimConfig& cfg,
                                 const DeviceParams& params) {
    return simulate_read_event(ReadStack::from_cell(cell, params), wave, cfg, params);
}

VoltageTrace simulate_read_event(const ReadStack& stack, const ControlWaveforms& wave, const SimConfig& cfg,
                                 const DrainCurrentFn& current) {
    return integrate(current, stack, wave, cfg);
}

double leakage_power(const ReadStack& stack, const SimConfig& cfg, const DeviceParams& params) {
    cfg.validate();
    const DeviceModel model(params);
    const auto s = solve_stack(model, stack, cfg.vdd, 0.0, 0.0, cfg.vdd, cfg.voltage_tolerance * 1e-4);
    return s.current * cfg.vdd + cfg.core_leakage;
}

double leakage_power(const BitCell& cell, const SimConfig& cfg, const DeviceParams& params) {
    return leakage_power(ReadStack::from_cell(cell, params), cfg, params);
}

}  // namespace romsram
