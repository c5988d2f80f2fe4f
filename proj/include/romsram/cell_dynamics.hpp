#pragma once

#include <functional>
#include <string>
#include <vector>

#include "romsram/device_model.hpp"

namespace romsram {

/// One CS/DC cell: RAM bit on node Q plus the two read-port devices whose
/// common flavor is the ROM bit.
struct BitCell {
    int q = 0;
    VtFlavor rom_flavor = VtFlavor::HighVt;
    DeviceInstance upper_device{VtFlavor::HighVt, 0.0};
    DeviceInstance lower_device{VtFlavor::HighVt, 0.0};

    static BitCell nominal(int q, VtFlavor flavor) {
        return {q, flavor, {flavor, 0.0}, {flavor, 0.0}};
    }
    int rom() const { return rom_bit(rom_flavor); }
    /// 2*q + rom, i.e. 0b00..0b11 with RAM as MSB.
    int case_code() const { return 2 * q + rom(); }
    void validate() const;

    bool operator==(const BitCell&) const = default;
};

/// Effective thresholds of the read stack plus the RAM bit. Lets the same
/// integrator drive both the ROM-augmented cell and the single-flavor baseline.
struct ReadStack {
    double vt_upper = 0.0;
    double vt_lower = 0.0;
    int q = 0;

    static ReadStack from_cell(const BitCell& cell, const DeviceParams& p);
};

/// Piecewise-constant signal: `levels[i]` holds on [starts[i], starts[i+1]).
struct PiecewiseConstant {
    std::vector<double> starts{0.0};
    std::vector<double> levels{0.0};

    static PiecewiseConstant constant(double level) { return {{0.0}, {level}}; }
    double at(double t) const;
};

struct ControlWaveforms {
    PiecewiseConstant rwl;
    PiecewiseConstant vsl;
    double duration = 0.0;

    void validate(double vdd, double reliability_limit) const;
};

/// RWL high on [0, rwl_pulse), SL held at `vsl`, evaluated over `window`.
ControlWaveforms read_waveforms(double vsl, double rwl_pulse, double window, double vdd);

struct SimConfig {
    double vdd = 0.8;                  // V
    double c_bl = 20e-15;              // F
    double dt_max = 20e-12;            // s
    double voltage_tolerance = 1e-4;   // V
    double reliability_limit = 0.5;    // V, bound on |vsl|
    double core_leakage = 0.0;         // W, 6T core leakage added to every cell

    void validate() const;
};

struct VoltageTrace {
    std::vector<double> times;
    std::vector<double> v_rbl;
    double energy_drawn = 0.0;    // J
    double supply_charge = 0.0;   // C
    double max_current_mismatch = 0.0;  // relative, worst accepted stage
    bool reliability_warning = false;
    std::string warning;

    double final_voltage() const { return v_rbl.back(); }
    /// Linear interpolation; throws OutOfRange outside [times.front(), times.back()].
    double at(double t) const;
    /// First time the trace falls to `level` (interpolated), or a negative value if never.
    double crossing_time(double level) const;
};

/// Replaceable drain-current law: (vgs, vds, vt_effective) -> amperes.
using DrainCurrentFn = std::function<double(double, double, double)>;

/// Series current through the read stack at bit-line voltage `v_rbl`, found by
/// bisection on the internal node so that both devices carry the same current.
struct StackSolution {
    double current = 0.0;
    double internal_node = 0.0;
    double mismatch = 0.0;  // |I_upper - I_lower| / max(I_upper, I_lower)
};
StackSolution solve_stack(const DeviceModel& model, const ReadStack& stack, double v_rbl, double rwl,
                          double vsl, double vdd, double tolerance);

VoltageTrace simulate_read_event(const BitCell& cell, const ControlWaveforms& wave, const SimConfig& cfg,
                                 const DeviceParams& params);
VoltageTrace simulate_read_event(const ReadStack& stack, const ControlWaveforms& wave, const SimConfig& cfg,
                                 const DeviceParams& params);
/// Same integrator with a substituted current law (used by closed-form checks).
VoltageTrace simulate_read_event(const ReadStack& stack, const ControlWaveforms& wave, const SimConfig& cfg,
                                 const DrainCurrentFn& current);

/// Standby power: RWL = 0, SL = 0, RBL = vdd. Read-stack leakage times vdd plus cfg.core_leakage.
double leakage_power(const BitCell& cell, const SimConfig& cfg, const DeviceParams& params);
double leakage_power(const ReadStack& stack, const SimConfig& cfg, const DeviceParams& params);

}  // namespace romsram
