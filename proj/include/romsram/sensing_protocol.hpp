#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "romsram/cell_dynamics.hpp"

namespace romsram {

/// Ideal voltage comparator on the read bit-line, strobed at `t_strobe`
/// (measured from RWL rise). v_ref == 0 means "not calibrated yet".
struct SenseConfig {
    double v_ref = 0.0;
    double t_strobe = 0.0;

    bool calibrated() const { return v_ref > 0.0 && t_strobe > 0.0; }
};

enum class Polarity : std::uint8_t { DischargeMeansOne };

/// Control settings of one evaluate phase.
struct PhasePlan {
    double vsl = 0.0;            // V
    double rwl_pulse = 2e-9;     // s
    double window = 2e-9;        // s, evaluate window (>= rwl_pulse)
    double precharge = 0.5e-9;   // s, bit-line restore before this phase
    SenseConfig sense;
    Polarity polarity = Polarity::DischargeMeansOne;

    ControlWaveforms waveforms(double vdd) const { return read_waveforms(vsl, rwl_pulse, window, vdd); }
    void validate(const SimConfig& cfg) const;
    void validate_sense(const SimConfig& cfg) const;
};

enum class Mode : std::uint8_t { RomOnly, RamOnlyReliability, RamOnlyDelay, DualContext };

std::string_view to_string(Mode m);
/// Accepts rom_only, ram_only_reliability, ram_only_delay, dual_context.
Mode mode_from_string(std::string_view name);

struct ModeConfig {
    Mode mode = Mode::RamOnlyReliability;
    PhasePlan phase1;
    PhasePlan phase2_if_ram0;  // DualContext only
    PhasePlan phase2_if_ram1;  // DualContext only

    /// SL sign rules per mode, reliability bound, and for DualContext the
    /// requirement that |phase2_if_ram0.vsl| exceeds the LowVt threshold.
    void validate(const DeviceParams& dev, const SimConfig& cfg) const;
    bool calibrated() const;
    /// Case codes this mode can hold (RomOnly forces q = 0).
    std::vector<int> cases() const;
};

/// Default protocol settings for each mode.
ModeConfig default_mode_config(Mode m);

/// 1 if v_rbl(t_strobe) < v_ref, else 0. Equality resolves to 0.
int sense(const VoltageTrace& trace, const SenseConfig& sc);

int read_rom_only(const BitCell& cell, const ModeConfig& mc, const SimConfig& cfg, const DeviceParams& dev);
int read_ram_only(const BitCell& cell, const ModeConfig& mc, const SimConfig& cfg, const DeviceParams& dev);

/// Phase I with grounded SL yields the RAM bit; phase II re-pre-charges and
/// drives the SL chosen from the phase-I result, then senses the ROM bit.
struct DualContextRead {
    int ram = 0;
    int rom = 0;
    VoltageTrace phase1;
    VoltageTrace phase2;
    double phase2_vsl = 0.0;
};
DualContextRead read_dual_context(const BitCell& cell, const ModeConfig& mc, const SimConfig& cfg,
                                  const DeviceParams& dev);

/// Phase-II plan for a phase-I RAM result.
const PhasePlan& sl_select(int ram_bit, const ModeConfig& mc);

/// Concatenates the two phase traces on one time axis, with each phase's
/// pre-charge interval held at vdd.
VoltageTrace dual_context_timeline(const DualContextRead& r, const ModeConfig& mc, double vdd);

}  // namespace romsram
