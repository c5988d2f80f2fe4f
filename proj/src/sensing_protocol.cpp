#include "romsram/sensing_protocol.hpp"

#include <cmath>
#include <string>

#include "romsram/errors.hpp"

namespace romsram {

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::RomOnly: return "rom_only";
        case Mode::RamOnlyReliability: return "ram_only_reliability";
        case Mode::RamOnlyDelay: return "ram_only_delay";
        case Mode::DualContext: return "dual_context";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view name) {
    for (Mode m : {Mode::RomOnly, Mode::RamOnlyReliability, Mode::RamOnlyDelay, Mode::DualContext}) {
        if (to_string(m) == name) return m;
    }
    throw InvalidParams("unknown mode '" + std::string(name) + "'");
}

void PhasePlan::validate(const SimConfig& cfg) const {
    if (std::abs(vsl) > cfg.reliability_limit + 1e-12)
        throw InvalidParams("phase plan: |vsl| exceeds the reliability limit");
    if (!(window > 0.0)) throw InvalidParams("phase plan: window must be > 0");
    if (rwl_pulse < 0.0 || rwl_pulse > window) throw InvalidParams("phase plan: rwl_pulse must lie in [0, window]");
    if (precharge < 0.0) throw InvalidParams("phase plan: precharge interval must be >= 0");
}

void PhasePlan::validate_sense(const SimConfig& cfg) const {
    if (!(sense.v_ref > 0.0 && sense.v_ref < cfg.vdd))
        throw InvalidParams("sense config: v_ref must lie in (0, vdd)");
    if (!(sense.t_strobe > 0.0 && sense.t_strobe <= window))
        throw InvalidParams("sense config: t_strobe must lie in (0, window]");
}

void ModeConfig::validate(const DeviceParams& dev, const SimConfig& cfg) const {
    phase1.validate(cfg);
    const std::string name(to_string(mode));
    switch (mode) {
        case Mode::RomOnly:
        case Mode::RamOnlyDelay:
            if (!(phase1.vsl < 0.0)) throw InvalidParams(name + ": phase1.vsl must be negative");
            break;
        case Mode::RamOnlyReliability:
            if (phase1.vsl != 0.0) throw InvalidParams(name + ": phase1.vsl must be 0");
            break;
        case Mode::DualContext:
            phase2_if_ram0.validate(cfg);
            phase2_if_ram1.validate(cfg);
            if (phase1.vsl != 0.0) throw InvalidParams(name + ": phase1.vsl must be 0");
            if (!(phase2_if_ram0.vsl < 0.0)) throw InvalidParams(name + ": phase2_if_ram0.vsl must be negative");
            if (!(phase2_if_ram1.vsl > 0.0)) throw InvalidParams(name + ": phase2_if_ram1.vsl must be positive");
            if (!(std::abs(phase2_if_ram0.vsl) > dev.vt_low))
                throw InvalidParams(name + ": |phase2_if_ram0.vsl| must exceed the LowVt threshold");
            break;
    }
}

bool ModeConfig::calibrated() const {
    if (!phase1.sense.calibrated()) return false;
    if (mode != Mode::DualContext) return true;
    return phase2_if_ram0.sense.calibrated() && phase2_if_ram1.sense.calibrated();
}

std::vector<int> ModeConfig::cases() const {
    if (mode == Mode::RomOnly) return {0b00, 0b01};
    return {0b00, 0b01, 0b10, 0b11};
}

ModeConfig default_mode_config(Mode m) {
    ModeConfig mc;
    mc.mode = m;
    switch (m) {
        case Mode::RomOnly: mc.phase1.vsl = -0.45; break;
        case Mode::RamOnlyReliability: mc.phase1.vsl = 0.0; break;
        case Mode::RamOnlyDelay: mc.phase1.vsl = -0.10; break;
        case Mode::DualContext:
            mc.phase1.vsl = 0.0;
            mc.phase2_if_ram0.vsl = -0.45;
            mc.phase2_if_ram1.vsl = 0.20;
            break;
    }
    return mc;
}

int sense(const VoltageTrace& trace, const SenseConfig& sc) {
    if (trace.times.empty() || sc.t_strobe < trace.times.front() || sc.t_strobe > trace.times.back())
        throw OutOfRange("sense: strobe time outside the trace");
    return trace.at(sc.t_strobe) < sc.v_ref ? 1 : 0;
}

namespace {

int read_phase(const BitCell& cell, const PhasePlan& plan, const SimConfig& cfg, const DeviceParams& dev) {
    plan.validate_sense(cfg);
    return sense(simulate_read_event(cell, plan.waveforms(cfg.vdd), cfg, dev), plan.sense);
}

}  // namespace

int read_rom_only(const BitCell& cell, const ModeConfig& mc, const SimConfig& cfg, const DeviceParams& dev) {
    if (mc.mode != Mode::RomOnly) throw PreconditionViolation("read_rom_only: mode must be rom_only");
    if (cell.q != 0) throw PreconditionViolation("read_rom_only: cell must hold q = 0");
    mc.validate(dev, cfg);
    return read_phase(cell, mc.phase1, cfg, dev);
}

int read_ram_only(const BitCell& cell, const ModeConfig& mc, const SimConfig& cfg, const DeviceParams& dev) {
    if (mc.mode != Mode::RamOnlyReliability && mc.mode != Mode::RamOnlyDelay)
        throw PreconditionViolation("read_ram_only: mode must be a RAM-only variant");
    mc.validate(dev, cfg);
    return read_phase(cell, mc.phase1, cfg, dev);
}

const PhasePlan& sl_select(int ram_bit, const ModeConfig& mc) {
    if (mc.mode != Mode::DualContext) throw PreconditionViolation("sl_select: mode must be dual_context");
    return ram_bit ? mc.phase2_if_ram1 : mc.phase2_if_ram0;
}

DualContextRead read_dual_context(const BitCell& cell, const ModeConfig& mc, const SimConfig& cfg,
                                  const DeviceParams& dev) {
    if (mc.mode != Mode::DualContext) throw PreconditionViolation("read_dual_context: mode must be dual_context");
    mc.validate(dev, cfg);
    mc.phase1.validate_sense(cfg);
    DualContextRead r;
    r.phase1 = simulate_read_event(cell, mc.phase1.waveforms(cfg.vdd), cfg, dev);
    r.ram = sense(r.phase1, mc.phase1.sense);
    const PhasePlan& p2 = sl_select(r.ram, mc);
    p2.validate_sense(cfg);
    r.phase2_vsl = p2.vsl;
    r.phase2 = simulate_read_event(cell, p2.waveforms(cfg.vdd), cfg, dev);
    r.rom = sense(r.phase2, p2.sense);
    return r;
}

VoltageTrace dual_context_timeline(const DualContextRead& r, const ModeConfig& mc, double vdd) {
    VoltageTrace out;
    double offset = 0.0;
    auto append = [&](const VoltageTrace& tr, double precharge) {
        if (precharge > 0.0) {
            out.times.push_back(offset);
            out.v_rbl.push_back(vdd);
            offset += precharge;
        }
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            out.times.push_back(offset + tr.times[i]);
            out.v_rbl.push_back(tr.v_rbl[i]);
        }
        offset += tr.times.back();
        out.energy_drawn += tr.energy_drawn;
        out.supply_charge += tr.supply_charge;
    };
    append(r.phase1, mc.phase1.precharge);
    append(r.phase2, sl_select(r.ram, mc).precharge);
    return out;
}

}  // namespace romsram
