#pragma once

#include <cstdint>
#include <string_view>

namespace romsram {

/// Read-port threshold flavor. The flavor is the ROM bit: HighVt stores 0, LowVt stores 1.
enum class VtFlavor : std::uint8_t { HighVt, LowVt };

constexpr int rom_bit(VtFlavor f) { return f == VtFlavor::LowVt ? 1 : 0; }
constexpr VtFlavor flavor_for_rom_bit(int bit) { return bit ? VtFlavor::LowVt : VtFlavor::HighVt; }
std::string_view to_string(VtFlavor f);

struct DeviceParams {
    double vt_low = 0.20;               // V
    double vt_high = 0.45;              // V
    double subthreshold_swing = 0.080;  // V/decade
    double transconductance_k = 200e-6; // A/V^2
    double dibl_factor = 0.05;
    double off_floor_current = 1e-12;   // A
    double temperature = 300.0;         // K

    double vt_nominal(VtFlavor f) const { return f == VtFlavor::LowVt ? vt_low : vt_high; }
    double thermal_voltage() const;
    /// Throws InvalidParams when an invariant is violated.
    void validate() const;

    bool operator==(const DeviceParams&) const = default;
};

struct DeviceInstance {
    VtFlavor flavor = VtFlavor::HighVt;
    double delta_vt = 0.0;  // V, sampled local mismatch

    bool operator==(const DeviceInstance&) const = default;
};

enum class Distribution : std::uint8_t { Gaussian };

struct VariationSpec {
    double sigma_vt = 0.025;  // V
    std::uint64_t seed = 1;
    Distribution distribution = Distribution::Gaussian;

    void validate() const;
};

/// EKV-style interpolation between exponential subthreshold conduction and
/// square-law saturation, with DIBL and an off-state floor:
///
///   I = I_spec * [ softplus(a)^2 - softplus(a - vds/(2 phi_t))^2 ] + I_floor * (1 - exp(-vds/phi_t))
///   a = (vgs - vt + dibl*vds) / (2 n phi_t),  n = S / (phi_t ln 10),  I_spec = 2 n k phi_t^2
///
/// Far above threshold the forward term tends to k (vgs - vt)^2 / (2n); far below it
/// decays by one decade per `subthreshold_swing` of gate voltage.
class DeviceModel {
public:
    explicit DeviceModel(const DeviceParams& params);

    const DeviceParams& params() const { return params_; }
    double slope_factor() const { return n_; }

    /// Drain current for an explicit effective threshold. vds < 0 is clamped to 0.
    double current(double vgs, double vds, double vt_effective) const;
    double current(double vgs, double vds, const DeviceInstance& d) const {
        return current(vgs, vds, effective_vt(d));
    }
    double effective_vt(const DeviceInstance& d) const {
        return params_.vt_nominal(d.flavor) + d.delta_vt;
    }

private:
    DeviceParams params_;
    double phi_t_;
    double n_;
    double inv_2nphi_;
    double i_spec_;
};

/// Validating one-shot form of DeviceModel::current.
double drain_current(double vgs, double vds, const DeviceInstance& device, const DeviceParams& params);

/// Standard-normal deviate for (seed, counter). Pure function of its arguments.
double gaussian_draw(std::uint64_t seed, std::uint64_t counter);

/// Device with a mismatch draw that depends only on (flavor, spec, draw_index).
/// Draws that would make the effective threshold non-positive are resampled
/// from a derived counter.
DeviceInstance sample_device(VtFlavor flavor, const VariationSpec& spec, std::uint64_t draw_index,
                             const DeviceParams& params = {});

}  // namespace romsram
