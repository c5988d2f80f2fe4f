#include "romsram/device_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "romsram/errors.hpp"

namespace romsram {

namespace {

constexpr double kBoltzmann = 1.380649e-23;
constexpr double kElectronCharge = 1.602176634e-19;

double softplus(double u) {
    if (u > 35.0) return u;
    if (u < -35.0) return std::exp(u);
    return std::log1p(std::exp(u));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1], 53-bit resolution.
double unit_open_low(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::string_view to_string(VtFlavor f) { return f == VtFlavor::LowVt ? "LowVt" : "HighVt"; }

double DeviceParams::thermal_voltage() const { return kBoltzmann * temperature / kElectronCharge; }

void DeviceParams::validate() const {
    auto fail = [](const std::string& m) { throw InvalidParams("device params: " + m); };
    if (!(temperature > 0.0)) fail("temperature must be > 0 K");
    if (!(vt_low > 0.0)) fail("vt_low must be > 0");
    if (!(vt_high > vt_low)) fail("vt_high must exceed vt_low");
    // Thermal limit of the swing at 300 K, with 1% slack.
    const double limit = (kBoltzmann * 300.0 / kElectronCharge) * std::numbers::ln10 * 0.99;
    if (!(subthreshold_swing >= limit)) fail("subthreshold_swing below the thermal limit");
    if (!(subthreshold_swing >= thermal_voltage() * std::numbers::ln10 * 0.99))
        fail("subthreshold_swing below kT/q ln10 at the configured temperature");
    if (!(transconductance_k > 0.0)) fail("transconductance_k must be > 0");
    if (!(off_floor_current > 0.0)) fail("off_floor_current must be > 0");
    if (!(dibl_factor >= 0.0)) fail("dibl_factor must be >= 0");
}

void VariationSpec::validate() const {
    if (!(sigma_vt >= 0.0) || !std::isfinite(sigma_vt))
        throw InvalidParams("variation: sigma_vt must be >= 0");
}

DeviceModel::DeviceModel(const DeviceParams& params) : params_(params) {
    params_.validate();
    phi_t_ = params_.thermal_voltage();
    n_ = params_.subthreshold_swing / (phi_t_ * std::numbers::ln10);
    inv_2nphi_ = 1.0 / (2.0 * n_ * phi_t_);
    i_spec_ = 2.0 * n_ * params_.transconductance_k * phi_t_ * phi_t_;
    // DIBL must not outrun the reverse-term slope or saturation would be non-monotone.
    if (params_.dibl_factor >= n_) throw InvalidParams("device params: dibl_factor must be < slope factor");
}

double DeviceModel::current(double vgs, double vds, double vt_effective) const {
    if (vds <= 0.0) return 0.0;
    const double a = (vgs - vt_effective + params_.dibl_factor * vds) * inv_2nphi_;
    const double b = a - vds / (2.0 * phi_t_);
    const double f = softplus(a);
    const double r = softplus(b);
    const double channel = i_spec_ * (f - r) * (f + r);
    const double floor = params_.off_floor_current * -std::expm1(-vds / phi_t_);
    return channel + floor;
}

double drain_current(double vgs, double vds, const DeviceInstance& device, const DeviceParams& params) {
    return DeviceModel(params).current(vgs, vds, device);
}

double gaussian_draw(std::uint64_t seed, std::uint64_t counter) {
    // Box-Muller on two hashed words; keyed on (seed, counter) only.
    const std::uint64_t key = splitmix64(seed ^ splitmix64(counter));
    const double u1 = unit_open_low(splitmix64(key));
    const double u2 = unit_open_low(splitmix64(key ^ 0xd1b54a32d192ed03ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

DeviceInstance sample_device(VtFlavor flavor, const VariationSpec& spec, std::uint64_t draw_index,
                             const DeviceParams& params) {
    spec.validate();
    DeviceInstance d{flavor, 0.0};
    if (spec.sigma_vt == 0.0) return d;
    const double vt0 = params.vt_nominal(flavor);
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t counter = attempt == 0 ? draw_index : splitmix64(draw_index + (attempt << 40));
        d.delta_vt = spec.sigma_vt * gaussian_draw(spec.seed, counter);
        if (vt0 + d.delta_vt > 0.0) return d;
    }
}

}  // namespace romsram
