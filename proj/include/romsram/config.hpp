#pragma once

#include <optional>
#include <string>
#include <vector>

#include "romsram/analysis.hpp"
#include "romsram/memory_array.hpp"

namespace romsram {

/// The complete input document of a run. See configs/SCHEMA.md.
struct RunConfig {
    int version = 1;
    DeviceParams device;
    SimConfig sim;
    ModeConfig rom_only = default_mode_config(Mode::RomOnly);
    ModeConfig ram_only_reliability = default_mode_config(Mode::RamOnlyReliability);
    ModeConfig ram_only_delay = default_mode_config(Mode::RamOnlyDelay);
    ModeConfig dual_context = default_mode_config(Mode::DualContext);
    ArrayConfig array;
    std::string rom_image;            // path; empty: all-zero image
    std::string rom_format = "text";  // text | hex
    SlGranularity sl_granularity = SlGranularity::PerColumn;
    McConfig mc;                      // mc.variation holds the `variation` section
    CalibrationTargets calibration;
    MetricsOptions metrics;
    std::optional<double> baseline_vt;  // default: midpoint of the two flavours
    std::string output_dir = "out";
    std::string source_dir;  // directory of the loaded file; relative paths resolve against it

    ModeConfig& mode(Mode m);
    const ModeConfig& mode(Mode m) const;
    BaselineCell baseline() const;
    void validate() const;
};

/// Parses "<number> [<prefix>]<unit>", e.g. "-450 mV", "20 fF", "80 mV/dec".
/// `unit` is the SI base unit expected; an empty `unit` means dimensionless.
double parse_quantity(const std::string& text, const std::string& unit);

/// `overrides` are "dotted.path=value" strings applied on top of the document.
RunConfig parse_run_config(const std::string& yaml, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Value of ROMSRAM_CONFIG, or empty.
std::string config_path_from_env();

/// Loads the ROM image named by the config, or an all-zero image if none.
RomImage load_rom_image(const RunConfig& rc);

}  // namespace romsram
