#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "romsram/sensing_protocol.hpp"

namespace romsram {

struct McConfig {
    std::size_t samples_per_case = 5000;
    VariationSpec variation;
    std::vector<int> cases;        // empty: every case the mode can hold
    unsigned threads = 0;          // 0: hardware concurrency
    double yield_threshold = 1.0;  // pass/fail line for reports and the CLI

    void validate() const;
};

/// Case code XY: X = RAM bit (q), Y = ROM bit (LowVt = 1).
constexpr int case_ram(int code) { return (code >> 1) & 1; }
constexpr int case_rom(int code) { return code & 1; }
std::string case_label(int code);  // "00".."11"

/// Cell for one Monte-Carlo sample. Devices use
/// draw_index = ((case * samples_per_case + sample) * 2 + position).
BitCell sample_cell(int case_code, std::size_t sample, std::size_t samples_per_case, const VariationSpec& var,
                    const DeviceParams& dev);

/// Seed used for calibration populations, decorrelated from the verification seed.
std::uint64_t calibration_seed(std::uint64_t seed);

struct PhaseSample {
    double v_strobe = 0.0;
    double margin = 0.0;  // > 0 iff the comparator resolves the expected bit
    int expected = 0;
    int sensed = 0;
};

struct SampleRecord {
    int case_code = 0;
    std::size_t sample = 0;
    int phases = 0;
    PhaseSample phase[2];
    bool state_preserved = true;  // q unchanged by the read
    bool correct = false;
    std::string error;            // non-empty if the simulation failed
};

struct PhaseStats {
    double v_min = 0.0, v_max = 0.0, v_mean = 0.0, v_std = 0.0;
    double worst_margin = 0.0;
};

struct CaseReport {
    int case_code = 0;
    std::size_t samples = 0;
    std::size_t correct = 0;
    std::size_t errors = 0;
    std::size_t state_violations = 0;
    int phases = 0;
    PhaseStats phase[2];

    double correct_fraction() const { return samples ? double(correct) / double(samples) : 0.0; }
    double worst_margin() const;
};

struct YieldReport {
    Mode mode = Mode::RomOnly;
    std::vector<CaseReport> cases;
    std::vector<SampleRecord> samples;  // ordered by (case, sample)

    double min_correct_fraction() const;
    bool passes(double threshold) const { return min_correct_fraction() >= threshold; }
};

/// Reads every (case, sample) cell with the calibrated mode and aggregates
/// margins. Samples run in parallel; the result does not depend on the
/// thread count. Per-sample failures are recorded, never thrown.
YieldReport run_monte_carlo(const ModeConfig& mode, const McConfig& mc, const SimConfig& cfg,
                            const DeviceParams& dev = {});

YieldReport aggregate(Mode mode, std::vector<SampleRecord> samples);

// --- calibration ---

struct CalibrationTargets {
    double v_ref_min = 0.01;       // V
    double v_ref_max = 0.79;       // V
    double t_min = 0.1e-9;         // s
    double t_max = 0.0;            // s, 0: the phase window
    int grid_t = 41;
    int refine_iterations = 40;
    double min_margin = 0.010;     // V
    std::size_t samples_per_case = 500;

    void validate(double vdd) const;
};

/// Best comparator setting separating the "0" population from the "1" population.
struct Separation {
    double v_ref = 0.0;
    double t_strobe = 0.0;
    double margin = 0.0;  // worst-case signed margin over both populations
};

/// Worst-case margin of a given (v_ref, t_strobe).
double separation_margin(const std::vector<VoltageTrace>& zeros, const std::vector<VoltageTrace>& ones,
                         double v_ref, double t_strobe);

/// Maximin over (v_ref, t_strobe): coarse grid in t, exact v_ref for each t
/// (centre of the gap, clipped to range), then golden-section refinement in t.
Separation best_separation(const std::vector<VoltageTrace>& zeros, const std::vector<VoltageTrace>& ones,
                           const CalibrationTargets& targets, double window);

/// Traces of `n` variation samples of one case under one phase plan.
std::vector<VoltageTrace> simulate_population(int case_code, const PhasePlan& plan, std::size_t n,
                                              const VariationSpec& var, const SimConfig& cfg,
                                              const DeviceParams& dev, unsigned threads = 0);

struct CalibrationResult {
    ModeConfig mode;
    std::vector<Separation> phases;  // phase I, then (DC) phase II for RAM 0 and RAM 1
    double worst_margin() const;
};

/// Fixes v_ref and t_strobe for every phase of `tmpl`. Throws
/// CalibrationInfeasible if any phase's best margin is below targets.min_margin.
CalibrationResult calibrate(const ModeConfig& tmpl, const CalibrationTargets& targets, const SimConfig& cfg,
                            const McConfig& mc, const DeviceParams& dev = {});

// --- normalized read metrics ---

/// Standard 8T reference: both read-port devices at one threshold.
struct BaselineCell {
    double vt = 0.325;  // V

    static BaselineCell midpoint(const DeviceParams& dev) { return {0.5 * (dev.vt_low + dev.vt_high)}; }
    ReadStack stack(int q) const { return {vt, vt, q}; }
};

struct MetricsOptions {
    double sense_swing = 0.100;  // V of bit-line development that the comparator needs
};

struct ModeMetrics {
    std::string name;
    double delay = 0.0;    // s per bit
    double energy = 0.0;   // J per bit
    double leakage = 0.0;  // W per cell
    double delay_ratio = 1.0;
    double energy_ratio = 1.0;
    double leakage_ratio = 1.0;
};

struct MetricsReport {
    ModeMetrics baseline;
    std::vector<ModeMetrics> modes;
    double sense_swing = 0.0;
};

/// Time for the slowest nominal case that should discharge to develop the
/// sense swing under `plan`.
double phase_delay(const PhasePlan& plan, const std::vector<ReadStack>& discharging, const SimConfig& cfg,
                   const DeviceParams& dev, double sense_swing);

/// Delay: worst nominal case, phases summed for dual-context. Energy: mean over
/// the mode's cases with RWL held for the delay. Leakage: mean over both
/// flavours and both q values. All normalized to the baseline grounded-SL read.
MetricsReport measure_metrics(const std::vector<ModeConfig>& modes, const SimConfig& cfg, const DeviceParams& dev,
                              const BaselineCell& baseline, const MetricsOptions& opt = {});

// --- reports ---

std::string yield_csv(const YieldReport& r);
std::string samples_csv(const YieldReport& r);
std::string metrics_csv(const MetricsReport& r);      // normalized, one row per mode
std::string metrics_raw_csv(const MetricsReport& r);  // SI units, baseline first
std::string summary(const YieldReport& r, double threshold);
std::string summary(const MetricsReport& r);

/// Parsed CSV: header plus rows of fields. Handles quoted fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& text);
std::string csv_field(const std::string& s);
std::string format_double(double v);  // %.17g

std::vector<CaseReport> parse_yield_csv(const std::string& text);
std::vector<ModeMetrics> parse_metrics_csv(const std::string& text);

/// Writes to a temporary file in the same directory, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace romsram
