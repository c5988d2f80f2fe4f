#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include "romsram/analysis.hpp"
#include "romsram/config.hpp"
#include "romsram/errors.hpp"
#include "romsram/memory_array.hpp"

namespace py = pybind11;
using namespace romsram;

PYBIND11_MODULE(_romsram, m) {
    m.doc() = "ROM-augmented 8T SRAM read simulator";

    static py::exception<Error> base(m, "Error");
    static py::exception<InvalidParams> invalid(m, "InvalidParams", base.ptr());
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    static py::exception<CalibrationInfeasible> infeasible(m, "CalibrationInfeasible", base.ptr());
    static py::exception<ModeStateMismatch> mode_state(m, "ModeStateMismatch", base.ptr());
    static py::exception<OutOfRange> out_of_range(m, "OutOfRange", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidParams& e) {
            py::set_error(invalid, e.what());
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const CalibrationInfeasible& e) {
            py::set_error(infeasible, e.what());
        } catch (const ModeStateMismatch& e) {
            py::set_error(mode_state, e.what());
        } catch (const OutOfRange& e) {
            py::set_error(out_of_range, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    py::enum_<VtFlavor>(m, "VtFlavor").value("HighVt", VtFlavor::HighVt).value("LowVt", VtFlavor::LowVt);
    py::enum_<Mode>(m, "Mode")
        .value("RomOnly", Mode::RomOnly)
        .value("RamOnlyReliability", Mode::RamOnlyReliability)
        .value("RamOnlyDelay", Mode::RamOnlyDelay)
        .value("DualContext", Mode::DualContext);
    m.def("mode_from_string", [](const std::string& s) { return mode_from_string(s); });
    m.def("mode_name", [](Mode md) { return std::string(to_string(md)); });

    py::class_<DeviceParams>(m, "DeviceParams")
        .def(py::init<>())
        .def_readwrite("vt_low", &DeviceParams::vt_low)
        .def_readwrite("vt_high", &DeviceParams::vt_high)
        .def_readwrite("subthreshold_swing", &DeviceParams::subthreshold_swing)
        .def_readwrite("transconductance_k", &DeviceParams::transconductance_k)
        .def_readwrite("dibl_factor", &DeviceParams::dibl_factor)
        .def_readwrite("off_floor_current", &DeviceParams::off_floor_current)
        .def_readwrite("temperature", &DeviceParams::temperature)
        .def("validate", &DeviceParams::validate);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("vdd", &SimConfig::vdd)
        .def_readwrite("c_bl", &SimConfig::c_bl)
        .def_readwrite("dt_max", &SimConfig::dt_max)
        .def_readwrite("voltage_tolerance", &SimConfig::voltage_tolerance)
        .def_readwrite("reliability_limit", &SimConfig::reliability_limit)
        .def_readwrite("core_leakage", &SimConfig::core_leakage);

    py::class_<VariationSpec>(m, "VariationSpec")
        .def(py::init<>())
        .def_readwrite("sigma_vt", &VariationSpec::sigma_vt)
        .def_readwrite("seed", &VariationSpec::seed);

    py::class_<DeviceInstance>(m, "DeviceInstance")
        .def(py::init<VtFlavor, double>(), py::arg("flavor"), py::arg("delta_vt") = 0.0)
        .def_readwrite("flavor", &DeviceInstance::flavor)
        .def_readwrite("delta_vt", &DeviceInstance::delta_vt);

    m.def("drain_current", &drain_current, py::arg("vgs"), py::arg("vds"), py::arg("device"),
          py::arg("params") = DeviceParams{});
    m.def("sample_device", &sample_device, py::arg("flavor"), py::arg("spec"), py::arg("draw_index"),
          py::arg("params") = DeviceParams{});

    py::class_<BitCell>(m, "BitCell")
        .def_static("nominal", &BitCell::nominal, py::arg("q"), py::arg("flavor"))
        .def_readwrite("q", &BitCell::q)
        .def_readonly("rom_flavor", &BitCell::rom_flavor)
        .def_readonly("upper_device", &BitCell::upper_device)
        .def_readonly("lower_device", &BitCell::lower_device)
        .def_property_readonly("rom", &BitCell::rom)
        .def_property_readonly("case_code", &BitCell::case_code)
        .def(py::self == py::self);
    m.def("sample_cell", &sample_cell, py::arg("case_code"), py::arg("sample"), py::arg("samples_per_case"),
          py::arg("variation"), py::arg("params") = DeviceParams{});

    py::class_<VoltageTrace>(m, "VoltageTrace")
        .def_readonly("times", &VoltageTrace::times)
        .def_readonly("v_rbl", &VoltageTrace::v_rbl)
        .def_readonly("energy_drawn", &VoltageTrace::energy_drawn)
        .def_readonly("reliability_warning", &VoltageTrace::reliability_warning)
        .def_readonly("warning", &VoltageTrace::warning)
        .def("final_voltage", &VoltageTrace::final_voltage)
        .def("at", &VoltageTrace::at)
        .def("crossing_time", &VoltageTrace::crossing_time);

    m.def(
        "simulate_read",
        [](const BitCell& cell, double vsl, double rwl_pulse, double window, const SimConfig& cfg,
           const DeviceParams& dev) { return simulate_read_event(cell, read_waveforms(vsl, rwl_pulse, window, cfg.vdd), cfg, dev); },
        py::arg("cell"), py::arg("vsl"), py::arg("rwl_pulse") = 2e-9, py::arg("window") = 2e-9,
        py::arg("sim") = SimConfig{}, py::arg("params") = DeviceParams{});
    m.def("leakage_power", py::overload_cast<const BitCell&, const SimConfig&, const DeviceParams&>(&leakage_power),
          py::arg("cell"), py::arg("sim") = SimConfig{}, py::arg("params") = DeviceParams{});

    py::class_<SenseConfig>(m, "SenseConfig")
        .def(py::init<>())
        .def(py::init([](double v, double t) { return SenseConfig{v, t}; }), py::arg("v_ref"), py::arg("t_strobe"))
        .def_readwrite("v_ref", &SenseConfig::v_ref)
        .def_readwrite("t_strobe", &SenseConfig::t_strobe)
        .def("calibrated", &SenseConfig::calibrated);

    py::class_<PhasePlan>(m, "PhasePlan")
        .def(py::init<>())
        .def_readwrite("vsl", &PhasePlan::vsl)
        .def_readwrite("rwl_pulse", &PhasePlan::rwl_pulse)
        .def_readwrite("window", &PhasePlan::window)
        .def_readwrite("precharge", &PhasePlan::precharge)
        .def_readwrite("sense", &PhasePlan::sense);

    py::class_<ModeConfig>(m, "ModeConfig")
        .def_readwrite("mode", &ModeConfig::mode)
        .def_readwrite("phase1", &ModeConfig::phase1)
        .def_readwrite("phase2_if_ram0", &ModeConfig::phase2_if_ram0)
        .def_readwrite("phase2_if_ram1", &ModeConfig::phase2_if_ram1)
        .def("calibrated", &ModeConfig::calibrated)
        .def("cases", &ModeConfig::cases);
    m.def("default_mode_config", &default_mode_config);

    m.def("sense", &sense);
    m.def("read_rom_only", &read_rom_only, py::arg("cell"), py::arg("mode"), py::arg("sim") = SimConfig{},
          py::arg("params") = DeviceParams{});
    m.def("read_ram_only", &read_ram_only, py::arg("cell"), py::arg("mode"), py::arg("sim") = SimConfig{},
          py::arg("params") = DeviceParams{});
    py::class_<DualContextRead>(m, "DualContextRead")
        .def_readonly("ram", &DualContextRead::ram)
        .def_readonly("rom", &DualContextRead::rom)
        .def_readonly("phase1", &DualContextRead::phase1)
        .def_readonly("phase2", &DualContextRead::phase2)
        .def_readonly("phase2_vsl", &DualContextRead::phase2_vsl);
    m.def("read_dual_context", &read_dual_context, py::arg("cell"), py::arg("mode"), py::arg("sim") = SimConfig{},
          py::arg("params") = DeviceParams{});

    py::class_<McConfig>(m, "McConfig")
        .def(py::init<>())
        .def_readwrite("samples_per_case", &McConfig::samples_per_case)
        .def_readwrite("variation", &McConfig::variation)
        .def_readwrite("cases", &McConfig::cases)
        .def_readwrite("threads", &McConfig::threads)
        .def_readwrite("yield_threshold", &McConfig::yield_threshold);

    py::class_<CalibrationTargets>(m, "CalibrationTargets")
        .def(py::init<>())
        .def_readwrite("v_ref_min", &CalibrationTargets::v_ref_min)
        .def_readwrite("v_ref_max", &CalibrationTargets::v_ref_max)
        .def_readwrite("t_min", &CalibrationTargets::t_min)
        .def_readwrite("t_max", &CalibrationTargets::t_max)
        .def_readwrite("min_margin", &CalibrationTargets::min_margin)
        .def_readwrite("samples_per_case", &CalibrationTargets::samples_per_case);

    py::class_<Separation>(m, "Separation")
        .def_readonly("v_ref", &Separation::v_ref)
        .def_readonly("t_strobe", &Separation::t_strobe)
        .def_readonly("margin", &Separation::margin);
    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("mode", &CalibrationResult::mode)
        .def_readonly("phases", &CalibrationResult::phases)
        .def("worst_margin", &CalibrationResult::worst_margin);
    m.def("calibrate", &calibrate, py::arg("mode"), py::arg("targets") = CalibrationTargets{},
          py::arg("sim") = SimConfig{}, py::arg("mc") = McConfig{}, py::arg("params") = DeviceParams{},
          py::call_guard<py::gil_scoped_release>());

    py::class_<PhaseStats>(m, "PhaseStats")
        .def_readonly("v_min", &PhaseStats::v_min)
        .def_readonly("v_max", &PhaseStats::v_max)
        .def_readonly("v_mean", &PhaseStats::v_mean)
        .def_readonly("v_std", &PhaseStats::v_std)
        .def_readonly("worst_margin", &PhaseStats::worst_margin);
    py::class_<CaseReport>(m, "CaseReport")
        .def_readonly("case_code", &CaseReport::case_code)
        .def_readonly("samples", &CaseReport::samples)
        .def_readonly("correct", &CaseReport::correct)
        .def_readonly("state_violations", &CaseReport::state_violations)
        .def_readonly("phases", &CaseReport::phases)
        .def_property_readonly("phase_stats",
                               [](const CaseReport& c) { return std::vector<PhaseStats>(c.phase, c.phase + c.phases); })
        .def("correct_fraction", &CaseReport::correct_fraction)
        .def("worst_margin", &CaseReport::worst_margin);
    py::class_<YieldReport>(m, "YieldReport")
        .def_readonly("mode", &YieldReport::mode)
        .def_readonly("cases", &YieldReport::cases)
        .def("min_correct_fraction", &YieldReport::min_correct_fraction)
        .def("passes", &YieldReport::passes)
        .def("to_csv", [](const YieldReport& r) { return yield_csv(r); });
    m.def("run_monte_carlo", &run_monte_carlo, py::arg("mode"), py::arg("mc") = McConfig{},
          py::arg("sim") = SimConfig{}, py::arg("params") = DeviceParams{}, py::call_guard<py::gil_scoped_release>());

    py::class_<BaselineCell>(m, "BaselineCell")
        .def(py::init([](double vt) { return BaselineCell{vt}; }), py::arg("vt") = 0.325)
        .def_readwrite("vt", &BaselineCell::vt)
        .def_static("midpoint", &BaselineCell::midpoint);
    py::class_<MetricsOptions>(m, "MetricsOptions")
        .def(py::init<>())
        .def_readwrite("sense_swing", &MetricsOptions::sense_swing);
    py::class_<ModeMetrics>(m, "ModeMetrics")
        .def_readonly("name", &ModeMetrics::name)
        .def_readonly("delay", &ModeMetrics::delay)
        .def_readonly("energy", &ModeMetrics::energy)
        .def_readonly("leakage", &ModeMetrics::leakage)
        .def_readonly("delay_ratio", &ModeMetrics::delay_ratio)
        .def_readonly("energy_ratio", &ModeMetrics::energy_ratio)
        .def_readonly("leakage_ratio", &ModeMetrics::leakage_ratio);
    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("baseline", &MetricsReport::baseline)
        .def_readonly("modes", &MetricsReport::modes)
        .def("to_csv", [](const MetricsReport& r) { return metrics_csv(r); });
    m.def("measure_metrics", &measure_metrics, py::arg("modes"), py::arg("sim") = SimConfig{},
          py::arg("params") = DeviceParams{}, py::arg("baseline") = BaselineCell{},
          py::arg("options") = MetricsOptions{});

    py::class_<BitMatrix>(m, "BitMatrix")
        .def(py::init<std::size_t, std::size_t>())
        .def_property_readonly("rows", &BitMatrix::rows)
        .def_property_readonly("cols", &BitMatrix::cols)
        .def("at", &BitMatrix::at)
        .def("set", &BitMatrix::set)
        .def("to_text", &BitMatrix::to_text)
        .def("to_hex", &BitMatrix::to_hex)
        .def(py::self == py::self);
    py::enum_<SlGranularity>(m, "SlGranularity")
        .value("PerColumn", SlGranularity::PerColumn)
        .value("PerArray", SlGranularity::PerArray);
    py::class_<WordRead>(m, "WordRead").def_readonly("ram", &WordRead::ram).def_readonly("rom", &WordRead::rom);
    py::class_<MemoryArray>(m, "MemoryArray")
        .def("cell", &MemoryArray::cell)
        .def("write_ram", &MemoryArray::write_ram)
        .def("enter_rom_only_mode", &MemoryArray::enter_rom_only_mode)
        .def("read_word", &MemoryArray::read_word, py::arg("mode"), py::arg("row"), py::arg("sim") = SimConfig{},
             py::arg("params") = DeviceParams{})
        .def("ram_state", &MemoryArray::ram_state)
        .def("restore_ram", &MemoryArray::restore_ram)
        .def_property("sl_granularity", &MemoryArray::sl_granularity, &MemoryArray::set_sl_granularity)
        .def_property_readonly("rom_only_entered", &MemoryArray::rom_only_entered);
    m.def(
        "build_array",
        [](std::size_t rows, std::size_t cols, const BitMatrix& rom, const VariationSpec& var, const DeviceParams& dev) {
            return build_array({rows, cols}, rom, var, dev);
        },
        py::arg("rows"), py::arg("cols"), py::arg("rom"), py::arg("variation") = VariationSpec{},
        py::arg("params") = DeviceParams{});
    m.def("pack_word", &pack_word);

    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("device", &RunConfig::device)
        .def_readwrite("sim", &RunConfig::sim)
        .def_readwrite("mc", &RunConfig::mc)
        .def_readwrite("calibration", &RunConfig::calibration)
        .def_readwrite("metrics", &RunConfig::metrics)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def("mode", py::overload_cast<Mode>(&RunConfig::mode, py::const_))
        .def("set_mode", [](RunConfig& rc, const ModeConfig& mc) { rc.mode(mc.mode) = mc; })
        .def("baseline", &RunConfig::baseline);
    m.def("parse_config", &parse_run_config, py::arg("yaml") = "", py::arg("overrides") = std::vector<std::string>{});
    m.def("load_config", &load_run_config, py::arg("path"), py::arg("overrides") = std::vector<std::string>{});
    m.def("parse_quantity", &parse_quantity);
}
