#include "romsram/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "romsram/errors.hpp"

namespace romsram {

namespace {

int line_of(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.is_null() ? 0 : m.line + 1;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

class Section {
public:
    Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {}

    explicit operator bool() const { return node_.IsDefined() && !node_.IsNull(); }

    void allow(std::initializer_list<const char*> keys) const {
        if (!node_.IsMap()) throw ConfigError(where() + " must be a mapping", line_of(node_));
        for (const auto& kv : node_) {
            const std::string k = kv.first.Scalar();
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) throw ConfigError("unknown key '" + join(k) + "'", line_of(kv.first));
        }
    }

    Section sub(const char* key) const { return {node_[key], join(key)}; }

    void quantity(const char* key, const std::string& unit, double& out) const {
        const YAML::Node n = node_[key];
        if (!n) return;
        if (!n.IsScalar()) throw ConfigError(join(key) + " must be a scalar", line_of(n));
        try {
            out = parse_quantity(n.Scalar(), unit);
        } catch (const ConfigError& e) {
            throw ConfigError(join(key) + ": " + e.what(), line_of(n));
        }
    }

    void quantity(const char* key, const std::string& unit, std::optional<double>& out) const {
        if (!node_[key]) return;
        double v = 0.0;
        quantity(key, unit, v);
        out = v;
    }

    template <class T>
    void integer(const char* key, T& out) const {
        const YAML::Node n = node_[key];
        if (!n) return;
        const std::string s = n.IsScalar() ? n.Scalar() : std::string();
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (s.empty() || *end != '\0' || errno != 0 || v < 0)
            throw ConfigError(join(key) + " must be a non-negative integer", line_of(n));
        out = static_cast<T>(v);
    }

    void seed(const char* key, std::uint64_t& out) const {
        const YAML::Node n = node_[key];
        if (!n) return;
        const std::string s = n.IsScalar() ? n.Scalar() : std::string();
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 0);
        if (s.empty() || s[0] == '-' || *end != '\0' || errno != 0)
            throw ConfigError(join(key) + " must be an unsigned 64-bit integer", line_of(n));
        out = v;
    }

    void text(const char* key, std::string& out) const {
        const YAML::Node n = node_[key];
        if (!n) return;
        if (!n.IsScalar()) throw ConfigError(join(key) + " must be a string", line_of(n));
        out = n.Scalar();
    }

    template <class T>
    void choice(const char* key, T& out, std::initializer_list<std::pair<const char*, T>> options) const {
        const YAML::Node n = node_[key];
        if (!n) return;
        const std::string s = n.IsScalar() ? n.Scalar() : std::string();
        std::string names;
        for (const auto& [name, value] : options) {
            if (s == name) {
                out = value;
                return;
            }
            names += names.empty() ? name : std::string(", ") + name;
        }
        throw ConfigError(join(key) + " must be one of: " + names, line_of(n));
    }

    const YAML::Node& node() const { return node_; }
    std::string join(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

private:
    std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }

    YAML::Node node_;
    std::string path_;
};

void read_phase(const Section& s, PhasePlan& p) {
    if (!s) return;
    s.allow({"vsl", "rwl_pulse", "window", "precharge", "v_ref", "t_strobe"});
    s.quantity("vsl", "V", p.vsl);
    s.quantity("rwl_pulse", "s", p.rwl_pulse);
    s.quantity("window", "s", p.window);
    s.quantity("precharge", "s", p.precharge);
    s.quantity("v_ref", "V", p.sense.v_ref);
    s.quantity("t_strobe", "s", p.sense.t_strobe);
}

int parse_case(const YAML::Node& n) {
    const std::string s = n.IsScalar() ? n.Scalar() : std::string();
    if (s.size() == 2 && (s[0] == '0' || s[0] == '1') && (s[1] == '0' || s[1] == '1'))
        return (s[0] - '0') * 2 + (s[1] - '0');
    throw ConfigError("case codes are written 00, 01, 10 or 11", line_of(n));
}

void apply_override(YAML::Node& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' must look like dotted.key=value");
    const std::string path = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string p; std::getline(ss, p, '.');) {
        if (p.empty()) throw ConfigError("override '" + assignment + "' has an empty path component");
        parts.push_back(p);
    }
    if (!root.IsDefined() || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    YAML::Node cur = root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!cur.IsMap()) throw ConfigError("override '" + path + "' descends into a non-mapping value");
        YAML::Node next = cur[parts[i]];
        if (!next.IsDefined() || next.IsNull()) {
            cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
            next = cur[parts[i]];
        }
        cur.reset(next);
    }
    if (!cur.IsMap()) throw ConfigError("override '" + path + "' descends into a non-mapping value");
    YAML::Node v;
    try {
        v = YAML::Load(value);
    } catch (const YAML::Exception&) {
        v = YAML::Node(value);
    }
    cur[parts.back()] = v;
}

RunConfig from_yaml(YAML::Node root) {
    RunConfig rc;
    if (!root.IsDefined() || root.IsNull()) return rc;
    const Section top(root, "");
    top.allow({"version", "device", "sim", "variation", "modes", "array", "mc", "calibration", "metrics", "output"});
    top.integer("version", rc.version);
    if (rc.version != 1) throw ConfigError("unsupported config version " + std::to_string(rc.version), line_of(root["version"]));

    if (const auto d = top.sub("device")) {
        d.allow({"vt_low", "vt_high", "subthreshold_swing", "transconductance_k", "dibl_factor", "off_floor_current",
                 "temperature"});
        d.quantity("vt_low", "V", rc.device.vt_low);
        d.quantity("vt_high", "V", rc.device.vt_high);
        d.quantity("subthreshold_swing", "V/dec", rc.device.subthreshold_swing);
        d.quantity("transconductance_k", "A/V^2", rc.device.transconductance_k);
        d.quantity("dibl_factor", "", rc.device.dibl_factor);
        d.quantity("off_floor_current", "A", rc.device.off_floor_current);
        d.quantity("temperature", "K", rc.device.temperature);
    }
    if (const auto s = top.sub("sim")) {
        s.allow({"vdd", "c_bl", "dt_max", "voltage_tolerance", "reliability_limit", "core_leakage"});
        s.quantity("vdd", "V", rc.sim.vdd);
        s.quantity("c_bl", "F", rc.sim.c_bl);
        s.quantity("dt_max", "s", rc.sim.dt_max);
        s.quantity("voltage_tolerance", "V", rc.sim.voltage_tolerance);
        s.quantity("reliability_limit", "V", rc.sim.reliability_limit);
        s.quantity("core_leakage", "W", rc.sim.core_leakage);
    }
    if (const auto v = top.sub("variation")) {
        v.allow({"sigma_vt", "seed", "distribution"});
        v.quantity("sigma_vt", "V", rc.mc.variation.sigma_vt);
        v.seed("seed", rc.mc.variation.seed);
        v.choice("distribution", rc.mc.variation.distribution, {{"gaussian", Distribution::Gaussian}});
    }
    if (const auto m = top.sub("modes")) {
        m.allow({"rom_only", "ram_only_reliability", "ram_only_delay", "dual_context"});
        read_phase(m.sub("rom_only"), rc.rom_only.phase1);
        read_phase(m.sub("ram_only_reliability"), rc.ram_only_reliability.phase1);
        read_phase(m.sub("ram_only_delay"), rc.ram_only_delay.phase1);
        if (const auto dc = m.sub("dual_context")) {
            dc.allow({"phase1", "phase2_if_ram0", "phase2_if_ram1"});
            read_phase(dc.sub("phase1"), rc.dual_context.phase1);
            read_phase(dc.sub("phase2_if_ram0"), rc.dual_context.phase2_if_ram0);
            read_phase(dc.sub("phase2_if_ram1"), rc.dual_context.phase2_if_ram1);
        }
    }
    if (const auto a = top.sub("array")) {
        a.allow({"rows", "cols", "rom_image", "rom_format", "sl_granularity"});
        a.integer("rows", rc.array.rows);
        a.integer("cols", rc.array.cols);
        a.text("rom_image", rc.rom_image);
        a.choice("rom_format", rc.rom_format, {{"text", std::string("text")}, {"hex", std::string("hex")}});
        a.choice("sl_granularity", rc.sl_granularity,
                 {{"per_column", SlGranularity::PerColumn}, {"per_array", SlGranularity::PerArray}});
    }
    if (const auto m = top.sub("mc")) {
        m.allow({"samples_per_case", "threads", "yield_threshold", "cases"});
        m.integer("samples_per_case", rc.mc.samples_per_case);
        m.integer("threads", rc.mc.threads);
        m.quantity("yield_threshold", "", rc.mc.yield_threshold);
        if (const YAML::Node c = m.node()["cases"]) {
            if (!c.IsSequence()) throw ConfigError("mc.cases must be a list", line_of(c));
            rc.mc.cases.clear();
            for (const auto& e : c) rc.mc.cases.push_back(parse_case(e));
        }
    }
    if (const auto c = top.sub("calibration")) {
        c.allow({"v_ref_min", "v_ref_max", "t_min", "t_max", "grid_t", "refine_iterations", "min_margin",
                 "samples_per_case"});
        c.quantity("v_ref_min", "V", rc.calibration.v_ref_min);
        c.quantity("v_ref_max", "V", rc.calibration.v_ref_max);
        c.quantity("t_min", "s", rc.calibration.t_min);
        c.quantity("t_max", "s", rc.calibration.t_max);
        c.integer("grid_t", rc.calibration.grid_t);
        c.integer("refine_iterations", rc.calibration.refine_iterations);
        c.quantity("min_margin", "V", rc.calibration.min_margin);
        c.integer("samples_per_case", rc.calibration.samples_per_case);
    }
    if (const auto m = top.sub("metrics")) {
        m.allow({"sense_swing", "baseline_vt"});
        m.quantity("sense_swing", "V", rc.metrics.sense_swing);
        m.quantity("baseline_vt", "V", rc.baseline_vt);
    }
    if (const auto o = top.sub("output")) {
        o.allow({"dir"});
        o.text("dir", rc.output_dir);
    }
    return rc;
}

}  // namespace

double parse_quantity(const std::string& text, const std::string& unit) {
    const std::string s = trim(text);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || errno == ERANGE) throw ConfigError("'" + text + "' is not a number");
    const std::string u = trim(std::string(end));
    if (unit.empty()) {
        if (!u.empty()) throw ConfigError("'" + text + "' must be a plain number");
        return v;
    }
    if (u.empty()) throw ConfigError("'" + text + "' needs a unit (" + unit + ")");
    static const std::pair<const char*, double> prefixes[] = {
        {"", 1.0}, {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6}, {"\xC2\xB5", 1e-6},
        {"m", 1e-3}, {"k", 1e3}, {"M", 1e6}, {"G", 1e9}};
    for (const auto& [p, scale] : prefixes) {
        if (u == std::string(p) + unit) return v * scale;
    }
    throw ConfigError("'" + text + "' has unit '" + u + "', expected " + unit);
}

RunConfig parse_run_config(const std::string& yaml, const std::vector<std::string>& overrides) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
    }
    for (const auto& o : overrides) apply_override(root, o);
    RunConfig rc;
    try {
        rc = from_yaml(root);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
    }
    rc.validate();
    return rc;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig rc = parse_run_config(ss.str(), overrides);
    rc.source_dir = std::filesystem::path(path).parent_path().string();
    return rc;
}

std::string config_path_from_env() {
    const char* p = std::getenv("ROMSRAM_CONFIG");
    return p ? std::string(p) : std::string();
}

ModeConfig& RunConfig::mode(Mode m) {
    switch (m) {
        case Mode::RomOnly: return rom_only;
        case Mode::RamOnlyReliability: return ram_only_reliability;
        case Mode::RamOnlyDelay: return ram_only_delay;
        case Mode::DualContext: return dual_context;
    }
    return rom_only;
}

const ModeConfig& RunConfig::mode(Mode m) const { return const_cast<RunConfig*>(this)->mode(m); }

BaselineCell RunConfig::baseline() const {
    return baseline_vt ? BaselineCell{*baseline_vt} : BaselineCell::midpoint(device);
}

void RunConfig::validate() const {
    try {
        device.validate();
        DeviceModel check(device);
        sim.validate();
        for (Mode m : {Mode::RomOnly, Mode::RamOnlyReliability, Mode::RamOnlyDelay, Mode::DualContext})
            mode(m).validate(device, sim);
        array.validate();
        mc.validate();
        calibration.validate(sim.vdd);
        if (!(metrics.sense_swing > 0.0 && metrics.sense_swing < sim.vdd))
            throw InvalidParams("metrics.sense_swing must lie in (0, vdd)");
        if (baseline_vt && !(*baseline_vt > 0.0)) throw InvalidParams("metrics.baseline_vt must be > 0");
    } catch (const InvalidParams& e) {
        throw ConfigError(e.what());
    }
}

RomImage load_rom_image(const RunConfig& rc) {
    if (rc.rom_image.empty()) return RomImage(rc.array.rows, rc.array.cols);
    std::filesystem::path p(rc.rom_image);
    if (p.is_relative() && !rc.source_dir.empty()) p = std::filesystem::path(rc.source_dir) / p;
    std::ifstream in(p);
    if (!in) throw IoError("cannot open ROM image '" + p.string() + "'");
    RomImage img = rc.rom_format == "hex" ? RomImage::parse_hex(in, rc.array.cols) : RomImage::parse_text(in);
    if (img.rows() != rc.array.rows || img.cols() != rc.array.cols)
        throw DimensionMismatch("ROM image '" + p.string() + "' does not match array.rows x array.cols");
    return img;
}

}  // namespace romsram
