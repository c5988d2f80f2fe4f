#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "romsram/analysis.hpp"
#include "romsram/errors.hpp"

namespace romsram {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

namespace {

void row(std::ostringstream& os, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) os << ',';
        os << csv_field(f);
        first = false;
    }
    os << '\n';
}

std::string fd(double v) { return format_double(v); }
std::string fz(std::size_t v) { return std::to_string(v); }

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

const std::string& field(const CsvTable& t, const std::vector<std::string>& r, const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) {
            if (i >= r.size()) throw IoError("csv: short row");
            return r[i];
        }
    throw IoError("csv: missing column '" + name + "'");
}

}  // namespace

std::string yield_csv(const YieldReport& r) {
    std::ostringstream os;
    row(os, {"mode", "case", "samples", "correct", "errors", "state_violations", "correct_fraction", "phase",
             "v_min_V", "v_max_V", "v_mean_V", "v_std_V", "worst_margin_V"});
    const std::string mode(to_string(r.mode));
    for (const auto& c : r.cases) {
        for (int p = 0; p < c.phases; ++p) {
            const auto& s = c.phase[p];
            row(os, {mode, case_label(c.case_code), fz(c.samples), fz(c.correct), fz(c.errors),
                     fz(c.state_violations), fd(c.correct_fraction()), std::to_string(p + 1), fd(s.v_min),
                     fd(s.v_max), fd(s.v_mean), fd(s.v_std), fd(s.worst_margin)});
        }
    }
    return os.str();
}

std::string samples_csv(const YieldReport& r) {
    std::ostringstream os;
    row(os, {"mode", "case", "sample", "phase", "expected", "sensed", "v_strobe_V", "margin_V", "correct",
             "state_preserved", "error"});
    const std::string mode(to_string(r.mode));
    for (const auto& s : r.samples) {
        if (!s.error.empty()) {
            row(os, {mode, case_label(s.case_code), fz(s.sample), "", "", "", "", "", "0", "", s.error});
            continue;
        }
        for (int p = 0; p < s.phases; ++p) {
            const auto& ph = s.phase[p];
            row(os, {mode, case_label(s.case_code), fz(s.sample), std::to_string(p + 1), std::to_string(ph.expected),
                     std::to_string(ph.sensed), fd(ph.v_strobe), fd(ph.margin), s.correct ? "1" : "0",
                     s.state_preserved ? "1" : "0", ""});
        }
    }
    return os.str();
}

std::string metrics_csv(const MetricsReport& r) {
    std::ostringstream os;
    row(os, {"mode", "read_delay_norm", "read_energy_norm", "leakage_norm"});
    for (const auto& m : r.modes) row(os, {m.name, fd(m.delay_ratio), fd(m.energy_ratio), fd(m.leakage_ratio)});
    return os.str();
}

std::string metrics_raw_csv(const MetricsReport& r) {
    std::ostringstream os;
    row(os, {"mode", "read_delay_s", "read_energy_J", "leakage_W"});
    row(os, {r.baseline.name, fd(r.baseline.delay), fd(r.baseline.energy), fd(r.baseline.leakage)});
    for (const auto& m : r.modes) row(os, {m.name, fd(m.delay), fd(m.energy), fd(m.leakage)});
    return os.str();
}

std::string summary(const YieldReport& r, double threshold) {
    std::ostringstream os;
    char buf[256];
    os << "mode " << to_string(r.mode) << ", yield threshold " << threshold << "\n";
    for (const auto& c : r.cases) {
        std::snprintf(buf, sizeof buf, "  case %s: %zu/%zu correct (%.4f)%s\n", case_label(c.case_code).c_str(),
                      c.correct, c.samples, c.correct_fraction(), c.correct_fraction() < threshold ? "  FAIL" : "");
        os << buf;
        if (c.errors) os << "    " << c.errors << " samples failed to simulate\n";
        if (c.state_violations) os << "    " << c.state_violations << " samples changed the stored bit\n";
        for (int p = 0; p < c.phases; ++p) {
            const auto& s = c.phase[p];
            std::snprintf(buf, sizeof buf,
                          "    phase %d: v_strobe min %.4f max %.4f mean %.4f std %.4f V, worst margin %+.2f mV\n",
                          p + 1, s.v_min, s.v_max, s.v_mean, s.v_std, s.worst_margin * 1e3);
            os << buf;
        }
    }
    os << (r.passes(threshold) ? "PASS" : "FAIL") << "\n";
    return os.str();
}

std::string summary(const MetricsReport& r) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "baseline: delay %.4g s, energy %.4g J, leakage %.4g W (sense swing %.0f mV)\n",
                  r.baseline.delay, r.baseline.energy, r.baseline.leakage, r.sense_swing * 1e3);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10s %10s %10s\n", "mode", "delay", "energy", "leakage");
    os << buf;
    for (const auto& m : r.modes) {
        std::snprintf(buf, sizeof buf, "%-22s %9.3fx %9.3fx %9.3fx\n", m.name.c_str(), m.delay_ratio,
                      m.energy_ratio, m.leakage_ratio);
        os << buf;
    }
    os << "energy per read = vdd*c_bl*dV_rbl + |V_SL|*c_bl*dV_rbl, with RWL held until the decision point\n";
    return os.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> cur;
    std::string f;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    f += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                f += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            cur.push_back(f);
            f.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !f.empty()) {
                cur.push_back(f);
                records.push_back(cur);
            }
            cur.clear();
            f.clear();
            any = false;
        } else {
            f += c;
            any = true;
        }
    }
    if (quoted) throw IoError("csv: unterminated quoted field");
    if (any || !f.empty()) {
        cur.push_back(f);
        records.push_back(cur);
    }
    if (records.empty()) return t;
    t.header = records.front();
    t.rows.assign(records.begin() + 1, records.end());
    return t;
}

std::vector<CaseReport> parse_yield_csv(const std::string& text) {
    const auto t = parse_csv(text);
    std::vector<CaseReport> out;
    try {
        for (const auto& r : t.rows) {
            const std::string label = field(t, r, "case");
            if (label.size() != 2) throw IoError("csv: bad case label '" + label + "'");
            const int code = (label[0] - '0') * 2 + (label[1] - '0');
            if (out.empty() || out.back().case_code != code) {
                CaseReport c;
                c.case_code = code;
                c.samples = std::stoull(field(t, r, "samples"));
                c.correct = std::stoull(field(t, r, "correct"));
                c.errors = std::stoull(field(t, r, "errors"));
                c.state_violations = std::stoull(field(t, r, "state_violations"));
                out.push_back(c);
            }
            CaseReport& c = out.back();
            const int p = std::stoi(field(t, r, "phase")) - 1;
            if (p < 0 || p > 1) throw IoError("csv: bad phase index");
            c.phases = std::max(c.phases, p + 1);
            c.phase[p] = {to_double(field(t, r, "v_min_V")), to_double(field(t, r, "v_max_V")),
                          to_double(field(t, r, "v_mean_V")), to_double(field(t, r, "v_std_V")),
                          to_double(field(t, r, "worst_margin_V"))};
        }
    } catch (const std::logic_error& e) {
        throw IoError(std::string("csv: bad number: ") + e.what());
    }
    return out;
}

std::vector<ModeMetrics> parse_metrics_csv(const std::string& text) {
    const auto t = parse_csv(text);
    const bool raw = std::find(t.header.begin(), t.header.end(), "read_delay_s") != t.header.end();
    std::vector<ModeMetrics> out;
    try {
        for (const auto& r : t.rows) {
            ModeMetrics m;
            m.name = field(t, r, "mode");
            if (raw) {
                m.delay = to_double(field(t, r, "read_delay_s"));
                m.energy = to_double(field(t, r, "read_energy_J"));
                m.leakage = to_double(field(t, r, "leakage_W"));
            } else {
                m.delay_ratio = to_double(field(t, r, "read_delay_norm"));
                m.energy_ratio = to_double(field(t, r, "read_energy_norm"));
                m.leakage_ratio = to_double(field(t, r, "leakage_norm"));
            }
            out.push_back(m);
        }
    } catch (const std::logic_error& e) {
        throw IoError(std::string("csv: bad number: ") + e.what());
    }
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + target.parent_path().string() + ": " + ec.message());
    }
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path);
    }
}

}  // namespace romsram
