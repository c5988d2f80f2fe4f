#include "romsram/memory_array.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>

#include "romsram/errors.hpp"

namespace romsram {

void ArrayConfig::validate() const {
    if (rows < 1 || cols < 1) throw InvalidParams("array config: rows and cols must be >= 1");
}

std::size_t BitMatrix::count_ones() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> content_lines(std::istream& in) {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        out.push_back(line);
    }
    return out;
}

}  // namespace

BitMatrix BitMatrix::parse_text(std::istream& in) {
    const auto lines = content_lines(in);
    if (lines.empty()) throw DimensionMismatch("bit image: no rows");
    BitMatrix m(lines.size(), lines.front().size());
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].size() != m.cols_)
            throw DimensionMismatch("bit image: row " + std::to_string(r + 1) + " has " +
                                    std::to_string(lines[r].size()) + " columns, expected " +
                                    std::to_string(m.cols_));
        for (std::size_t c = 0; c < m.cols_; ++c) {
            const char ch = lines[r][c];
            if (ch != '0' && ch != '1')
                throw DimensionMismatch("bit image: row " + std::to_string(r + 1) + " contains '" +
                                        std::string(1, ch) + "'");
            m.set(r, c, ch == '1');
        }
    }
    return m;
}

BitMatrix BitMatrix::parse_hex(std::istream& in, std::size_t cols) {
    if (cols == 0) throw DimensionMismatch("hex image: column count must be >= 1");
    const auto lines = content_lines(in);
    if (lines.empty()) throw DimensionMismatch("hex image: no rows");
    const std::size_t digits = (cols + 3) / 4;
    BitMatrix m(lines.size(), cols);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        std::string line = lines[r];
        if (line.rfind("0x", 0) == 0 || line.rfind("0X", 0) == 0) line = line.substr(2);
        if (line.size() != digits)
            throw DimensionMismatch("hex image: row " + std::to_string(r + 1) + " needs " + std::to_string(digits) +
                                    " hex digits");
        for (std::size_t d = 0; d < digits; ++d) {
            const char ch = line[d];
            int v;
            if (ch >= '0' && ch <= '9') v = ch - '0';
            else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
            else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
            else throw DimensionMismatch("hex image: row " + std::to_string(r + 1) + " has a non-hex digit");
            for (int b = 0; b < 4; ++b) {
                const std::size_t c = d * 4 + static_cast<std::size_t>(b);
                const int bit = (v >> (3 - b)) & 1;
                if (c < cols) m.set(r, c, bit);
                else if (bit) throw DimensionMismatch("hex image: padding bits must be zero");
            }
        }
    }
    return m;
}

std::string BitMatrix::to_text() const {
    std::string out;
    out.reserve(rows_ * (cols_ + 1));
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) out.push_back(at(r, c) ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

std::string BitMatrix::to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    const std::size_t digits = (cols_ + 3) / 4;
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t d = 0; d < digits; ++d) {
            int v = 0;
            for (std::size_t b = 0; b < 4; ++b) {
                const std::size_t c = d * 4 + b;
                v = (v << 1) | (c < cols_ ? at(r, c) : 0);
            }
            out.push_back(kDigits[v]);
        }
        out.push_back('\n');
    }
    return out;
}

std::uint64_t pack_word(const std::vector<int>& bits) {
    if (bits.size() > 64) throw OutOfRange("pack_word: more than 64 bits");
    std::uint64_t w = 0;
    for (int b : bits) w = (w << 1) | static_cast<std::uint64_t>(b & 1);
    return w;
}

std::uint64_t array_draw_index(std::size_t row, std::size_t col, std::size_t cols, int position) {
    return (static_cast<std::uint64_t>(row) * cols + col) * 2 + static_cast<std::uint64_t>(position);
}

MemoryArray build_array(const ArrayConfig& cfg, const RomImage& rom, const VariationSpec& var,
                        const DeviceParams& dev) {
    cfg.validate();
    var.validate();
    if (rom.rows() != cfg.rows || rom.cols() != cfg.cols)
        throw DimensionMismatch("build_array: ROM image is " + std::to_string(rom.rows()) + "x" +
                                std::to_string(rom.cols()) + ", array is " + std::to_string(cfg.rows) + "x" +
                                std::to_string(cfg.cols));
    MemoryArray a;
    a.config_ = cfg;
    a.cells_.reserve(cfg.rows * cfg.cols);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        for (std::size_t c = 0; c < cfg.cols; ++c) {
            const VtFlavor f = flavor_for_rom_bit(rom.at(r, c));
            BitCell cell;
            cell.q = 0;
            cell.rom_flavor = f;
            cell.upper_device = sample_device(f, var, array_draw_index(r, c, cfg.cols, 0), dev);
            cell.lower_device = sample_device(f, var, array_draw_index(r, c, cfg.cols, 1), dev);
            a.cells_.push_back(cell);
        }
    }
    return a;
}

void MemoryArray::check_address(std::size_t r, std::size_t c) const {
    if (r >= config_.rows || c >= config_.cols)
        throw OutOfRange("memory array: address (" + std::to_string(r) + ", " + std::to_string(c) +
                         ") out of range");
}

const BitCell& MemoryArray::cell(std::size_t r, std::size_t c) const {
    check_address(r, c);
    return cells_[r * config_.cols + c];
}

void MemoryArray::write_ram(std::size_t row, std::size_t col, int bit) {
    check_address(row, col);
    cells_[row * config_.cols + col].q = bit ? 1 : 0;
    // Writing RAM data takes the array out of the ROM-only context.
    rom_only_ = false;
}

void MemoryArray::enter_rom_only_mode() {
    for (auto& c : cells_) c.q = 0;
    rom_only_ = true;
}

BitMatrix MemoryArray::ram_state() const {
    BitMatrix m(config_.rows, config_.cols);
    for (std::size_t r = 0; r < config_.rows; ++r)
        for (std::size_t c = 0; c < config_.cols; ++c) m.set(r, c, cells_[r * config_.cols + c].q);
    return m;
}

void MemoryArray::restore_ram(const BitMatrix& state) {
    if (state.rows() != config_.rows || state.cols() != config_.cols)
        throw DimensionMismatch("restore_ram: state dimensions do not match the array");
    for (std::size_t r = 0; r < config_.rows; ++r)
        for (std::size_t c = 0; c < config_.cols; ++c) cells_[r * config_.cols + c].q = state.at(r, c);
    rom_only_ = false;
}

WordRead MemoryArray::read_word(const ModeConfig& mode, std::size_t row, const SimConfig& cfg,
                                const DeviceParams& dev) const {
    check_address(row, 0);
    WordRead out;
    std::vector<int> bits(config_.cols, 0);
    switch (mode.mode) {
        case Mode::RomOnly:
            if (!rom_only_) throw ModeStateMismatch("read_word: rom_only read before entering ROM-only mode");
            for (std::size_t c = 0; c < config_.cols; ++c) bits[c] = read_rom_only(cell(row, c), mode, cfg, dev);
            out.rom = bits;
            break;
        case Mode::RamOnlyReliability:
        case Mode::RamOnlyDelay:
            for (std::size_t c = 0; c < config_.cols; ++c) bits[c] = read_ram_only(cell(row, c), mode, cfg, dev);
            out.ram = bits;
            break;
        case Mode::DualContext: {
            std::vector<int> rom(config_.cols, 0);
            if (granularity_ == SlGranularity::PerColumn) {
                for (std::size_t c = 0; c < config_.cols; ++c) {
                    const auto r = read_dual_context(cell(row, c), mode, cfg, dev);
                    bits[c] = r.ram;
                    rom[c] = r.rom;
                }
            } else {
                // One SL for the whole row: phase I for every column, then one
                // phase-II pass per SL level the phase-I results call for.
                mode.validate(dev, cfg);
                mode.phase1.validate_sense(cfg);
                for (std::size_t c = 0; c < config_.cols; ++c) {
                    const auto tr = simulate_read_event(cell(row, c), mode.phase1.waveforms(cfg.vdd), cfg, dev);
                    bits[c] = sense(tr, mode.phase1.sense);
                }
                const std::set<int> levels(bits.begin(), bits.end());
                for (int level : levels) {
                    const PhasePlan& p2 = sl_select(level, mode);
                    p2.validate_sense(cfg);
                    for (std::size_t c = 0; c < config_.cols; ++c) {
                        const auto tr = simulate_read_event(cell(row, c), p2.waveforms(cfg.vdd), cfg, dev);
                        if (bits[c] == level) rom[c] = sense(tr, p2.sense);
                    }
                }
            }
            out.ram = bits;
            out.rom = rom;
            break;
        }
    }
    return out;
}

}  // namespace romsram
