#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "romsram/sensing_protocol.hpp"

namespace romsram {

struct ArrayConfig {
    std::size_t rows = 1;
    std::size_t cols = 1;

    std::size_t word_width() const { return cols; }
    void validate() const;
    bool operator==(const ArrayConfig&) const = default;
};

/// rows x cols bit matrix, row-major. Used for ROM images and RAM dumps.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    int at(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c]; }
    void set(std::size_t r, std::size_t c, int bit) { bits_[r * cols_ + c] = bit ? 1 : 0; }
    std::size_t count_ones() const;

    /// One row per line, characters '0'/'1'. Column 0 is the leftmost character.
    static BitMatrix parse_text(std::istream& in);
    /// One row per line, hex digits, most significant nibble first. Column 0 is
    /// the most significant bit of the row; rows are padded at the least
    /// significant end to a whole number of nibbles. `cols` gives the row width.
    static BitMatrix parse_hex(std::istream& in, std::size_t cols);
    std::string to_text() const;
    std::string to_hex() const;

    bool operator==(const BitMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

using RomImage = BitMatrix;

enum class SlGranularity : std::uint8_t { PerColumn, PerArray };

/// Word read result; a field is present when the mode produces it.
struct WordRead {
    std::optional<std::vector<int>> ram;
    std::optional<std::vector<int>> rom;
};

/// Packs bits with column 0 as the most significant bit.
std::uint64_t pack_word(const std::vector<int>& bits);

/// Array of CS/DC cells. Single writer, many readers: const member functions
/// are safe to call concurrently; mutators need exclusive access.
class MemoryArray {
public:
    const ArrayConfig& config() const { return config_; }
    const BitCell& cell(std::size_t r, std::size_t c) const;
    bool rom_only_entered() const { return rom_only_; }
    SlGranularity sl_granularity() const { return granularity_; }
    void set_sl_granularity(SlGranularity g) { granularity_ = g; }

    void write_ram(std::size_t row, std::size_t col, int bit);
    /// Forces q = 0 in every cell and records the context switch. Idempotent.
    void enter_rom_only_mode();

    WordRead read_word(const ModeConfig& mode, std::size_t row, const SimConfig& cfg,
                       const DeviceParams& dev) const;

    BitMatrix ram_state() const;
    /// Restores every q from `state`; ROM flavors are untouched.
    void restore_ram(const BitMatrix& state);

    bool operator==(const MemoryArray&) const = default;

private:
    friend MemoryArray build_array(const ArrayConfig&, const RomImage&, const VariationSpec&,
                                   const DeviceParams&);
    void check_address(std::size_t r, std::size_t c) const;

    ArrayConfig config_;
    std::vector<BitCell> cells_;
    bool rom_only_ = false;
    SlGranularity granularity_ = SlGranularity::PerColumn;
};

/// draw_index of a device: ((row * cols + col) * 2 + position), position 0 = upper.
std::uint64_t array_draw_index(std::size_t row, std::size_t col, std::size_t cols, int position);

MemoryArray build_array(const ArrayConfig& cfg, const RomImage& rom, const VariationSpec& var,
                        const DeviceParams& dev = {});

}  // namespace romsram
