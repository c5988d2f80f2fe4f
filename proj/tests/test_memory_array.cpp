#include <doctest.h>

#include <sstream>

#include "romsram/errors.hpp"
#include "romsram/memory_array.hpp"

using namespace romsram;

namespace {

ModeConfig with_sense(Mode m) {
    ModeConfig mc = default_mode_config(m);
    mc.phase1.sense = {0.55, 2e-9};
    mc.phase2_if_ram0.sense = {0.55, 2e-9};
    mc.phase2_if_ram1.sense = {0.45, 2e-9};
    return mc;
}

RomImage row_image(std::uint64_t word, std::size_t cols) {
    RomImage img(1, cols);
    for (std::size_t c = 0; c < cols; ++c) img.set(0, c, (word >> (cols - 1 - c)) & 1);
    return img;
}

VariationSpec no_variation() {
    VariationSpec v;
    v.sigma_vt = 0.0;
    return v;
}

}  // namespace

TEST_CASE("build_array assigns flavors from the ROM image") {
    SUBCASE("1x1") {
        RomImage img(1, 1);
        img.set(0, 0, 1);
        const auto a = build_array({1, 1}, img, VariationSpec{});
        CHECK(a.cell(0, 0).rom_flavor == VtFlavor::LowVt);
        CHECK(a.cell(0, 0).upper_device.flavor == VtFlavor::LowVt);
        CHECK(a.cell(0, 0).q == 0);
    }
    SUBCASE("64x64 checkerboard") {
        RomImage img(64, 64);
        for (std::size_t r = 0; r < 64; ++r)
            for (std::size_t c = 0; c < 64; ++c) img.set(r, c, (r + c) % 2);
        const auto a = build_array({64, 64}, img, VariationSpec{});
        std::size_t low = 0;
        for (std::size_t r = 0; r < 64; ++r)
            for (std::size_t c = 0; c < 64; ++c) {
                low += a.cell(r, c).rom_flavor == VtFlavor::LowVt;
                CHECK(a.cell(r, c).rom() == img.at(r, c));
            }
        CHECK(low == 2048);
        CHECK(img.count_ones() == 2048);
    }
    SUBCASE("deterministic and injective draws") {
        RomImage img(4, 4);
        const auto a = build_array({4, 4}, img, VariationSpec{});
        const auto b = build_array({4, 4}, img, VariationSpec{});
        CHECK(a == b);
        std::vector<double> seen;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                seen.push_back(a.cell(r, c).upper_device.delta_vt);
                seen.push_back(a.cell(r, c).lower_device.delta_vt);
            }
        std::sort(seen.begin(), seen.end());
        CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
        CHECK(array_draw_index(1, 2, 4, 1) == (1 * 4 + 2) * 2 + 1);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(build_array({2, 2}, RomImage(2, 3), VariationSpec{}), DimensionMismatch);
        CHECK_THROWS_AS(build_array({0, 2}, RomImage(0, 2), VariationSpec{}), InvalidParams);
    }
}

TEST_CASE("write_ram isolation on a 64x64 array") {
    RomImage img(64, 64);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c) img.set(r, c, (r * 7 + c * 3) % 5 == 0);
    auto a = build_array({64, 64}, img, VariationSpec{});
    const auto before = a;
    a.write_ram(17, 42, 1);
    CHECK(a.cell(17, 42).q == 1);
    CHECK(a.cell(17, 42).rom_flavor == before.cell(17, 42).rom_flavor);
    CHECK(a.cell(17, 42).upper_device == before.cell(17, 42).upper_device);
    std::size_t changed = 0;
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c) changed += !(a.cell(r, c) == before.cell(r, c));
    CHECK(changed == 1);
    CHECK_THROWS_AS(a.write_ram(64, 0, 1), OutOfRange);
    CHECK_THROWS_AS(a.write_ram(0, 64, 1), OutOfRange);
}

TEST_CASE("ROM-only context") {
    SimConfig cfg;
    const DeviceParams dev;
    auto a = build_array({1, 8}, row_image(0x3C, 8), no_variation());
    for (std::size_t c = 0; c < 8; ++c) a.write_ram(0, c, int(c % 2));
    CHECK_THROWS_AS(a.read_word(with_sense(Mode::RomOnly), 0, cfg, dev), ModeStateMismatch);
    a.enter_rom_only_mode();
    CHECK(a.ram_state().count_ones() == 0);
    const auto once = a;
    a.enter_rom_only_mode();
    CHECK(a == once);
    const auto w = a.read_word(with_sense(Mode::RomOnly), 0, cfg, dev);
    REQUIRE(w.rom);
    CHECK_FALSE(w.ram);
    CHECK(pack_word(*w.rom) == 0x3C);
    a.write_ram(0, 0, 1);
    CHECK_FALSE(a.rom_only_entered());
    CHECK_THROWS_AS(a.read_word(with_sense(Mode::RomOnly), 0, cfg, dev), ModeStateMismatch);
}

TEST_CASE("RAM word readback") {
    SimConfig cfg;
    const DeviceParams dev;
    auto a = build_array({2, 8}, RomImage(2, 8), no_variation());
    for (std::size_t c = 0; c < 8; ++c) a.write_ram(1, c, (0xA5 >> (7 - c)) & 1);
    for (Mode m : {Mode::RamOnlyReliability, Mode::RamOnlyDelay}) {
        const auto w = a.read_word(with_sense(m), 1, cfg, dev);
        REQUIRE(w.ram);
        CHECK(pack_word(*w.ram) == 0xA5);
        CHECK(pack_word(*a.read_word(with_sense(m), 0, cfg, dev).ram) == 0);
    }
    CHECK_THROWS_AS(a.read_word(with_sense(Mode::RamOnlyDelay), 2, cfg, dev), OutOfRange);
}

TEST_CASE("dual-context word read at both SL granularities") {
    SimConfig cfg;
    const DeviceParams dev;
    auto a = build_array({1, 2}, row_image(0b01, 2), no_variation());
    a.write_ram(0, 0, 1);
    for (auto g : {SlGranularity::PerColumn, SlGranularity::PerArray}) {
        a.set_sl_granularity(g);
        const auto ram_before = a.ram_state();
        const auto w = a.read_word(with_sense(Mode::DualContext), 0, cfg, dev);
        REQUIRE(w.ram);
        REQUIRE(w.rom);
        CHECK(pack_word(*w.ram) == 0b10);
        CHECK(pack_word(*w.rom) == 0b01);
        CHECK(a.ram_state() == ram_before);
    }
}

TEST_CASE("bit image formats") {
    SUBCASE("text") {
        std::istringstream in("# comment\n0110\n\n1001\n");
        const auto m = BitMatrix::parse_text(in);
        CHECK(m.rows() == 2);
        CHECK(m.cols() == 4);
        CHECK(m.to_text() == "0110\n1001\n");
        std::istringstream ragged("0110\n100\n");
        CHECK_THROWS_AS(BitMatrix::parse_text(ragged), DimensionMismatch);
        std::istringstream junk("0120\n");
        CHECK_THROWS_AS(BitMatrix::parse_text(junk), DimensionMismatch);
    }
    SUBCASE("hex, MSB first, padded at the low end") {
        std::istringstream in("0xa5\n3c\n");
        const auto m = BitMatrix::parse_hex(in, 8);
        CHECK(m.to_text() == "10100101\n00111100\n");
        CHECK(m.to_hex() == "a5\n3c\n");
        std::istringstream six("a4\n");
        const auto s = BitMatrix::parse_hex(six, 6);
        CHECK(s.to_text() == "101001\n");
        CHECK(s.to_hex() == "a4\n");
        std::istringstream bad_pad("a5\n");
        CHECK_THROWS_AS(BitMatrix::parse_hex(bad_pad, 6), DimensionMismatch);
        std::istringstream short_row("a\n");
        CHECK_THROWS_AS(BitMatrix::parse_hex(short_row, 8), DimensionMismatch);
    }
    SUBCASE("RAM dump and restore") {
        auto a = build_array({3, 5}, RomImage(3, 5), VariationSpec{});
        a.write_ram(0, 1, 1);
        a.write_ram(2, 4, 1);
        const std::string dump = a.ram_state().to_text();
        auto b = build_array({3, 5}, RomImage(3, 5), VariationSpec{});
        std::istringstream in(dump);
        b.restore_ram(BitMatrix::parse_text(in));
        CHECK(a == b);
        CHECK_THROWS_AS(b.restore_ram(BitMatrix(2, 5)), DimensionMismatch);
    }
}
