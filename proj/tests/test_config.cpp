#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "romsram/config.hpp"
#include "romsram/errors.hpp"

using namespace romsram;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("romsram_cfg_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("quantities") {
    CHECK(parse_quantity("-450 mV", "V") == doctest::Approx(-0.45));
    CHECK(parse_quantity("20 fF", "F") == doctest::Approx(20e-15));
    CHECK(parse_quantity("2ns", "s") == doctest::Approx(2e-9));
    CHECK(parse_quantity("80 mV/dec", "V/dec") == doctest::Approx(0.08));
    CHECK(parse_quantity("200 uA/V^2", "A/V^2") == doctest::Approx(200e-6));
    CHECK(parse_quantity("200 \xC2\xB5" "A/V^2", "A/V^2") == doctest::Approx(200e-6));
    CHECK(parse_quantity("1 pA", "A") == doctest::Approx(1e-12));
    CHECK(parse_quantity("0.05", "") == 0.05);
    CHECK_THROWS_AS(parse_quantity("0.45", "V"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("0.45 A", "V"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("volts", "V"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("3 mV", ""), ConfigError);
}

TEST_CASE("empty document gives the defaults") {
    const RunConfig rc = parse_run_config("");
    CHECK(rc.device.vt_low == 0.20);
    CHECK(rc.device.vt_high == 0.45);
    CHECK(rc.sim.c_bl == 20e-15);
    CHECK(rc.rom_only.phase1.vsl == -0.45);
    CHECK(rc.dual_context.phase2_if_ram1.vsl == 0.20);
    CHECK_FALSE(rc.rom_only.calibrated());
    CHECK(rc.baseline().vt == doctest::Approx(0.325));
}

TEST_CASE("shipped default config equals the built-in defaults") {
    const RunConfig file = load_run_config(ROMSRAM_CONFIG_DIR "/default.yaml");
    const RunConfig def = parse_run_config("");
    CHECK(file.device.vt_low == def.device.vt_low);
    CHECK(file.device.subthreshold_swing == doctest::Approx(def.device.subthreshold_swing));
    CHECK(file.sim.dt_max == doctest::Approx(def.sim.dt_max));
    CHECK(file.mc.samples_per_case == def.mc.samples_per_case);
    CHECK(file.calibration.min_margin == doctest::Approx(def.calibration.min_margin));
    CHECK(file.array.rows == 8);
    const RomImage img = load_rom_image(file);
    CHECK(img.rows() == 8);
    CHECK(img.cols() == 8);
}

TEST_CASE("unknown keys and bad values report their line") {
    const std::string doc = "version: 1\nsim:\n  vdd: 0.8 V\n  cbl: 20 fF\n";
    try {
        parse_run_config(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("cbl") != std::string::npos);
    }
    try {
        parse_run_config("sim:\n  c_bl: 20\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_run_config("version: 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("modes:\n  rom_only:\n    vsl: 0.1 V\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("variation:\n  distribution: uniform\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("mc:\n  cases: [\"02\"]\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("sim: [1, 2]\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("sim: {vdd: 0.8 V\n"), ConfigError);
}

TEST_CASE("overrides") {
    const RunConfig rc = parse_run_config("sim:\n  c_bl: 20 fF\n",
                                          {"sim.c_bl=10 fF", "mc.samples_per_case=200",
                                           "modes.dual_context.phase2_if_ram0.vsl=-0.4 V", "array.sl_granularity=per_array"});
    CHECK(rc.sim.c_bl == doctest::Approx(10e-15));
    CHECK(rc.mc.samples_per_case == 200);
    CHECK(rc.dual_context.phase2_if_ram0.vsl == doctest::Approx(-0.4));
    CHECK(rc.sl_granularity == SlGranularity::PerArray);
    CHECK_THROWS_AS(parse_run_config("", {"sim.c_bl"}), ConfigError);
    CHECK_THROWS_AS(parse_run_config("", {"sim.nope=1"}), ConfigError);
    CHECK_THROWS_AS(parse_run_config("", {"sim..vdd=1 V"}), ConfigError);
}

TEST_CASE("calibrated settings and case lists load") {
    const RunConfig rc = parse_run_config(
        "modes:\n  rom_only:\n    v_ref: 0.55 V\n    t_strobe: 1.5 ns\nmc:\n  cases: [\"00\", \"01\"]\n  threads: 2\n");
    CHECK(rc.rom_only.calibrated());
    CHECK(rc.rom_only.phase1.sense.t_strobe == doctest::Approx(1.5e-9));
    CHECK(rc.mc.cases == std::vector<int>{0, 1});
    CHECK(rc.mc.threads == 2);
    const RunConfig b = parse_run_config("metrics:\n  baseline_vt: 0.3 V\n");
    CHECK(b.baseline().vt == doctest::Approx(0.3));
}

TEST_CASE("config path from the environment") {
    ::unsetenv("ROMSRAM_CONFIG");
    CHECK(config_path_from_env().empty());
    ::setenv("ROMSRAM_CONFIG", "/tmp/x.yaml", 1);
    CHECK(config_path_from_env() == "/tmp/x.yaml");
    ::unsetenv("ROMSRAM_CONFIG");
}

TEST_CASE("ROM images resolve relative to the config file") {
    const fs::path d = scratch("rom");
    put(d / "img.hex", "a5\n3c\n");
    put(d / "run.yaml", "array:\n  rows: 2\n  cols: 8\n  rom_image: img.hex\n  rom_format: hex\n");
    const RunConfig rc = load_run_config((d / "run.yaml").string());
    const RomImage img = load_rom_image(rc);
    CHECK(img.to_hex() == "a5\n3c\n");

    put(d / "bad.yaml", "array:\n  rows: 3\n  cols: 8\n  rom_image: img.hex\n  rom_format: hex\n");
    CHECK_THROWS_AS(load_rom_image(load_run_config((d / "bad.yaml").string())), DimensionMismatch);
    put(d / "missing.yaml", "array:\n  rom_image: nope.txt\n");
    CHECK_THROWS_AS(load_rom_image(load_run_config((d / "missing.yaml").string())), IoError);
    CHECK_THROWS_AS(load_run_config((d / "absent.yaml").string()), ConfigError);

    const RunConfig none = parse_run_config("array:\n  rows: 2\n  cols: 3\n");
    CHECK(load_rom_image(none) == RomImage(2, 3));
    fs::remove_all(d);
}
