#include "caos/error.hpp"
#include "caos/stream_io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include <doctest.h>

using namespace caos;

TEST_CASE("number formatting round-trips") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 6.02214076e23, 1.0 / 3.0}) {
        const auto s = format_number(v);
        CHECK(std::stod(s) == v);
        CHECK(s.find(',') == std::string::npos);
    }
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("scene CSV round trip") {
    const SpectralScene s({400.0, 400.5, 401.25}, {1e-9, 0.0, 3.75e-8});
    const auto csv = scene_to_csv(s);
    CHECK(csv.rfind("wavelength_nm,density_w_per_nm\n", 0) == 0);
    CHECK(scene_from_csv(csv) == s);
    CHECK_THROWS_AS(scene_from_csv("wavelength_nm,density_w_per_nm\n400,abc\n401,1\n"), Error);
}

TEST_CASE("codebook CSV") {
    const auto csv = codebook_to_csv(sylvester_codebook(4));
    CHECK(csv == "c0,c1,c2,c3\n1,1,1,1\n1,-1,1,-1\n1,1,-1,-1\n1,-1,-1,1\n");
}

TEST_CASE("stream CSV and raw round trips") {
    const SampleStream s{65535.0, {0.0, 1.5, -2.25, 1e-9, 9.999}};
    const auto csv = stream_to_csv(s);
    CHECK(csv.rfind("time_s,value\n", 0) == 0);
    CHECK(stream_from_csv(csv) == s);

    const auto raw = stream_to_raw(s);
    REQUIRE(raw.size() == 16 + 8 * s.samples.size());
    double fs = 0.0;
    std::uint64_t len = 0;
    std::memcpy(&fs, raw.data(), 8);
    std::memcpy(&len, raw.data() + 8, 8);
    CHECK(fs == 65535.0);
    CHECK(len == 5);
    CHECK(stream_from_raw(raw) == s);
    CHECK_THROWS_AS(stream_from_raw(raw.substr(0, raw.size() - 3)), Error);
}

TEST_CASE("atomic file write") {
    const auto dir = std::filesystem::temp_directory_path() / "caos_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "a.csv";
    write_file_atomic(path, "x\n1\n");
    CHECK(read_file(path) == "x\n1\n");
    write_file_atomic(path, "y\n");
    CHECK(read_file(path) == "y\n");
    CHECK_FALSE(std::filesystem::exists(dir / "a.csv.tmp"));
    CHECK_THROWS_AS(read_file(dir / "missing.csv"), Error);
    CHECK_THROWS_AS(write_file_atomic(dir / "no" / "such" / "dir.csv", "z"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("DMD frame schedule") {
    const auto book = sylvester_codebook(4);
    const auto cdma = build_plan(ModeConfig::cdma(4, 10.0, 100.0, 3), PixelLayout{3, 1, 1, 0}, book);
    const auto s = export_schedule(cdma);
    CHECK(s.frame_rate_hz == 10.0);
    CHECK(s.frame_count == 4);
    CHECK(s.csv == "p0,p1,p2\n1,1,1\n0,1,0\n1,0,0\n0,0,1\n");

    const auto fm = build_plan(ModeConfig::fm_cdma(4, 10.0, 2, 100.0, 3), PixelLayout{3, 1, 1, 0}, book);
    const auto f = export_schedule(fm);
    CHECK(f.frame_rate_hz == 40.0);
    CHECK(f.frames_per_segment == 4);
    CHECK(f.csv.substr(0, 41) == "p0,p1,p2\n1,1,1\n0,0,0\n1,1,1\n0,0,0\n0,1,0\n0,");
    CHECK(f.timing_json.find("\"frame_count\": 16") != std::string::npos);

    const auto odd = build_plan(ModeConfig::fm_tdma(3.3, 1.0, 100.0), PixelLayout{1, 1, 1, 0}, book);
    CHECK_THROWS_AS(export_schedule(odd), Error);
}
