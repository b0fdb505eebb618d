#include "caos/config.hpp"
#include "caos/error.hpp"
#include "caos/stream_io.hpp"

#include <filesystem>
#include <string>

#include <doctest.h>

using namespace caos;

namespace {

const std::filesystem::path config_dir = CAOS_CONFIG_DIR;

ErrorKind load_error(const std::string& text) {
    try {
        config_from_json(text);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a load error");
    return ErrorKind::io;
}

std::string minimal(const std::string& mode, const std::string& layout = "") {
    return R"({"name": "t", "scene": {"source": {"kind": "flat"}}, "optics": {)" + layout + R"(}, "mode": )" + mode +
           "}";
}

} // namespace

TEST_CASE("bundled presets load, validate and round-trip") {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(config_dir)) {
        if (entry.path().extension() != ".json")
            continue;
        CAPTURE(entry.path().string());
        const auto c = load_config(entry.path());
        CHECK(c.experiment.name == entry.path().stem().string());
        const auto again = config_from_json(config_to_json(c));
        CHECK(again == c);
        CHECK(config_to_json(again) == config_to_json(c));
        ++count;
    }
    CHECK(count >= 6);
}

TEST_CASE("preset contents") {
    const auto fig4 = load_config(config_dir / "fig4_fmcdma.json");
    CHECK(fig4.experiment.mode.mode == Mode::fm_cdma);
    CHECK(fig4.experiment.mode.carrier_hz == 520.0);
    REQUIRE(fig4.experiment.filters.size() == 2);
    CHECK(fig4.experiment.filters[0] == FilterModel(Bandpass{620.0, 10.0, 1.0}));
    CHECK(fig4.experiment.filters[1] == FilterModel(NeutralDensity{2.5}));

    const auto full = to_full_scale(fig4);
    CHECK(full.experiment.mode.samples_per_segment == 131070);
    CHECK(full.experiment.adc.sample_rate_hz == 65535.0);

    const auto fig3 = load_config(config_dir / "fig3_highpass.json");
    CHECK(fig3.experiment.filters.front() == red_highpass());
    CHECK(fig3.output.normalize);
    CHECK_THROWS_AS(to_full_scale(fig3), Error);
}

TEST_CASE("defaults and derived fields") {
    const auto c = config_from_json(minimal(R"({"type": "CDMA", "sample_rate_hz": 65535, "code_length": 128,
                                                 "bit_rate_hz": 1000})"));
    CHECK(c.experiment.mode.samples_per_segment == 66);
    CHECK(c.experiment.mode.assigned_rows.size() == 102);
    CHECK(c.experiment.adc.sample_rate_hz == 65535.0);
    CHECK(c.sweep.od_values.size() == 51);
    CHECK(c.sweep.trials == 20);
    CHECK(c.sweep.snr_threshold == 1.2);

    const auto fm = config_from_json(minimal(R"({"type": "FM-CDMA", "sample_rate_hz": 4096, "code_length": 128,
                                                  "bit_rate_hz": 0.5, "carrier_ratio": 1040})"));
    CHECK(fm.experiment.mode.carrier_hz == 520.0);
    CHECK(fm.experiment.mode.samples_per_segment == 8192);
}

TEST_CASE("cross-field validation at load") {
    const std::string cdma = R"({"type": "CDMA", "sample_rate_hz": 65535, "code_length": 128, "bit_rate_hz": 1000})";
    CHECK(load_error(minimal(cdma, R"("layout": {"pixel_count": 140, "pixel_width": 7})")) == ErrorKind::capacity);
    CHECK(load_error(minimal(cdma, R"("layout": {"pixel_count": 103})")) == ErrorKind::capacity);
    CHECK(load_error(minimal(R"({"type": "CDMA", "sample_rate_hz": 65535, "code_length": 100, "bit_rate_hz": 1000})")) ==
          ErrorKind::config);
    CHECK(load_error(R"({"name": "t", "scene": {"source": {}}, "optics": {}, "mode": )" + cdma +
                     R"(, "adc": {"sample_rate_hz": 48000}})") == ErrorKind::config);
    CHECK(load_error(minimal(cdma) + "x") == ErrorKind::config);
    CHECK(load_error(R"({"name": "t", "scene": {"source": {}}, "optics": {}, "mode": )" + cdma +
                     R"(, "detektor": {}})") == ErrorKind::config);
    CHECK(load_error(R"({"name": "t", "scene": {"source": {}}, "optics": {}, "mode": )" + cdma +
                     R"(, "sweep": {"od_values": [0, 1, 0.5]}})") == ErrorKind::config);
    CHECK(load_error(R"({"name": 5, "scene": {"source": {}}, "optics": {}, "mode": )" + cdma + "}") ==
          ErrorKind::config);
    CHECK(load_error(R"({"name": "t", "scene": {"source": {}, "filters": [{"type": "notch"}]}, "optics": {},
                         "mode": )" + cdma + "}") == ErrorKind::config);
}

TEST_CASE("sweep grid specification") {
    const std::string cdma = R"({"type": "CDMA", "sample_rate_hz": 65535, "code_length": 128, "bit_rate_hz": 1000})";
    const auto c = config_from_json(R"({"name": "t", "scene": {"source": {}}, "optics": {}, "mode": )" + cdma +
                                    R"(, "sweep": {"od_start": 1, "od_stop": 2, "od_step": 0.25, "trials": 3}})");
    CHECK(c.sweep.od_values == std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});
    CHECK(c.sweep.trials == 3);
    CHECK(load_error(R"({"name": "t", "scene": {"source": {}}, "optics": {}, "mode": )" + cdma +
                     R"(, "sweep": {"od_values": [0], "od_step": 0.1}})") == ErrorKind::config);
}
