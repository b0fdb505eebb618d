#include "caos/decoder.hpp"
#include "caos/error.hpp"

#include <bit>
#include <cmath>
#include <random>

#include <doctest.h>

using namespace caos;

namespace {

// Independent encoder: builds the detector voltage sample by sample from the
// Walsh bits and the square carrier, without the library's plan or detector.
SampleStream synth(const ModeConfig& cfg, const std::vector<double>& volts) {
    const int m = static_cast<int>(volts.size());
    const int segments = cfg.is_cdma() ? cfg.code_length : m;
    const double seg = cfg.is_cdma() ? 1.0 / cfg.bit_rate_hz : cfg.slot_duration_s;
    const auto total = static_cast<std::size_t>(std::ceil(segments * seg * cfg.sample_rate_hz - 1e-7));
    SampleStream s{cfg.sample_rate_hz, std::vector<double>(total, 0.0)};
    for (std::size_t n = 0; n < total; ++n) {
        const double t = static_cast<double>(n) / cfg.sample_rate_hz;
        int k = static_cast<int>(std::floor(t / seg + 1e-9));
        while (k > 0 && std::ceil(k * seg * cfg.sample_rate_hz - 1e-7) > static_cast<double>(n))
            --k;
        bool carrier = true;
        if (cfg.has_carrier()) {
            const double ph = (static_cast<double>(n) - k * seg * cfg.sample_rate_hz) * cfg.carrier_hz / cfg.sample_rate_hz;
            carrier = ph - std::floor(ph) < 0.5;
        }
        double v = 0.0;
        for (int i = 0; i < m; ++i) {
            bool on;
            if (cfg.is_cdma()) {
                const int r = cfg.assigned_rows[static_cast<std::size_t>(i)];
                on = std::popcount(static_cast<unsigned>(r & k)) % 2 == 0;
            } else {
                on = (i == k);
            }
            if (on && carrier)
                v += volts[static_cast<std::size_t>(i)];
        }
        s.samples[n] = v;
    }
    return s;
}

std::vector<double> random_volts(int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> v(static_cast<std::size_t>(m));
    for (auto& x : v)
        x = u(rng);
    return v;
}

} // namespace

TEST_CASE("CDMA correlation inverts unipolar encoding") {
    const auto book = sylvester_codebook(16);
    const std::vector<int> rows{3, 1, 15, 8};
    const std::vector<double> a{0.5, 2.0, 0.0, 1.25};
    std::vector<double> m(16, 0.0);
    for (int k = 0; k < 16; ++k)
        for (std::size_t i = 0; i < rows.size(); ++i)
            m[static_cast<std::size_t>(k)] += a[i] * (book.at(rows[i], k) + 1) / 2;
    const auto est = decode_cdma(m, book, rows);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(est[i] == doctest::Approx(a[i]).epsilon(1e-14));
    CHECK_THROWS_AS(decode_cdma(std::vector<double>(8), book, rows), Error);
}

TEST_CASE("stream decode recovers every mode exactly") {
    const int m = 12;
    const auto volts = random_volts(m, 9);
    const std::vector<ModeConfig> modes{ModeConfig::cdma(16, 1000.0, 65535.0, m),
                                        ModeConfig::fm_cdma(16, 2.0, 64, 1024.0, m),
                                        ModeConfig::fm_tdma(130.0, 0.25, 1000.0)};
    for (const auto& cfg : modes) {
        CAPTURE(to_string(cfg.mode));
        const auto book = sylvester_codebook(cfg.is_cdma() ? cfg.code_length : 2);
        const auto rec = decode_stream(synth(cfg, volts), cfg, book, m, {2.0, {}});
        REQUIRE(rec.size() == static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            CHECK(rec.bins[static_cast<std::size_t>(i)].power ==
                  doctest::Approx(volts[static_cast<std::size_t>(i)] / 2.0).epsilon(1e-9));
            CHECK(rec.bins[static_cast<std::size_t>(i)].snr > 1e6);
        }
    }
}

TEST_CASE("decode rejects mismatched streams") {
    const auto cfg = ModeConfig::cdma(8, 1000.0, 8000.0, 3);
    const auto book = sylvester_codebook(8);
    auto s = synth(cfg, {1.0, 1.0, 1.0});
    auto expect = [&](const SampleStream& bad, ErrorKind kind) {
        try {
            decode_stream(bad, cfg, book, 3);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == kind);
        }
    };
    auto shorter = s;
    shorter.samples.resize(s.samples.size() - 5);
    expect(shorter, ErrorKind::framing);
    auto off_by_one = s;
    off_by_one.samples.pop_back();
    CHECK_NOTHROW(decode_stream(off_by_one, cfg, book, 3));
    auto rate = s;
    rate.sample_rate_hz = 9000.0;
    expect(rate, ErrorKind::config);
    CHECK_THROWS_AS(decode_stream(s, cfg, sylvester_codebook(16), 3), Error);
    CHECK_THROWS_AS(decode_stream(s, cfg, book, 3, {1.0, {500.0}}), Error);
}

TEST_CASE("noiseless zero signal decodes to zero with zero SNR") {
    const auto cfg = ModeConfig::fm_tdma(100.0, 0.1, 1000.0);
    const SampleStream s{1000.0, std::vector<double>(200, 0.0)};
    const auto rec = decode_stream(s, cfg, sylvester_codebook(2), 2);
    for (const auto& b : rec.bins) {
        CHECK(b.power == 0.0);
        CHECK(b.snr == 0.0);
    }
}

TEST_CASE("FM decode stays unbiased under noise") {
    // Lock-in projection keeps the sign of the noise, so the mean over many
    // trials tends to the true amplitude even at SNR ~ 1.
    const auto cfg = ModeConfig::fm_tdma(128.0, 0.5, 2048.0);
    const auto book = sylvester_codebook(2);
    const double a = 0.01;
    const auto clean = synth(cfg, {a});
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.2);
    double sum = 0.0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        auto s = clean;
        for (auto& v : s.samples)
            v += g(rng);
        sum += decode_stream(s, cfg, book, 1).bins[0].power;
    }
    // per-trial std is about 0.2 * sqrt(2/1024) * pi/2 ~ 0.014
    CHECK(sum / trials == doctest::Approx(a).epsilon(0.25));
}
