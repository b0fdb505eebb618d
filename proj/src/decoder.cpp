#include "caos/decoder.hpp"

#include "caos/dsp.hpp"
#include "caos/error.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include <fmt/format.h>

namespace caos {

std::vector<double> RecoveredSpectrum::powers() const {
    std::vector<double> out;
    out.reserve(bins.size());
    for (const auto& b : bins)
        out.push_back(b.power);
    return out;
}

std::vector<double> RecoveredSpectrum::centers_nm() const {
    std::vector<double> out;
    out.reserve(bins.size());
    for (const auto& b : bins)
        out.push_back(b.center_nm);
    return out;
}

std::vector<double> decode_cdma(std::span<const double> m, const Codebook& codebook, std::span<const int> rows) {
    const int w = codebook.order();
    require(static_cast<int>(m.size()) == w, ErrorKind::shape,
            fmt::format("{} bit measurements for a W={} codebook", m.size(), w));
    std::vector<double> estimates(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] >= 0 && rows[i] < w, ErrorKind::range, fmt::format("code row {} out of range", rows[i]));
        const auto h = codebook.row(rows[i]);
        double acc = 0.0;
        for (int k = 0; k < w; ++k)
            acc += h[static_cast<std::size_t>(k)] * m[static_cast<std::size_t>(k)];
        estimates[i] = 2.0 * acc / w;
    }
    return estimates;
}

namespace {

struct SegmentReading {
    double value = 0.0; // volts, common scale across modes
    double noise = 0.0; // 1-sigma-equivalent noise of value
};

double snr_of(double value, double noise) {
    if (noise > 0.0)
        return std::abs(value) / noise;
    return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

// Lock-in style reading of one carrier segment: the FFT bin at the carrier is
// projected on the bin of the known (sampled) square-wave reference, which
// both removes the carrier phase and divides out its fundamental gain.
class CarrierReader {
public:
    CarrierReader(const ModeConfig& config, const SegmentTiming& timing) : config_(config), timing_(timing) {}

    SegmentReading read(std::span<const double> block, int segment) {
        const auto n = block.size();
        const long bin = config_.carrier_bin(n);
        require(bin >= 1 && static_cast<std::size_t>(bin) <= n / 2, ErrorKind::config,
                "carrier does not fall on a resolvable FFT bin");
        const auto spectrum = amplitude_spectrum(block);
        const auto ref = reference(segment, n, bin);
        const double gain2 = std::norm(ref);
        const auto x = spectrum[static_cast<std::size_t>(bin)];
        const double value = (x * std::conj(ref)).real() / gain2;
        const double floor =
            robust_noise_floor(spectrum, n, config_.carrier_hz, config_.sample_rate_hz) / std::sqrt(gain2);
        return {value, floor};
    }

private:
    std::complex<double> reference(int segment, std::size_t n, long bin) {
        const std::size_t begin = timing_.begin(segment);
        const double offset = static_cast<double>(begin) - segment * timing_.segment_duration_s() *
                                                               timing_.sample_rate_hz();
        const Key key{n, std::llround(offset * 1e9), bin, config_.carrier_hz, config_.sample_rate_hz};
        auto& cache = reference_cache();
        if (auto it = cache.find(key); it != cache.end())
            return it->second;
        std::vector<double> wave(n);
        for (std::size_t i = 0; i < n; ++i)
            wave[i] = timing_.carrier_on(begin + i, segment) ? 1.0 : 0.0;
        const auto g = dft_bin(wave, bin);
        require(std::abs(g) > 0.0, ErrorKind::config, "carrier reference has no fundamental component");
        if (cache.size() > 4096)
            cache.clear();
        cache.emplace(key, g);
        return g;
    }

    using Key = std::tuple<std::size_t, long long, long, double, double>;

    // References depend only on timing, so they are shared across decodes.
    static std::map<Key, std::complex<double>>& reference_cache() {
        thread_local std::map<Key, std::complex<double>> cache;
        return cache;
    }

    const ModeConfig& config_;
    const SegmentTiming& timing_;
};

SegmentReading read_steady(std::span<const double> block) {
    const auto n = static_cast<double>(block.size());
    double mean = 0.0;
    for (double v : block)
        mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : block)
        var += (v - mean) * (v - mean);
    var = block.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

} // namespace

RecoveredSpectrum decode_stream(const SampleStream& stream, const ModeConfig& config, const Codebook& codebook,
                                int pixel_count, const DecodeOptions& options) {
    config.validate(pixel_count);
    require(std::abs(stream.sample_rate_hz - config.sample_rate_hz) <= 1e-12 * config.sample_rate_hz,
            ErrorKind::config,
            fmt::format("stream sample rate {} differs from mode sample rate {}", stream.sample_rate_hz,
                        config.sample_rate_hz));
    if (config.is_cdma())
        require(codebook.order() == config.code_length, ErrorKind::config,
                fmt::format("codebook order {} differs from code length {}", codebook.order(), config.code_length));
    require(options.volts_per_watt > 0.0, ErrorKind::config, "volts-per-watt scale must be positive");
    require(options.centers_nm.empty() || static_cast<int>(options.centers_nm.size()) == pixel_count,
            ErrorKind::shape, "pixel centre list length differs from pixel count");

    const SegmentTiming timing = make_timing(config, pixel_count);
    const std::size_t expected = timing.total_samples();
    const std::size_t have = stream.samples.size();
    require(have + 1 >= expected && have <= expected + 1, ErrorKind::framing,
            fmt::format("stream has {} samples, plan expects {} (T_E * f_s)", have, expected));

    std::vector<SegmentReading> readings(static_cast<std::size_t>(timing.segments()));
    CarrierReader carrier(config, timing);
    for (int k = 0; k < timing.segments(); ++k) {
        const std::size_t b = timing.begin(k);
        const std::size_t e = std::min(timing.end(k), have);
        require(e > b + 1, ErrorKind::framing, "truncated final segment");
        const std::span<const double> block(stream.samples.data() + b, e - b);
        readings[static_cast<std::size_t>(k)] = config.has_carrier() ? carrier.read(block, k) : read_steady(block);
    }

    std::vector<double> values(static_cast<std::size_t>(pixel_count));
    std::vector<double> noise(static_cast<std::size_t>(pixel_count));
    if (config.is_cdma()) {
        std::vector<double> m(readings.size());
        double noise_sq = 0.0;
        for (std::size_t k = 0; k < readings.size(); ++k) {
            m[k] = readings[k].value;
            noise_sq += readings[k].noise * readings[k].noise;
        }
        values = decode_cdma(m, codebook, config.assigned_rows);
        const double sigma = 2.0 * std::sqrt(noise_sq) / config.code_length;
        std::fill(noise.begin(), noise.end(), sigma);
    } else {
        for (int s = 0; s < pixel_count; ++s) {
            values[static_cast<std::size_t>(s)] = readings[static_cast<std::size_t>(s)].value;
            noise[static_cast<std::size_t>(s)] = readings[static_cast<std::size_t>(s)].noise;
        }
    }

    RecoveredSpectrum out;
    out.bins.resize(static_cast<std::size_t>(pixel_count));
    for (std::size_t i = 0; i < out.bins.size(); ++i) {
        auto& bin = out.bins[i];
        bin.power = values[i] / options.volts_per_watt;
        bin.snr = snr_of(values[i], noise[i]);
        bin.center_nm = options.centers_nm.empty() ? 0.0 : options.centers_nm[i];
    }
    return out;
}

} // namespace caos
