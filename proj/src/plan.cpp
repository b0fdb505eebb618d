#include "caos/plan.hpp"

#include "caos/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace caos {

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::cdma: return "CDMA";
    case Mode::fm_cdma: return "FM-CDMA";
    case Mode::fm_tdma: return "FM-TDMA";
    }
    return "?";
}

Mode mode_from_string(std::string_view name) {
    if (name == "CDMA" || name == "cdma")
        return Mode::cdma;
    if (name == "FM-CDMA" || name == "fm-cdma" || name == "fm_cdma")
        return Mode::fm_cdma;
    if (name == "FM-TDMA" || name == "fm-tdma" || name == "fm_tdma")
        return Mode::fm_tdma;
    fail(ErrorKind::config, fmt::format("unknown CAOS mode '{}'", name));
}

namespace {

std::vector<int> default_rows(int pixel_count) {
    std::vector<int> rows(static_cast<std::size_t>(pixel_count));
    for (int i = 0; i < pixel_count; ++i)
        rows[static_cast<std::size_t>(i)] = i + 1;
    return rows;
}

} // namespace

ModeConfig ModeConfig::cdma(int code_length, double bit_rate, double sample_rate, int pixel_count) {
    ModeConfig c;
    c.mode = Mode::cdma;
    c.code_length = code_length;
    c.bit_rate_hz = bit_rate;
    c.sample_rate_hz = sample_rate;
    c.assigned_rows = default_rows(pixel_count);
    c.recompute_samples_per_segment();
    return c;
}

ModeConfig ModeConfig::fm_cdma(int code_length, double bit_rate, int carrier_ratio, double sample_rate,
                               int pixel_count) {
    ModeConfig c = cdma(code_length, bit_rate, sample_rate, pixel_count);
    c.mode = Mode::fm_cdma;
    c.carrier_ratio = carrier_ratio;
    c.carrier_hz = bit_rate * carrier_ratio;
    return c;
}

ModeConfig ModeConfig::fm_tdma(double carrier, double slot_duration, double sample_rate) {
    ModeConfig c;
    c.mode = Mode::fm_tdma;
    c.bit_rate_hz = 0.0;
    c.carrier_hz = carrier;
    c.slot_duration_s = slot_duration;
    c.sample_rate_hz = sample_rate;
    c.code_length = 0;
    c.recompute_samples_per_segment();
    return c;
}

double ModeConfig::segment_duration_s() const { return is_cdma() ? 1.0 / bit_rate_hz : slot_duration_s; }

int ModeConfig::segment_count(int pixel_count) const { return is_cdma() ? code_length : pixel_count; }

long ModeConfig::carrier_bin(std::size_t n) const {
    return std::lrint(carrier_hz * static_cast<double>(n) / sample_rate_hz);
}

bool ModeConfig::carrier_bin_centered() const {
    if (!has_carrier())
        return true;
    const double exact = carrier_hz * samples_per_segment / sample_rate_hz;
    return std::abs(exact - std::nearbyint(exact)) < 1e-9 * std::max(1.0, exact);
}

void ModeConfig::recompute_samples_per_segment() {
    const double seg = segment_duration_s();
    if (std::isfinite(seg) && seg > 0.0)
        samples_per_segment = static_cast<int>(std::lrint(sample_rate_hz * seg));
}

void ModeConfig::validate(int pixel_count) const {
    require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), ErrorKind::config, "sample rate must be positive");
    require(pixel_count >= 1, ErrorKind::config, "at least one CAOS pixel is required");
    if (is_cdma()) {
        require(bit_rate_hz > 0.0 && std::isfinite(bit_rate_hz), ErrorKind::config, "bit rate must be positive");
        require(code_length >= 2 && is_power_of_two(code_length), ErrorKind::config,
                fmt::format("code length {} must be a power of two >= 2", code_length));
        require(pixel_count <= code_length - 1, ErrorKind::capacity,
                fmt::format("{} pixels exceed the {} usable Walsh codes of a W={} codebook", pixel_count,
                            code_length - 1, code_length));
        require(static_cast<int>(assigned_rows.size()) == pixel_count, ErrorKind::config,
                fmt::format("{} assigned code rows for {} pixels", assigned_rows.size(), pixel_count));
        std::set<int> seen;
        for (int r : assigned_rows) {
            require(r >= 1 && r < code_length, ErrorKind::config,
                    fmt::format("assigned row {} outside [1, {}]", r, code_length - 1));
            require(seen.insert(r).second, ErrorKind::config, fmt::format("code row {} assigned twice", r));
        }
    } else {
        require(slot_duration_s > 0.0 && std::isfinite(slot_duration_s), ErrorKind::config,
                "TDMA slot duration must be positive");
    }
    const double seg = segment_duration_s();
    const long expected_n = std::lrint(sample_rate_hz * seg);
    require(expected_n >= 1, ErrorKind::config, "segment shorter than one ADC sample");
    require(samples_per_segment == expected_n, ErrorKind::config,
            fmt::format("N={} inconsistent with f_s * segment = {}", samples_per_segment, expected_n));
    if (has_carrier()) {
        require(carrier_hz > 0.0 && carrier_hz < sample_rate_hz / 2.0, ErrorKind::config,
                fmt::format("carrier {} Hz must lie in (0, f_s/2 = {} Hz)", carrier_hz, sample_rate_hz / 2.0));
        require(carrier_bin(static_cast<std::size_t>(samples_per_segment)) >= 1, ErrorKind::config,
                "carrier does not fall on a resolvable FFT bin");
    }
    if (mode == Mode::fm_cdma) {
        require(carrier_ratio >= 1, ErrorKind::config, "carrier ratio P must be an integer >= 1");
        require(std::abs(carrier_hz - bit_rate_hz * carrier_ratio) <= 1e-9 * carrier_hz, ErrorKind::config,
                fmt::format("f_c = {} Hz differs from f_B * P = {} Hz", carrier_hz, bit_rate_hz * carrier_ratio));
    }
}

SegmentTiming::SegmentTiming(double sample_rate, double segment_duration, int segments, double carrier)
    : sample_rate_(sample_rate), segment_duration_(segment_duration), carrier_(carrier) {
    require(segments >= 1, ErrorKind::config, "plan needs at least one segment");
    bounds_.resize(static_cast<std::size_t>(segments) + 1);
    for (int k = 0; k <= segments; ++k) {
        // First sample at or after the segment's start time.
        const double start = k * segment_duration * sample_rate;
        bounds_[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::ceil(start - 1e-7));
    }
    for (int k = 0; k < segments; ++k)
        require(end(k) > begin(k), ErrorKind::config, "segment shorter than one ADC sample");
}

bool SegmentTiming::carrier_on(std::size_t sample, int segment) const {
    if (carrier_ <= 0.0)
        return true;
    // product before division keeps half-cycle boundaries exact and the
    // pattern identical across segments of integral length
    const double rel = static_cast<double>(sample) - segment * segment_duration_ * sample_rate_;
    const double phase = rel * carrier_ / sample_rate_;
    return phase - std::floor(phase) < 0.5;
}

SegmentTiming make_timing(const ModeConfig& config, int pixel_count) {
    return {config.sample_rate_hz, config.segment_duration_s(), config.segment_count(pixel_count),
            config.has_carrier() ? config.carrier_hz : 0.0};
}

ModulationPlan::ModulationPlan(Mode mode, int pixels, SegmentTiming timing, std::vector<std::uint8_t> patterns)
    : mode_(mode), pixels_(pixels), timing_(std::move(timing)), patterns_(std::move(patterns)) {
    require(patterns_.size() == static_cast<std::size_t>(timing_.segments()) * pixels_, ErrorKind::shape,
            "pattern table does not match segments x pixels");
}

int ModulationPlan::segment_of(std::size_t sample) const {
    require(sample < timing_.total_samples(), ErrorKind::range, "sample index beyond the plan");
    int lo = 0;
    int hi = timing_.segments() - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (timing_.begin(mid) <= sample)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

bool ModulationPlan::state(int pixel, std::size_t sample) const {
    const int seg = segment_of(sample);
    return pattern(seg, pixel) && timing_.carrier_on(sample, seg);
}

ModulationPlan build_plan(const ModeConfig& config, const PixelLayout& layout, const Codebook& codebook) {
    const int m = layout.pixel_count;
    config.validate(m);
    if (config.is_cdma())
        require(codebook.order() == config.code_length, ErrorKind::config,
                fmt::format("codebook order {} differs from code length {}", codebook.order(), config.code_length));

    SegmentTiming timing = make_timing(config, m);
    const int segments = timing.segments();
    std::vector<std::uint8_t> patterns(static_cast<std::size_t>(segments) * m, 0);
    for (int k = 0; k < segments; ++k) {
        for (int i = 0; i < m; ++i) {
            const bool on = config.is_cdma()
                                ? codebook.unipolar(config.assigned_rows[static_cast<std::size_t>(i)], k)
                                : (i == k);
            patterns[static_cast<std::size_t>(k) * m + i] = on ? 1 : 0;
        }
    }
    return {config.mode, m, std::move(timing), std::move(patterns)};
}

} // namespace caos
