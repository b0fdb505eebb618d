#pragma once

#include "caos/codebook.hpp"
#include "caos/scene.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace caos {

enum class Mode { cdma, fm_cdma, fm_tdma };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

// Timing and coding parameters of one acquisition.
//   CDMA / FM-CDMA: one segment per code bit, segment = 1/f_B, N = round(f_s/f_B).
//   FM-TDMA: one segment per pixel slot, segment = T_D, N = round(f_s*T_D).
struct ModeConfig {
    Mode mode = Mode::cdma;
    double bit_rate_hz = 1000.0;       // f_B
    double carrier_hz = 0.0;           // f_c
    int carrier_ratio = 0;             // P = f_c / f_B (FM-CDMA)
    double sample_rate_hz = 65535.0;   // f_s
    int samples_per_segment = 66;      // N
    double slot_duration_s = 0.0;      // T_D (FM-TDMA)
    int code_length = 128;             // W
    std::vector<int> assigned_rows;    // one codebook row per pixel, never row 0

    static ModeConfig cdma(int code_length, double bit_rate_hz, double sample_rate_hz, int pixel_count);
    static ModeConfig fm_cdma(int code_length, double bit_rate_hz, int carrier_ratio, double sample_rate_hz,
                              int pixel_count);
    static ModeConfig fm_tdma(double carrier_hz, double slot_duration_s, double sample_rate_hz);

    bool is_cdma() const { return mode != Mode::fm_tdma; }
    bool has_carrier() const { return mode != Mode::cdma; }
    double segment_duration_s() const;
    int segment_count(int pixel_count) const;
    // Nearest DFT bin (round-half-even) of the carrier for an n-sample segment.
    long carrier_bin(std::size_t n) const;
    bool carrier_bin_centered() const;
    // Re-derives N from f_s and the segment duration.
    void recompute_samples_per_segment();

    // Throws ErrorKind::config on inconsistent timing and ErrorKind::capacity
    // when a CDMA mode is asked to carry more than W-1 pixels.
    void validate(int pixel_count) const;

    bool operator==(const ModeConfig&) const = default;
};

// Sample-accurate segmentation shared by the encoder and the decoder.
// Segment k covers samples [bounds[k], bounds[k+1]).
class SegmentTiming {
public:
    SegmentTiming(double sample_rate_hz, double segment_duration_s, int segments, double carrier_hz);

    double sample_rate_hz() const { return sample_rate_; }
    double segment_duration_s() const { return segment_duration_; }
    double carrier_hz() const { return carrier_; }
    int segments() const { return static_cast<int>(bounds_.size()) - 1; }
    std::size_t begin(int segment) const { return bounds_[static_cast<std::size_t>(segment)]; }
    std::size_t end(int segment) const { return bounds_[static_cast<std::size_t>(segment) + 1]; }
    std::size_t total_samples() const { return bounds_.back(); }
    double duration_s() const { return segments() * segment_duration_; }

    // 50% duty square carrier, phase referenced to the segment start.
    // Always true when there is no carrier.
    bool carrier_on(std::size_t sample, int segment) const;

private:
    double sample_rate_;
    double segment_duration_;
    double carrier_;
    std::vector<std::size_t> bounds_;
};

SegmentTiming make_timing(const ModeConfig& config, int pixel_count);

// Per-segment binary mirror patterns plus the shared timing.
class ModulationPlan {
public:
    ModulationPlan(Mode mode, int pixels, SegmentTiming timing, std::vector<std::uint8_t> patterns);

    Mode mode() const { return mode_; }
    int pixel_count() const { return pixels_; }
    const SegmentTiming& timing() const { return timing_; }
    double duration_s() const { return timing_.duration_s(); }

    // Code-level state of a pixel during a segment (before the carrier).
    bool pattern(int segment, int pixel) const {
        return patterns_[static_cast<std::size_t>(segment) * pixels_ + pixel] != 0;
    }
    // Mirror state of a pixel at a given ADC sample.
    bool state(int pixel, std::size_t sample) const;
    int segment_of(std::size_t sample) const;

private:
    Mode mode_;
    int pixels_;
    SegmentTiming timing_;
    std::vector<std::uint8_t> patterns_;
};

ModulationPlan build_plan(const ModeConfig& config, const PixelLayout& layout, const Codebook& codebook);

} // namespace caos
