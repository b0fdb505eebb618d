#pragma once

#include "caos/codebook.hpp"
#include "caos/plan.hpp"
#include "caos/sample_stream.hpp"

#include <limits>
#include <span>
#include <vector>

namespace caos {

struct BinEstimate {
    double power = 0.0;
    double snr = 0.0;       // amplitude ratio; +inf when the noise floor is zero
    double center_nm = 0.0;
    bool valid = true;

    bool operator==(const BinEstimate&) const = default;
};

struct RecoveredSpectrum {
    std::vector<BinEstimate> bins;

    std::size_t size() const { return bins.size(); }
    std::vector<double> powers() const;
    std::vector<double> centers_nm() const;

    bool operator==(const RecoveredSpectrum&) const = default;
};

// a_i = (2/W) * sum_k h[row_i][k] * m_k, for unipolar encoding with the
// bipolar rows of the codebook.
std::vector<double> decode_cdma(std::span<const double> bit_measurements, const Codebook& codebook,
                                std::span<const int> assigned_rows);

struct DecodeOptions {
    // Converts decoded volts back to optical watts (responsivity * gain).
    double volts_per_watt = 1.0;
    // Optional pixel centre wavelengths copied into the estimates.
    std::vector<double> centers_nm;
};

RecoveredSpectrum decode_stream(const SampleStream& stream, const ModeConfig& config, const Codebook& codebook,
                                int pixel_count, const DecodeOptions& options = {});

} // namespace caos
