#pragma once

#include <vector>

namespace caos {

// Digitized photodetector output, volts after quantization.
struct SampleStream {
    double sample_rate_hz = 0.0;
    std::vector<double> samples;

    bool operator==(const SampleStream&) const = default;
};

} // namespace caos
