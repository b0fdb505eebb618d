#pragma once

#include "caos/plan.hpp"
#include "caos/sample_stream.hpp"

#include <cstdint>
#include <span>

namespace caos {

struct DetectorConfig {
    double responsivity_a_per_w = 0.5;
    double transimpedance_v_per_a = 2.5e7;
    double noise_floor_v_per_rthz = 0.0; // white, signal independent
    double dark_offset_v = 0.0;
    bool shot_noise = false;
    double shot_wavelength_nm = 620.0;   // photon energy used for shot noise
    double saturation_v = 10.0;
    std::uint64_t rng_seed = 1;

    double volts_per_watt() const { return responsivity_a_per_w * transimpedance_v_per_a; }
    // Per-sample noise standard deviation at sample rate f_s.
    double noise_sigma_v(double sample_rate_hz) const;
    void validate() const;

    bool operator==(const DetectorConfig&) const = default;
};

struct AdcConfig {
    double sample_rate_hz = 65535.0;
    int bits = 16;
    double full_scale_v = 10.0;
    bool quantize = true;

    double step_v() const;
    void validate() const;

    bool operator==(const AdcConfig&) const = default;
};

// Optical power per pixel -> mirror modulation -> photocurrent -> amplifier
// with noise -> clipping -> ADC. Deterministic for a fixed rng_seed.
SampleStream detect(const ModulationPlan& plan, std::span<const double> bin_powers, const DetectorConfig& det,
                    const AdcConfig& adc);

struct CalibrationOptions {
    int trials = 200;
    double lower_v_per_rthz = 1e-9;
    double upper_v_per_rthz = 1e-2;
    double rel_tolerance = 1e-3;
    std::uint64_t master_seed = 1;
    unsigned workers = 0;
};

// Mean decoded SNR of a single lit pixel at `power` watts over `trials`
// acquisitions with seeds derived from master_seed.
double mean_single_pixel_snr(const DetectorConfig& det, const AdcConfig& adc, const ModeConfig& mode, double power,
                             int trials, std::uint64_t master_seed, unsigned workers = 0);

// Bisection (in log noise floor) for the noise density at which a single
// pixel of target_power decodes with mean SNR target_snr.
double calibrate_noise_floor(const DetectorConfig& det, const AdcConfig& adc, double target_power,
                             double target_snr, const ModeConfig& mode, const CalibrationOptions& options = {});

} // namespace caos
