#pragma once

#include "caos/analysis.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caos {

// Telescope and imaging focal lengths of the bench; informational only.
struct TelescopeOptics {
    double f1_mm = 50.0;
    double f2_mm = 60.0;
    double f4_mm = 38.1;
    bool operator==(const TelescopeOptics&) const = default;
};

struct SweepSettings {
    std::vector<double> od_values = od_grid(0.0, 5.0, 0.1);
    int trials = 20;
    double snr_threshold = 1.2;
    bool operator==(const SweepSettings&) const = default;
};

// Noise-floor calibration target: a single pixel carrying the peak OD 0
// pixel power attenuated by target_dr_db must decode at target_snr.
struct CalibrationSettings {
    double target_dr_db = 0.0;
    double target_snr = 1.2;
    int trials = 200;
    double lower_v_per_rthz = 1e-9;
    double upper_v_per_rthz = 1e-2;
    bool operator==(const CalibrationSettings&) const = default;
};

struct OutputSettings {
    std::string directory = "out";
    std::string spectrum_file = "spectrum.csv";
    bool normalize = false;
    bool operator==(const OutputSettings&) const = default;
};

struct ExperimentConfig {
    Experiment experiment;
    std::string description;
    TelescopeOptics telescope;
    std::uint64_t master_seed = 1;
    SweepSettings sweep;
    std::optional<CalibrationSettings> calibration;
    // Full-scale ADC rate used with --full-scale.
    std::optional<double> full_scale_sample_rate_hz;
    OutputSettings output;

    // Re-checks every module invariant plus the cross-section ones.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig config_from_json(std::string_view text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Switches the mode and ADC to the full-scale sample rate and re-derives N.
ExperimentConfig to_full_scale(const ExperimentConfig& config);

} // namespace caos
