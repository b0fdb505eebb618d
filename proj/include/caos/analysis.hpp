#pragma once

#include "caos/codebook.hpp"
#include "caos/decoder.hpp"
#include "caos/photo.hpp"
#include "caos/plan.hpp"
#include "caos/scene.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace caos {

struct SourceConfig {
    enum class Kind { blackbody, flat };
    Kind kind = Kind::blackbody;
    double temperature_k = 2850.0;
    double lambda_min_nm = 369.0;
    double lambda_max_nm = 715.0;
    double grid_step_nm = 0.1;
    double total_power_w = 1e-6;

    bool operator==(const SourceConfig&) const = default;
};

SpectralScene make_source(const SourceConfig& source);

// Everything needed for one source -> encode -> detect -> decode run.
struct Experiment {
    std::string name;
    SourceConfig source;
    std::vector<FilterModel> filters;
    GratingMap grating;
    PixelLayout layout;
    double blur_fwhm_nm = 0.0;
    ModeConfig mode;
    DetectorConfig detector;
    AdcConfig adc;
    // When > 0, the source power is rescaled so that the brightest mirror
    // pattern (with every non-ND filter in place) drives the detector to
    // this fraction of its saturation voltage.
    double exposure_fraction = 0.0;

    void validate() const;
    bool operator==(const Experiment&) const = default;
};

// Immutable, shareable pipeline state for one experiment; acquisitions with
// distinct seeds may run concurrently.
class Pipeline {
public:
    explicit Pipeline(Experiment experiment);

    const Experiment& experiment() const { return experiment_; }
    const Codebook& codebook() const { return codebook_; }
    const ModulationPlan& plan() const { return plan_; }
    const std::vector<double>& centers_nm() const { return centers_; }
    double exposure_scale() const { return exposure_scale_; }

    // Ground-truth per-pixel optical power (W) with an extra ND filter.
    std::vector<double> truth(double extra_od = 0.0) const;
    RecoveredSpectrum acquire(std::span<const double> powers, std::uint64_t seed) const;
    SampleStream detect_stream(std::span<const double> powers, std::uint64_t seed) const;
    RecoveredSpectrum decode(const SampleStream& stream) const;

private:
    Experiment experiment_;
    Codebook codebook_;
    ModulationPlan plan_;
    std::vector<double> centers_;
    double exposure_scale_ = 1.0;
};

struct SystemResponse {
    std::vector<double> amplitudes;
    std::vector<double> centers_nm;
    double guard = 0.0;
};

// Reference acquisition with every test sample removed.
SystemResponse measure_system_response(const Experiment& experiment, std::uint64_t seed,
                                       double guard_fraction = 0.01);
SystemResponse response_from_spectrum(const RecoveredSpectrum& spectrum, double guard_fraction = 0.01);

RecoveredSpectrum normalize(const RecoveredSpectrum& recovered, const SystemResponse& response);

// Separation of the two linearly interpolated half-maximum crossings around
// the global peak of the valid bins.
double measure_fwhm(const RecoveredSpectrum& spectrum);
double measure_fwhm(std::span<const double> centers_nm, std::span<const double> values);

double encoding_time(const ModeConfig& config, int pixel_count);

// Blur FWHM for which a noiseless bandpass of `input_fwhm_nm` on a flat
// source measures `target_fwhm_nm` across the layout's pixels.
double calibrate_blur_fwhm(const GratingMap& grating, const PixelLayout& layout, double center_nm,
                           double input_fwhm_nm, double target_fwhm_nm);

struct SweepOptions {
    std::vector<double> od_values;
    int trials = 20;
    double snr_threshold = 1.2;
    std::uint64_t master_seed = 1;
    unsigned workers = 0;
};

std::vector<double> od_grid(double start, double stop, double step);

struct DrPoint {
    double od = 0.0;
    double truth_peak_w = 0.0;
    double recovered_peak_w = 0.0; // trial mean at the target pixel
    double recovered_std_w = 0.0;
    double snr = 0.0;              // trial mean
    double snr_std = 0.0;
    int peak_pixel = -1;           // argmax of the trial-mean spectrum
    bool peak_ok = false;
    bool passed = false;
};

struct DrSweepResult {
    std::vector<DrPoint> points;
    int target_pixel = -1;
    std::optional<double> max_od_passed;
    double dr_db = 0.0;
    double slope = 0.0;        // d log10(recovered) / d(-od) over passing points
    double correlation = 0.0;
    int fitted_points = 0;
};

// Per-trial seed for sweep point `od` and trial `t`.
std::uint64_t sweep_seed(std::uint64_t master, double od, int trial);

DrSweepResult dr_sweep(const Experiment& experiment, const SweepOptions& options);

} // namespace caos
