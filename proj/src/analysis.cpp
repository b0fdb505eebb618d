#include "caos/analysis.hpp"

#include "caos/error.hpp"
#include "caos/parallel.hpp"
#include "caos/seed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace caos {

SpectralScene make_source(const SourceConfig& s) {
    if (s.kind == SourceConfig::Kind::flat)
        return flat_scene(s.lambda_min_nm, s.lambda_max_nm, s.grid_step_nm, s.total_power_w);
    return blackbody_scene(s.temperature_k, s.lambda_min_nm, s.lambda_max_nm, s.grid_step_nm, s.total_power_w);
}

void Experiment::validate() const {
    grating.validate();
    layout.validate(grating);
    require(blur_fwhm_nm >= 0.0, ErrorKind::config, "blur FWHM must be >= 0");
    mode.validate(layout.pixel_count);
    detector.validate();
    adc.validate();
    require(std::abs(adc.sample_rate_hz - mode.sample_rate_hz) <= 1e-12 * mode.sample_rate_hz, ErrorKind::config,
            fmt::format("ADC sample rate {} differs from mode sample rate {}", adc.sample_rate_hz,
                        mode.sample_rate_hz));
    require(exposure_fraction >= 0.0 && exposure_fraction <= 1.0, ErrorKind::config,
            "exposure fraction must lie in [0, 1]");
}

namespace {

Codebook codebook_for(const ModeConfig& mode) { return sylvester_codebook(mode.is_cdma() ? mode.code_length : 2); }

SpectralScene filtered_scene(const Experiment& e, bool include_nd) {
    SpectralScene scene = make_source(e.source);
    for (const auto& f : e.filters)
        if (include_nd || !f.is_neutral_density())
            scene = apply_filter(scene, f);
    return scene;
}

// Largest optical power the plan puts on the detector at once.
double peak_on_power(const ModulationPlan& plan, std::span<const double> powers) {
    double peak = 0.0;
    for (int k = 0; k < plan.timing().segments(); ++k) {
        double on = 0.0;
        for (int i = 0; i < plan.pixel_count(); ++i)
            if (plan.pattern(k, i))
                on += powers[static_cast<std::size_t>(i)];
        peak = std::max(peak, on);
    }
    return peak;
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

Pipeline::Pipeline(Experiment experiment)
    : experiment_((experiment.validate(), std::move(experiment))),
      codebook_(codebook_for(experiment_.mode)),
      plan_(build_plan(experiment_.mode, experiment_.layout, codebook_)),
      centers_(experiment_.layout.centers_nm(experiment_.grating)) {
    if (experiment_.exposure_fraction > 0.0) {
        const auto bins = bin_powers(filtered_scene(experiment_, false), experiment_.grating, experiment_.layout,
                                     experiment_.blur_fwhm_nm);
        const double peak_volts = peak_on_power(plan_, bins) * experiment_.detector.volts_per_watt();
        require(peak_volts > 0.0, ErrorKind::config, "exposure control needs a scene that reaches the detector");
        exposure_scale_ = experiment_.exposure_fraction * experiment_.detector.saturation_v / peak_volts;
    }
}

std::vector<double> Pipeline::truth(double extra_od) const {
    SpectralScene scene = filtered_scene(experiment_, true);
    if (extra_od > 0.0)
        scene = apply_filter(scene, FilterModel(NeutralDensity{extra_od}));
    auto bins = bin_powers(scene, experiment_.grating, experiment_.layout, experiment_.blur_fwhm_nm);
    for (auto& b : bins)
        b *= exposure_scale_;
    return bins;
}

SampleStream Pipeline::detect_stream(std::span<const double> powers, std::uint64_t seed) const {
    DetectorConfig det = experiment_.detector;
    det.rng_seed = seed;
    return detect(plan_, powers, det, experiment_.adc);
}

RecoveredSpectrum Pipeline::decode(const SampleStream& stream) const {
    return decode_stream(stream, experiment_.mode, codebook_, experiment_.layout.pixel_count,
                         {experiment_.detector.volts_per_watt(), centers_});
}

RecoveredSpectrum Pipeline::acquire(std::span<const double> powers, std::uint64_t seed) const {
    return decode(detect_stream(powers, seed));
}

SystemResponse response_from_spectrum(const RecoveredSpectrum& spectrum, double guard_fraction) {
    SystemResponse r;
    r.amplitudes = spectrum.powers();
    r.centers_nm = spectrum.centers_nm();
    double peak = 0.0;
    for (double a : r.amplitudes)
        peak = std::max(peak, a);
    r.guard = guard_fraction * peak;
    return r;
}

SystemResponse measure_system_response(const Experiment& experiment, std::uint64_t seed, double guard_fraction) {
    Experiment bare = experiment;
    bare.filters.clear();
    const Pipeline pipeline(std::move(bare));
    return response_from_spectrum(pipeline.acquire(pipeline.truth(), seed), guard_fraction);
}

RecoveredSpectrum normalize(const RecoveredSpectrum& recovered, const SystemResponse& response) {
    require(recovered.size() == response.amplitudes.size(), ErrorKind::shape,
            fmt::format("{} recovered bins against a {}-bin response", recovered.size(), response.amplitudes.size()));
    RecoveredSpectrum out = recovered;
    for (std::size_t i = 0; i < out.bins.size(); ++i) {
        const double ref = response.amplitudes[i];
        auto& bin = out.bins[i];
        if (!(ref > response.guard) || !(ref > 0.0)) {
            bin.valid = false;
            bin.power = 0.0;
            continue;
        }
        bin.power /= ref;
    }
    return out;
}

double measure_fwhm(std::span<const double> centers, std::span<const double> values) {
    require(centers.size() == values.size(), ErrorKind::shape, "FWHM needs one centre per value");
    require(values.size() >= 3, ErrorKind::measurement, "FWHM needs at least three bins");
    const std::size_t peak = argmax(values);
    const double top = values[peak];
    require(top > 0.0, ErrorKind::measurement, "spectrum has no positive peak");
    const double half = 0.5 * top;

    auto crossing = [&](std::size_t inner, std::size_t outer) {
        const double t = (values[inner] - half) / (values[inner] - values[outer]);
        return centers[inner] + t * (centers[outer] - centers[inner]);
    };

    std::optional<double> left, right;
    for (std::size_t j = peak; j-- > 0;) {
        if (values[j] < half) {
            left = crossing(j + 1, j);
            break;
        }
    }
    for (std::size_t j = peak + 1; j < values.size(); ++j) {
        if (values[j] < half) {
            right = crossing(j - 1, j);
            break;
        }
    }
    require(left && right, ErrorKind::measurement, "half-maximum crossing falls outside the spectrum");
    return *right - *left;
}

double measure_fwhm(const RecoveredSpectrum& spectrum) {
    std::vector<double> centers, values;
    for (const auto& b : spectrum.bins) {
        if (!b.valid)
            continue;
        centers.push_back(b.center_nm);
        values.push_back(b.power);
    }
    return measure_fwhm(centers, values);
}

double encoding_time(const ModeConfig& config, int pixel_count) {
    if (config.is_cdma())
        return config.code_length / config.bit_rate_hz;
    return pixel_count * config.slot_duration_s;
}

double calibrate_blur_fwhm(const GratingMap& grating, const PixelLayout& layout, double center_nm,
                           double input_fwhm_nm, double target_fwhm_nm) {
    const SpectralScene flat = flat_scene(grating.lambda_min_nm, grating.lambda_max_nm, 0.1, 1.0);
    const SpectralScene scene = apply_filter(flat, FilterModel(Bandpass{center_nm, input_fwhm_nm, 1.0}));
    const auto centers = layout.centers_nm(grating);
    auto measured = [&](double blur) { return measure_fwhm(centers, bin_powers(scene, grating, layout, blur)); };

    double lo = 0.0;
    double hi = 4.0 * target_fwhm_nm;
    require(measured(lo) <= target_fwhm_nm && measured(hi) >= target_fwhm_nm, ErrorKind::calibration,
            fmt::format("target FWHM {} nm not reachable by blurring a {} nm bandpass", target_fwhm_nm,
                        input_fwhm_nm));
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (measured(mid) < target_fwhm_nm ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> od_grid(double start, double stop, double step) {
    require(step > 0.0 && stop >= start, ErrorKind::config, "OD grid needs step > 0 and stop >= start");
    std::vector<double> grid;
    const auto count = std::lround(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= count; ++i)
        grid.push_back(std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9);
    return grid;
}

std::uint64_t sweep_seed(std::uint64_t master, double od, int trial) {
    return derive_seed(master, static_cast<std::uint64_t>(std::llround(od * 1e6)), static_cast<std::uint64_t>(trial));
}

DrSweepResult dr_sweep(const Experiment& experiment, const SweepOptions& options) {
    require(!options.od_values.empty(), ErrorKind::config, "DR sweep needs at least one OD value");
    require(options.trials >= 1, ErrorKind::config, "DR sweep needs at least one trial per OD");
    require(options.snr_threshold > 0.0, ErrorKind::config, "SNR threshold must be positive");
    for (std::size_t i = 0; i < options.od_values.size(); ++i) {
        require(options.od_values[i] >= 0.0, ErrorKind::config, "OD values must be >= 0");
        if (i > 0)
            require(options.od_values[i] > options.od_values[i - 1], ErrorKind::config,
                    "OD values must be strictly increasing");
    }

    const Pipeline pipeline(experiment);
    const std::size_t m = static_cast<std::size_t>(experiment.layout.pixel_count);
    const std::size_t n_od = options.od_values.size();
    const auto trials = static_cast<std::size_t>(options.trials);

    std::vector<std::vector<double>> truths(n_od);
    for (std::size_t i = 0; i < n_od; ++i)
        truths[i] = pipeline.truth(options.od_values[i]);

    DrSweepResult result;
    const auto base = pipeline.truth(0.0);
    result.target_pixel = static_cast<int>(argmax(base));
    const double base_peak = base[static_cast<std::size_t>(result.target_pixel)];
    require(base_peak > 0.0, ErrorKind::config, "sweep scene puts no light on any pixel");

    std::vector<std::vector<double>> powers(n_od * trials);
    std::vector<double> snrs(n_od * trials);
    parallel_for(
        n_od * trials,
        [&](std::size_t job) {
            const std::size_t i = job / trials;
            const int t = static_cast<int>(job % trials);
            const auto rec = pipeline.acquire(truths[i], sweep_seed(options.master_seed, options.od_values[i], t));
            powers[job] = rec.powers();
            snrs[job] = rec.bins[static_cast<std::size_t>(result.target_pixel)].snr;
        },
        options.workers);

    for (std::size_t i = 0; i < n_od; ++i) {
        DrPoint p;
        p.od = options.od_values[i];
        p.truth_peak_w = truths[i][static_cast<std::size_t>(result.target_pixel)];
        std::vector<double> mean(m, 0.0);
        double snr_sum = 0.0, snr_sq = 0.0, amp_sq = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto& pw = powers[i * trials + t];
            for (std::size_t j = 0; j < m; ++j)
                mean[j] += pw[j] / static_cast<double>(trials);
            const double s = snrs[i * trials + t];
            snr_sum += s;
            snr_sq += s * s;
            const double a = pw[static_cast<std::size_t>(result.target_pixel)];
            amp_sq += a * a;
        }
        const auto tn = static_cast<double>(trials);
        p.recovered_peak_w = mean[static_cast<std::size_t>(result.target_pixel)];
        p.snr = snr_sum / tn;
        if (trials > 1) {
            p.snr_std = std::sqrt(std::max(0.0, (snr_sq - tn * p.snr * p.snr) / (tn - 1.0)));
            p.recovered_std_w =
                std::sqrt(std::max(0.0, (amp_sq - tn * p.recovered_peak_w * p.recovered_peak_w) / (tn - 1.0)));
        }
        p.peak_pixel = static_cast<int>(argmax(mean));
        // Any pixel at or above half of the true peak counts as the peak.
        p.peak_ok = base[static_cast<std::size_t>(p.peak_pixel)] >= 0.5 * base_peak;
        p.passed = p.peak_ok && p.snr >= options.snr_threshold;
        if (p.passed)
            result.max_od_passed = p.od;
        result.points.push_back(p);
    }
    result.dr_db = result.max_od_passed ? 20.0 * *result.max_od_passed : 0.0;

    // Least-squares log-log linearity over the passing points.
    std::vector<double> xs, ys;
    for (const auto& p : result.points) {
        if (p.passed && p.recovered_peak_w > 0.0) {
            xs.push_back(-p.od);
            ys.push_back(std::log10(p.recovered_peak_w));
        }
    }
    result.fitted_points = static_cast<int>(xs.size());
    if (xs.size() >= 2) {
        const auto n = static_cast<double>(xs.size());
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i] / n;
            my += ys[i] / n;
        }
        double sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
            syy += (ys[i] - my) * (ys[i] - my);
        }
        result.slope = sxy / sxx;
        result.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0;
    } else {
        result.slope = std::numeric_limits<double>::quiet_NaN();
        result.correlation = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

} // namespace caos
