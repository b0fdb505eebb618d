#include "caos/photo.hpp"

#include "caos/decoder.hpp"
#include "caos/error.hpp"
#include "caos/parallel.hpp"
#include "caos/seed.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace caos {

double DetectorConfig::noise_sigma_v(double sample_rate_hz) const {
    return noise_floor_v_per_rthz * std::sqrt(sample_rate_hz / 2.0);
}

void DetectorConfig::validate() const {
    require(responsivity_a_per_w >= 0.0 && transimpedance_v_per_a >= 0.0 && noise_floor_v_per_rthz >= 0.0,
            ErrorKind::config, "responsivity, gain and noise floor must be >= 0");
    require(saturation_v > 0.0, ErrorKind::config, "saturation voltage must be positive");
    require(shot_wavelength_nm > 0.0, ErrorKind::config, "shot-noise wavelength must be positive");
}

double AdcConfig::step_v() const { return full_scale_v / std::ldexp(1.0, bits); }

void AdcConfig::validate() const {
    require(bits >= 1 && bits <= 32, ErrorKind::config, "ADC resolution must be 1..32 bits");
    require(full_scale_v > 0.0, ErrorKind::config, "ADC full scale must be positive");
    require(sample_rate_hz > 0.0, ErrorKind::config, "ADC sample rate must be positive");
}

SampleStream detect(const ModulationPlan& plan, std::span<const double> powers, const DetectorConfig& det,
                    const AdcConfig& adc) {
    det.validate();
    adc.validate();
    require(static_cast<int>(powers.size()) == plan.pixel_count(), ErrorKind::shape,
            fmt::format("{} bin powers for a {}-pixel plan", powers.size(), plan.pixel_count()));
    const auto& timing = plan.timing();
    require(std::abs(timing.sample_rate_hz() - adc.sample_rate_hz) <= 1e-12 * adc.sample_rate_hz, ErrorKind::config,
            fmt::format("plan sample rate {} differs from ADC sample rate {}", timing.sample_rate_hz(),
                        adc.sample_rate_hz));

    const double k = det.volts_per_watt();
    const double sigma = det.noise_sigma_v(adc.sample_rate_hz);
    const double step = adc.step_v();
    const double dt = 1.0 / adc.sample_rate_hz;
    const double photon_energy = 6.62607015e-34 * 299792458.0 / (det.shot_wavelength_nm * 1e-9);

    std::mt19937_64 rng(det.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SampleStream out;
    out.sample_rate_hz = adc.sample_rate_hz;
    out.samples.resize(timing.total_samples());

    for (int seg = 0; seg < timing.segments(); ++seg) {
        double on_power = 0.0;
        for (int i = 0; i < plan.pixel_count(); ++i)
            if (plan.pattern(seg, i))
                on_power += powers[static_cast<std::size_t>(i)];

        const double mean_photons = on_power * dt / photon_energy;
        std::poisson_distribution<long long> photons(mean_photons > 0.0 ? mean_photons : 1.0);
        const bool shot = det.shot_noise && mean_photons > 0.0;

        for (std::size_t n = timing.begin(seg); n < timing.end(seg); ++n) {
            double optical = timing.carrier_on(n, seg) ? on_power : 0.0;
            if (shot && optical > 0.0)
                optical = static_cast<double>(photons(rng)) * photon_energy / dt;
            double v = optical * k + det.dark_offset_v;
            if (sigma > 0.0)
                v += sigma * gauss(rng);
            v = std::clamp(v, -det.saturation_v, det.saturation_v);
            if (adc.quantize)
                v = std::clamp(std::nearbyint(v / step) * step, -adc.full_scale_v, adc.full_scale_v);
            out.samples[n] = v;
        }
    }
    return out;
}

namespace {

ModeConfig single_pixel_mode(const ModeConfig& mode) {
    ModeConfig single = mode;
    if (single.is_cdma()) {
        const int row = single.assigned_rows.empty() ? 1 : single.assigned_rows.front();
        single.assigned_rows = {row};
    }
    return single;
}

} // namespace

double mean_single_pixel_snr(const DetectorConfig& det, const AdcConfig& adc, const ModeConfig& mode, double power,
                             int trials, std::uint64_t master_seed, unsigned workers) {
    require(trials >= 1, ErrorKind::config, "need at least one Monte Carlo trial");
    const ModeConfig single = single_pixel_mode(mode);
    const PixelLayout layout{1, 1, 1, 0};
    const Codebook book = sylvester_codebook(single.is_cdma() ? single.code_length : 2);
    const ModulationPlan plan = build_plan(single, layout, book);
    const std::vector<double> powers{power};

    std::vector<double> snr(static_cast<std::size_t>(trials));
    parallel_for(
        snr.size(),
        [&](std::size_t t) {
            DetectorConfig d = det;
            d.rng_seed = derive_seed(master_seed, 0xca1b, t);
            const auto stream = detect(plan, powers, d, adc);
            const auto rec = decode_stream(stream, single, book, 1, {d.volts_per_watt(), {}});
            snr[t] = rec.bins.front().snr;
        },
        workers);
    double sum = 0.0;
    for (double s : snr)
        sum += s;
    return sum / trials;
}

double calibrate_noise_floor(const DetectorConfig& det, const AdcConfig& adc, double target_power, double target_snr,
                             const ModeConfig& mode, const CalibrationOptions& options) {
    require(target_power > 0.0, ErrorKind::calibration, "target power must be positive");
    require(target_snr > 0.0, ErrorKind::calibration, "target SNR must be positive");
    require(options.lower_v_per_rthz > 0.0 && options.upper_v_per_rthz > options.lower_v_per_rthz,
            ErrorKind::calibration, "noise-floor search bounds must satisfy 0 < lower < upper");

    // Common random numbers across probes keep the objective monotone.
    auto snr_at = [&](double floor) {
        DetectorConfig d = det;
        d.noise_floor_v_per_rthz = floor;
        return mean_single_pixel_snr(d, adc, mode, target_power, options.trials, options.master_seed,
                                     options.workers);
    };

    double lo = options.lower_v_per_rthz;
    double hi = options.upper_v_per_rthz;
    const double snr_lo = snr_at(lo);
    const double snr_hi = snr_at(hi);
    require(snr_lo >= target_snr && snr_hi <= target_snr, ErrorKind::calibration,
            fmt::format("SNR target {} not bracketed: SNR {} at {} V/rtHz, {} at {} V/rtHz", target_snr, snr_lo, lo,
                        snr_hi, hi));
    for (int iter = 0; iter < 80 && hi / lo > 1.0 + options.rel_tolerance; ++iter) {
        const double mid = std::sqrt(lo * hi);
        if (snr_at(mid) >= target_snr)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace caos
