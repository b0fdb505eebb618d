#include "caos/dsp.hpp"

#include "caos/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace caos {

namespace {

// FFTW planning is not thread-safe; execution on a private plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        std::lock_guard lock(planner_mutex());
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    void run(std::span<const double> samples, std::vector<std::complex<double>>& spectrum) {
        std::copy(samples.begin(), samples.end(), in_);
        fftw_execute(plan_);
        const double scale = 2.0 / static_cast<double>(n_);
        spectrum.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k <= n_ / 2; ++k)
            spectrum[k] = {out_[k][0] * scale, out_[k][1] * scale};
    }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

RealFft& fft_for(std::size_t n) {
    thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<RealFft>(n);
    return *slot;
}

} // namespace

double fft_processing_gain_db(std::size_t n) {
    require(n >= 2, ErrorKind::domain, "FFT gain needs N >= 2");
    return 10.0 * std::log10(static_cast<double>(n) / 2.0);
}

std::vector<std::complex<double>> amplitude_spectrum(std::span<const double> samples) {
    require(samples.size() >= 2, ErrorKind::domain, "spectrum needs at least two samples");
    std::vector<std::complex<double>> spectrum;
    fft_for(samples.size()).run(samples, spectrum);
    return spectrum;
}

double fft_tone_amplitude(std::span<const double> samples, double carrier_hz, double sample_rate_hz) {
    require(samples.size() >= 2, ErrorKind::domain, "tone estimate needs N >= 2");
    require(sample_rate_hz > 0.0, ErrorKind::domain, "sample rate must be positive");
    require(carrier_hz > 0.0 && carrier_hz < sample_rate_hz / 2.0, ErrorKind::domain,
            fmt::format("carrier {} Hz outside (0, Nyquist = {} Hz)", carrier_hz, sample_rate_hz / 2.0));
    const long bin = std::lrint(carrier_hz * static_cast<double>(samples.size()) / sample_rate_hz);
    require(bin >= 1, ErrorKind::domain, "carrier rounds to the DC bin");
    const auto spectrum = amplitude_spectrum(samples);
    return std::abs(spectrum[static_cast<std::size_t>(bin)]);
}

std::complex<double> dft_bin(std::span<const double> samples, long bin) {
    const auto n = static_cast<long>(samples.size());
    require(n >= 1, ErrorKind::domain, "empty sample block");
    std::complex<double> acc{0.0, 0.0};
    const long k = ((bin % n) + n) % n;
    for (long i = 0; i < n; ++i) {
        // Reduce k*i mod n in integers so the phase stays exact for long blocks.
        const auto r = (static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(n);
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
        acc += samples[static_cast<std::size_t>(i)] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    return acc * (2.0 / static_cast<double>(n));
}

double robust_noise_floor(std::span<const std::complex<double>> spectrum, std::size_t n, double carrier_hz,
                          double sample_rate_hz) {
    const std::size_t last = (n % 2 == 0) ? n / 2 - 1 : n / 2; // skip Nyquist
    std::vector<bool> excluded(spectrum.size(), false);
    excluded[0] = true;

    if (carrier_hz > 0.0) {
        const double exact = carrier_hz * static_cast<double>(n) / sample_rate_hz;
        const long k0 = std::lrint(exact);
        const bool centered = std::abs(exact - static_cast<double>(k0)) < 1e-9 * std::max(1.0, exact);
        const long g = centered && k0 > 0 ? std::gcd(k0, static_cast<long>(n)) : 0;
        if (g >= 8) {
            // A bin-centred carrier sampled over an integer number of
            // periods has all of its harmonics (aliased) on multiples of g.
            for (std::size_t j = 0; j < spectrum.size(); j += static_cast<std::size_t>(g))
                excluded[j] = true;
        } else {
            const long guard = centered ? 0 : 3;
            for (int h = 1; h <= 64; ++h) {
                double x = std::fmod(h * exact, static_cast<double>(n));
                if (x > static_cast<double>(n) / 2.0)
                    x = static_cast<double>(n) - x;
                const long c = std::lrint(x);
                for (long j = c - guard; j <= c + guard; ++j)
                    if (j >= 0 && static_cast<std::size_t>(j) < spectrum.size())
                        excluded[static_cast<std::size_t>(j)] = true;
            }
        }
    }

    std::vector<double> mags;
    mags.reserve(last);
    for (std::size_t j = 1; j <= last && j < spectrum.size(); ++j)
        if (!excluded[j])
            mags.push_back(std::abs(spectrum[j]));
    if (mags.empty())
        return 0.0;
    auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    double median = *mid;
    if (mags.size() % 2 == 0) {
        const double below = *std::max_element(mags.begin(), mid);
        median = 0.5 * (median + below);
    }
    return median * 1.4826 / std::sqrt(std::numbers::pi / 2.0);
}

} // namespace caos
