#pragma once

#include <complex>
#include <span>
#include <vector>

namespace caos {

// 10*log10(N/2): SNR improvement of an N-point FFT tone estimate over a
// single sample.
double fft_processing_gain_db(std::size_t n_samples);

// Single-sided spectrum of real samples, scaled by 2/N so a cosine of
// amplitude A centred on bin k reads A at bin k. Size N/2 + 1.
std::vector<std::complex<double>> amplitude_spectrum(std::span<const double> samples);

// Magnitude of the bin nearest f_c*N/f_s (round-half-even), scaled by 2/N.
double fft_tone_amplitude(std::span<const double> samples, double carrier_hz, double sample_rate_hz);

// Direct evaluation of one DFT bin, scaled by 2/N. O(N).
std::complex<double> dft_bin(std::span<const double> samples, long bin);

// Robust noise level of a 2/N-scaled spectrum: median magnitude of the bins
// that are neither DC, Nyquist, nor a (possibly aliased) carrier harmonic,
// times 1.4826 / sqrt(pi/2). Returns 0 when no noise bins remain.
double robust_noise_floor(std::span<const std::complex<double>> spectrum, std::size_t n_samples,
                          double carrier_hz, double sample_rate_hz);

} // namespace caos
