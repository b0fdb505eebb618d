#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace caos {

// Sampled spectral power density. Wavelengths in nm, density in W/nm.
// Between samples the density is taken as piecewise linear, so every
// integral below is exact for the sampled curve.
class SpectralScene {
public:
    SpectralScene(std::vector<double> wavelengths_nm, std::vector<double> density_w_per_nm);

    std::span<const double> wavelengths() const { return wavelengths_; }
    std::span<const double> density() const { return density_; }
    std::size_t size() const { return wavelengths_.size(); }
    double lambda_min() const { return wavelengths_.front(); }
    double lambda_max() const { return wavelengths_.back(); }

    double total_power() const;
    // Integral of density over [lo, hi] clipped to the sampled range.
    double integrate(double lo_nm, double hi_nm) const;
    double density_at(double lambda_nm) const;

    bool operator==(const SpectralScene&) const = default;

private:
    std::vector<double> wavelengths_;
    std::vector<double> density_;
    std::vector<double> cumulative_;
};

struct Bandpass {
    double center_nm = 620.0;
    double fwhm_nm = 10.0;
    double peak = 1.0;
    bool operator==(const Bandpass&) const = default;
};

// Zero below cut_nm; above it a monotone cubic (Fritsch-Carlson) through the
// anchor points, held flat past the last anchor.
struct Highpass {
    double cut_nm = 552.8;
    std::vector<std::pair<double, double>> anchors;
    bool operator==(const Highpass&) const = default;
};

struct NeutralDensity {
    double od = 0.0;
    bool operator==(const NeutralDensity&) const = default;
};

class FilterModel {
public:
    using Kind = std::variant<Bandpass, Highpass, NeutralDensity>;

    FilterModel(Kind kind);

    double transmission(double lambda_nm) const;
    const Kind& kind() const { return kind_; }
    bool is_neutral_density() const { return std::holds_alternative<NeutralDensity>(kind_); }

    bool operator==(const FilterModel& other) const { return kind_ == other.kind_; }

private:
    Kind kind_;
    std::vector<std::pair<double, double>> knots_; // Highpass interpolation knots
    std::vector<double> slopes_;
};

// Red dichroic high-pass test sample: ~0 at 552.8 nm, ripple maxima at
// 607.1 nm (normalized to 1) and 631 nm.
FilterModel red_highpass();

struct GratingMap {
    double groove_frequency_per_mm = 600.0;
    double focal_length_mm = 60.0;
    double lambda_min_nm = 369.0;
    double lambda_max_nm = 715.0;
    int dmd_columns = 1024;
    double micromirror_pitch_um = 13.68;
    double incidence_angle_deg = 6.0;      // descriptive
    double stretch_factor = 1.0;
    double dispersion_nm_per_mrad = 1.62;  // descriptive

    void validate() const;
    // Columns actually covered by the dispersed band.
    int used_columns() const;
    double nm_per_column() const;

    bool operator==(const GratingMap&) const = default;
};

double paraxial_width_mm(const GratingMap& map);
double wavelength_to_column(const GratingMap& map, double lambda_nm);
double column_to_wavelength(const GratingMap& map, double column);

struct PixelLayout {
    int pixel_count = 102;
    int pixel_width = 10;
    int pixel_height = 300; // descriptive
    int start_column = 0;

    void validate(const GratingMap& map) const;
    std::pair<double, double> span_nm(const GratingMap& map, int pixel) const;
    double center_nm(const GratingMap& map, int pixel) const;
    std::vector<double> centers_nm(const GratingMap& map) const;
    // Pixel whose wavelength span contains lambda, or -1.
    int pixel_containing(const GratingMap& map, double lambda_nm) const;

    bool operator==(const PixelLayout&) const = default;
};

SpectralScene blackbody_scene(double temperature_k, double lambda_min_nm, double lambda_max_nm, double grid_step_nm,
                              double total_power_w);
SpectralScene flat_scene(double lambda_min_nm, double lambda_max_nm, double grid_step_nm, double total_power_w);

SpectralScene apply_filter(const SpectralScene& scene, const FilterModel& filter);

// Gaussian instrument blur in wavelength; kernel weights are renormalized
// where the kernel runs off the sampled range.
SpectralScene blur_scene(const SpectralScene& scene, double fwhm_nm);

std::vector<double> bin_powers(const SpectralScene& scene, const GratingMap& map, const PixelLayout& layout,
                               double blur_fwhm_nm);

} // namespace caos
