#include "caos/scene.hpp"

#include "caos/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace caos {

namespace {

constexpr double planck_h = 6.62607015e-34;
constexpr double light_c = 299792458.0;
constexpr double boltzmann_k = 1.380649e-23;

std::vector<double> uniform_grid(double lo, double hi, double step) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorKind::domain,
            fmt::format("wavelength range [{}, {}] must be increasing", lo, hi));
    require(step > 0.0, ErrorKind::domain, "grid step must be positive");
    const auto intervals = std::max<long>(1, std::lround(std::ceil((hi - lo) / step - 1e-9)));
    std::vector<double> grid(static_cast<std::size_t>(intervals) + 1);
    for (long i = 0; i < intervals; ++i)
        grid[static_cast<std::size_t>(i)] = lo + static_cast<double>(i) * step;
    grid.back() = hi;
    return grid;
}

double gaussian_transmission(const Bandpass& bp, double lambda) {
    const double d = (lambda - bp.center_nm) / bp.fwhm_nm;
    return bp.peak * std::exp(-4.0 * std::numbers::ln2 * d * d);
}

// Fritsch-Carlson slopes: zero at local extrema of the data, so every
// anchor that is a local maximum stays one in the interpolant.
std::vector<double> monotone_slopes(const std::vector<std::pair<double, double>>& pts) {
    const std::size_t n = pts.size();
    std::vector<double> slopes(n, 0.0);
    if (n < 2)
        return slopes;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = pts[i + 1].first - pts[i].first;
        delta[i] = (pts[i + 1].second - pts[i].second) / h[i];
    }
    slopes.front() = delta.front();
    slopes.back() = delta.back();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slopes[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // End slopes must not overshoot.
    if (slopes.front() * delta.front() <= 0.0)
        slopes.front() = 0.0;
    if (slopes.back() * delta.back() <= 0.0)
        slopes.back() = 0.0;
    return slopes;
}

std::vector<std::pair<double, double>> highpass_knots(const Highpass& hp) {
    auto knots = hp.anchors;
    if (knots.empty() || knots.front().first > hp.cut_nm)
        knots.insert(knots.begin(), {hp.cut_nm, 0.0});
    return knots;
}

void validate_highpass(const Highpass& hp) {
    require(std::isfinite(hp.cut_nm), ErrorKind::domain, "high-pass cut must be finite");
    for (std::size_t i = 0; i < hp.anchors.size(); ++i) {
        const auto [x, t] = hp.anchors[i];
        require(t >= 0.0 && t <= 1.0, ErrorKind::domain,
                fmt::format("high-pass anchor transmission {} outside [0, 1]", t));
        require(x >= hp.cut_nm, ErrorKind::domain, "high-pass anchors must not lie below the cut");
        if (i > 0)
            require(x > hp.anchors[i - 1].first, ErrorKind::domain, "high-pass anchors must be strictly increasing");
    }
}

} // namespace

SpectralScene::SpectralScene(std::vector<double> wavelengths_nm, std::vector<double> density_w_per_nm)
    : wavelengths_(std::move(wavelengths_nm)), density_(std::move(density_w_per_nm)) {
    require(wavelengths_.size() >= 2, ErrorKind::domain, "scene needs at least two wavelength samples");
    require(wavelengths_.size() == density_.size(), ErrorKind::shape, "scene wavelength/density length mismatch");
    for (std::size_t i = 0; i < wavelengths_.size(); ++i) {
        require(std::isfinite(wavelengths_[i]), ErrorKind::domain, "scene wavelengths must be finite");
        require(std::isfinite(density_[i]) && density_[i] >= 0.0, ErrorKind::domain,
                "scene density must be finite and non-negative");
        if (i > 0)
            require(wavelengths_[i] > wavelengths_[i - 1], ErrorKind::domain,
                    "scene wavelengths must be strictly increasing");
    }
    cumulative_.resize(wavelengths_.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 1; i < wavelengths_.size(); ++i)
        cumulative_[i] = cumulative_[i - 1] +
                         0.5 * (density_[i] + density_[i - 1]) * (wavelengths_[i] - wavelengths_[i - 1]);
}

double SpectralScene::total_power() const { return cumulative_.back(); }

double SpectralScene::density_at(double lambda) const {
    if (lambda < wavelengths_.front() || lambda > wavelengths_.back())
        return 0.0;
    auto it = std::upper_bound(wavelengths_.begin(), wavelengths_.end(), lambda);
    if (it == wavelengths_.end())
        return density_.back();
    const auto j = static_cast<std::size_t>(it - wavelengths_.begin());
    const double t = (lambda - wavelengths_[j - 1]) / (wavelengths_[j] - wavelengths_[j - 1]);
    return density_[j - 1] + t * (density_[j] - density_[j - 1]);
}

double SpectralScene::integrate(double lo, double hi) const {
    lo = std::max(lo, wavelengths_.front());
    hi = std::min(hi, wavelengths_.back());
    if (!(hi > lo))
        return 0.0;
    // Antiderivative of the piecewise-linear density at x.
    auto primitive = [this](double x) {
        auto it = std::upper_bound(wavelengths_.begin(), wavelengths_.end(), x);
        if (it == wavelengths_.end())
            return cumulative_.back();
        const auto j = static_cast<std::size_t>(it - wavelengths_.begin());
        const double x0 = wavelengths_[j - 1];
        const double d0 = density_[j - 1];
        const double slope = (density_[j] - d0) / (wavelengths_[j] - x0);
        const double dx = x - x0;
        return cumulative_[j - 1] + dx * (d0 + 0.5 * slope * dx);
    };
    return primitive(hi) - primitive(lo);
}

FilterModel::FilterModel(Kind kind) : kind_(std::move(kind)) {
    if (auto* bp = std::get_if<Bandpass>(&kind_)) {
        require(bp->fwhm_nm > 0.0, ErrorKind::domain, "bandpass FWHM must be positive");
        require(bp->peak >= 0.0 && bp->peak <= 1.0, ErrorKind::domain, "bandpass peak transmission outside [0, 1]");
    } else if (auto* nd = std::get_if<NeutralDensity>(&kind_)) {
        require(std::isfinite(nd->od) && nd->od >= 0.0, ErrorKind::domain, "optical density must be >= 0");
    } else {
        const auto& hp = std::get<Highpass>(kind_);
        validate_highpass(hp);
        knots_ = highpass_knots(hp);
        slopes_ = monotone_slopes(knots_);
    }
}

double FilterModel::transmission(double lambda) const {
    if (const auto* bp = std::get_if<Bandpass>(&kind_))
        return gaussian_transmission(*bp, lambda);
    if (const auto* nd = std::get_if<NeutralDensity>(&kind_))
        return std::pow(10.0, -nd->od);

    const auto& hp = std::get<Highpass>(kind_);
    if (lambda < hp.cut_nm)
        return 0.0;
    const auto& knots = knots_;
    if (knots.size() == 1 || lambda >= knots.back().first)
        return knots.back().second;
    auto it = std::upper_bound(knots.begin(), knots.end(), lambda,
                               [](double x, const auto& k) { return x < k.first; });
    const auto j = static_cast<std::size_t>(it - knots.begin());
    const auto [x0, y0] = knots[j - 1];
    const auto [x1, y1] = knots[j];
    const double h = x1 - x0;
    const double t = (lambda - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double value = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * slopes_[j - 1] +
                         (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * slopes_[j];
    return std::clamp(value, 0.0, 1.0);
}

FilterModel red_highpass() {
    // Rising edge from the 552.8 nm null, first ripple maximum at 607.1 nm,
    // second at 631 nm, then a shallow plateau ripple.
    return FilterModel(Highpass{552.8,
                                {{552.8, 0.0},
                                 {572.0, 0.02},
                                 {590.0, 0.55},
                                 {607.1, 1.0},
                                 {619.0, 0.70},
                                 {631.0, 0.93},
                                 {646.0, 0.78},
                                 {665.0, 0.90},
                                 {715.0, 0.88}}});
}

void GratingMap::validate() const {
    require(lambda_min_nm < lambda_max_nm, ErrorKind::domain, "grating band must satisfy lambda_min < lambda_max");
    require(dmd_columns >= 1, ErrorKind::domain, "DMD needs at least one column");
    require(stretch_factor >= 1.0, ErrorKind::domain, "stretch factor must be >= 1");
    require(groove_frequency_per_mm > 0.0 && focal_length_mm > 0.0 && micromirror_pitch_um > 0.0,
            ErrorKind::domain, "groove frequency, focal length and pitch must be positive");
    require(used_columns() >= 1, ErrorKind::domain, "dispersed band covers less than one micromirror column");
}

double paraxial_width_mm(const GratingMap& map) {
    // lines/mm * nm * mm, with nm -> mm.
    return map.groove_frequency_per_mm * (map.lambda_max_nm - map.lambda_min_nm) * 1e-6 * map.focal_length_mm;
}

int GratingMap::used_columns() const {
    const double spread_columns = paraxial_width_mm(*this) * stretch_factor / (micromirror_pitch_um * 1e-3);
    const auto whole = static_cast<long>(std::floor(spread_columns + 1e-6));
    return static_cast<int>(std::min<long>(dmd_columns, whole));
}

double GratingMap::nm_per_column() const { return (lambda_max_nm - lambda_min_nm) / used_columns(); }

double wavelength_to_column(const GratingMap& map, double lambda) {
    require(lambda >= map.lambda_min_nm && lambda <= map.lambda_max_nm, ErrorKind::range,
            fmt::format("wavelength {} nm outside [{}, {}] nm", lambda, map.lambda_min_nm, map.lambda_max_nm));
    return (lambda - map.lambda_min_nm) / map.nm_per_column();
}

double column_to_wavelength(const GratingMap& map, double column) {
    require(column >= 0.0 && column <= map.dmd_columns, ErrorKind::range,
            fmt::format("column {} outside [0, {}]", column, map.dmd_columns));
    return map.lambda_min_nm + column * map.nm_per_column();
}

void PixelLayout::validate(const GratingMap& map) const {
    require(pixel_count >= 1, ErrorKind::domain, "layout needs at least one CAOS pixel");
    require(pixel_width >= 1 && pixel_height >= 1, ErrorKind::domain, "CAOS pixel size must be >= 1 micromirror");
    require(start_column >= 0, ErrorKind::domain, "start column must be >= 0");
    require(static_cast<long>(start_column) + static_cast<long>(pixel_count) * pixel_width <= map.dmd_columns,
            ErrorKind::capacity,
            fmt::format("layout needs {} columns but the DMD has {}",
                        static_cast<long>(start_column) + static_cast<long>(pixel_count) * pixel_width,
                        map.dmd_columns));
}

std::pair<double, double> PixelLayout::span_nm(const GratingMap& map, int pixel) const {
    const double c0 = start_column + static_cast<double>(pixel) * pixel_width;
    return {column_to_wavelength(map, c0), column_to_wavelength(map, c0 + pixel_width)};
}

double PixelLayout::center_nm(const GratingMap& map, int pixel) const {
    const auto [lo, hi] = span_nm(map, pixel);
    return 0.5 * (lo + hi);
}

std::vector<double> PixelLayout::centers_nm(const GratingMap& map) const {
    std::vector<double> centers(static_cast<std::size_t>(pixel_count));
    for (int i = 0; i < pixel_count; ++i)
        centers[static_cast<std::size_t>(i)] = center_nm(map, i);
    return centers;
}

int PixelLayout::pixel_containing(const GratingMap& map, double lambda) const {
    for (int i = 0; i < pixel_count; ++i) {
        const auto [lo, hi] = span_nm(map, i);
        if (lambda >= lo && lambda < hi)
            return i;
    }
    return -1;
}

SpectralScene blackbody_scene(double temperature, double lambda_min, double lambda_max, double grid_step,
                              double total_power) {
    require(temperature > 0.0, ErrorKind::domain, "temperature must be positive");
    require(total_power >= 0.0, ErrorKind::domain, "total power must be >= 0");
    require(lambda_min > 0.0, ErrorKind::domain, "wavelengths must be positive");
    auto grid = uniform_grid(lambda_min, lambda_max, grid_step);
    std::vector<double> density(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lambda_m = grid[i] * 1e-9;
        const double x = planck_h * light_c / (lambda_m * boltzmann_k * temperature);
        density[i] = 1.0 / (std::pow(lambda_m, 5) * std::expm1(x));
    }
    const SpectralScene shape(grid, density);
    const double scale = total_power / shape.total_power();
    for (auto& d : density)
        d *= scale;
    return {std::move(grid), std::move(density)};
}

SpectralScene flat_scene(double lambda_min, double lambda_max, double grid_step, double total_power) {
    require(total_power >= 0.0, ErrorKind::domain, "total power must be >= 0");
    auto grid = uniform_grid(lambda_min, lambda_max, grid_step);
    std::vector<double> density(grid.size(), total_power / (lambda_max - lambda_min));
    return {std::move(grid), std::move(density)};
}

SpectralScene apply_filter(const SpectralScene& scene, const FilterModel& filter) {
    const auto wl = scene.wavelengths();
    const auto d = scene.density();
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        out[i] = d[i] * filter.transmission(wl[i]);
    return {std::vector<double>(wl.begin(), wl.end()), std::move(out)};
}

SpectralScene blur_scene(const SpectralScene& scene, double fwhm) {
    require(fwhm >= 0.0, ErrorKind::domain, "blur FWHM must be >= 0");
    const auto wl = scene.wavelengths();
    const auto d = scene.density();
    if (fwhm == 0.0)
        return scene;
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const double reach = 5.0 * sigma;
    const std::size_t n = wl.size();

    // Trapezoid quadrature weights for a possibly non-uniform grid.
    std::vector<double> cell(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double left = j > 0 ? wl[j] - wl[j - 1] : 0.0;
        const double right = j + 1 < n ? wl[j + 1] - wl[j] : 0.0;
        cell[j] = 0.5 * (left + right);
    }

    std::vector<double> out(n);
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (wl[lo] < wl[i] - reach)
            ++lo;
        double acc = 0.0;
        double norm = 0.0;
        for (std::size_t j = lo; j < n && wl[j] <= wl[i] + reach; ++j) {
            const double u = (wl[j] - wl[i]) / sigma;
            const double w = std::exp(-0.5 * u * u) * cell[j];
            acc += w * d[j];
            norm += w;
        }
        out[i] = norm > 0.0 ? acc / norm : d[i];
    }
    return {std::vector<double>(wl.begin(), wl.end()), std::move(out)};
}

std::vector<double> bin_powers(const SpectralScene& scene, const GratingMap& map, const PixelLayout& layout,
                               double blur_fwhm) {
    map.validate();
    layout.validate(map);
    const SpectralScene blurred = blur_scene(scene, blur_fwhm);
    std::vector<double> powers(static_cast<std::size_t>(layout.pixel_count));
    for (int i = 0; i < layout.pixel_count; ++i) {
        const auto [lo, hi] = layout.span_nm(map, i);
        powers[static_cast<std::size_t>(i)] = blurred.integrate(lo, hi);
    }
    return powers;
}

} // namespace caos
