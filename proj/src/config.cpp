#include "caos/config.hpp"

#include "caos/error.hpp"
#include "caos/stream_io.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace caos {

using Json = nlohmann::ordered_json;

namespace {

// Object view that rejects unknown keys, so typos surface at load time.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), ErrorKind::config, fmt::format("{} must be an object", path_));
    }

    bool has(const std::string& key) const {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <class T>
    T get(const std::string& key, T fallback) const {
        return has(key) ? convert<T>(j_.at(key), key) : fallback;
    }

    template <class T>
    T need(const std::string& key) const {
        require(has(key), ErrorKind::config, fmt::format("{}.{} is required", path_, key));
        return convert<T>(j_.at(key), key);
    }

    Section sub(const std::string& key) const {
        require(has(key), ErrorKind::config, fmt::format("{}.{} is required", path_, key));
        return {j_.at(key), path_ + "." + key};
    }

    const Json& raw(const std::string& key) const {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            require(seen_.count(key) != 0, ErrorKind::config, fmt::format("unknown key {}.{}", path_, key));
    }

private:
    template <class T>
    T convert(const Json& v, const std::string& key) const {
        try {
            return v.get<T>();
        } catch (const Json::exception&) {
            fail(ErrorKind::config, fmt::format("{}.{} has the wrong type", path_, key));
        }
    }

    const Json& j_;
    std::string path_;
    mutable std::set<std::string> seen_;
};

SourceConfig read_source(const Section& s) {
    SourceConfig c;
    const auto kind = s.get<std::string>("kind", "blackbody");
    if (kind == "blackbody")
        c.kind = SourceConfig::Kind::blackbody;
    else if (kind == "flat")
        c.kind = SourceConfig::Kind::flat;
    else
        fail(ErrorKind::config, fmt::format("unknown source kind '{}'", kind));
    c.temperature_k = s.get("temperature_k", c.temperature_k);
    c.lambda_min_nm = s.get("lambda_min_nm", c.lambda_min_nm);
    c.lambda_max_nm = s.get("lambda_max_nm", c.lambda_max_nm);
    c.grid_step_nm = s.get("grid_step_nm", c.grid_step_nm);
    c.total_power_w = s.get("total_power_w", c.total_power_w);
    s.finish();
    return c;
}

Json write_source(const SourceConfig& c) {
    return Json{{"kind", c.kind == SourceConfig::Kind::flat ? "flat" : "blackbody"},
                {"temperature_k", c.temperature_k},
                {"lambda_min_nm", c.lambda_min_nm},
                {"lambda_max_nm", c.lambda_max_nm},
                {"grid_step_nm", c.grid_step_nm},
                {"total_power_w", c.total_power_w}};
}

FilterModel read_filter(const Section& s) {
    const auto type = s.need<std::string>("type");
    if (type == "bandpass") {
        Bandpass b;
        b.center_nm = s.get("center_nm", b.center_nm);
        b.fwhm_nm = s.get("fwhm_nm", b.fwhm_nm);
        b.peak = s.get("peak", b.peak);
        s.finish();
        return FilterModel(b);
    }
    if (type == "highpass") {
        Highpass h;
        h.cut_nm = s.need<double>("cut_nm");
        h.anchors = s.need<std::vector<std::pair<double, double>>>("anchors");
        s.finish();
        return FilterModel(h);
    }
    if (type == "red_highpass") {
        s.finish();
        return red_highpass();
    }
    if (type == "neutral_density") {
        NeutralDensity nd{s.need<double>("od")};
        s.finish();
        return FilterModel(nd);
    }
    fail(ErrorKind::config, fmt::format("unknown filter type '{}'", type));
}

Json write_filter(const FilterModel& f) {
    if (f == red_highpass())
        return Json{{"type", "red_highpass"}};
    struct Visitor {
        Json operator()(const Bandpass& b) const {
            return Json{{"type", "bandpass"}, {"center_nm", b.center_nm}, {"fwhm_nm", b.fwhm_nm}, {"peak", b.peak}};
        }
        Json operator()(const Highpass& h) const {
            return Json{{"type", "highpass"}, {"cut_nm", h.cut_nm}, {"anchors", h.anchors}};
        }
        Json operator()(const NeutralDensity& n) const { return Json{{"type", "neutral_density"}, {"od", n.od}}; }
    };
    return std::visit(Visitor{}, f.kind());
}

GratingMap read_grating(const Section& s) {
    GratingMap g;
    g.groove_frequency_per_mm = s.get("groove_frequency_per_mm", g.groove_frequency_per_mm);
    g.focal_length_mm = s.get("focal_length_mm", g.focal_length_mm);
    g.lambda_min_nm = s.get("lambda_min_nm", g.lambda_min_nm);
    g.lambda_max_nm = s.get("lambda_max_nm", g.lambda_max_nm);
    g.dmd_columns = s.get("dmd_columns", g.dmd_columns);
    g.micromirror_pitch_um = s.get("micromirror_pitch_um", g.micromirror_pitch_um);
    g.incidence_angle_deg = s.get("incidence_angle_deg", g.incidence_angle_deg);
    g.stretch_factor = s.get("stretch_factor", g.stretch_factor);
    g.dispersion_nm_per_mrad = s.get("dispersion_nm_per_mrad", g.dispersion_nm_per_mrad);
    s.finish();
    return g;
}

Json write_grating(const GratingMap& g) {
    return Json{{"groove_frequency_per_mm", g.groove_frequency_per_mm},
                {"focal_length_mm", g.focal_length_mm},
                {"lambda_min_nm", g.lambda_min_nm},
                {"lambda_max_nm", g.lambda_max_nm},
                {"dmd_columns", g.dmd_columns},
                {"micromirror_pitch_um", g.micromirror_pitch_um},
                {"incidence_angle_deg", g.incidence_angle_deg},
                {"stretch_factor", g.stretch_factor},
                {"dispersion_nm_per_mrad", g.dispersion_nm_per_mrad}};
}

PixelLayout read_layout(const Section& s) {
    PixelLayout l;
    l.pixel_count = s.get("pixel_count", l.pixel_count);
    l.pixel_width = s.get("pixel_width", l.pixel_width);
    l.pixel_height = s.get("pixel_height", l.pixel_height);
    l.start_column = s.get("start_column", l.start_column);
    s.finish();
    return l;
}

Json write_layout(const PixelLayout& l) {
    return Json{{"pixel_count", l.pixel_count},
                {"pixel_width", l.pixel_width},
                {"pixel_height", l.pixel_height},
                {"start_column", l.start_column}};
}

ModeConfig read_mode(const Section& s, int pixel_count) {
    ModeConfig m;
    m.mode = mode_from_string(s.need<std::string>("type"));
    m.sample_rate_hz = s.need<double>("sample_rate_hz");
    if (m.is_cdma()) {
        m.code_length = s.need<int>("code_length");
        m.bit_rate_hz = s.need<double>("bit_rate_hz");
        m.slot_duration_s = 0.0;
        std::vector<int> rows(static_cast<std::size_t>(std::max(pixel_count, 0)));
        for (std::size_t i = 0; i < rows.size(); ++i)
            rows[i] = static_cast<int>(i) + 1;
        m.assigned_rows = s.get("assigned_rows", rows);
    } else {
        m.code_length = 0;
        m.bit_rate_hz = 0.0;
        m.slot_duration_s = s.need<double>("slot_duration_s");
    }
    if (m.mode == Mode::fm_cdma) {
        m.carrier_ratio = s.need<int>("carrier_ratio");
        m.carrier_hz = s.get("carrier_hz", m.bit_rate_hz * m.carrier_ratio);
    } else if (m.mode == Mode::fm_tdma) {
        m.carrier_hz = s.need<double>("carrier_hz");
    }
    m.recompute_samples_per_segment();
    m.samples_per_segment = s.get("samples_per_segment", m.samples_per_segment);
    s.finish();
    return m;
}

Json write_mode(const ModeConfig& m) {
    Json j{{"type", to_string(m.mode)}, {"sample_rate_hz", m.sample_rate_hz}};
    if (m.is_cdma()) {
        j["code_length"] = m.code_length;
        j["bit_rate_hz"] = m.bit_rate_hz;
    } else {
        j["slot_duration_s"] = m.slot_duration_s;
    }
    if (m.mode == Mode::fm_cdma)
        j["carrier_ratio"] = m.carrier_ratio;
    if (m.has_carrier())
        j["carrier_hz"] = m.carrier_hz;
    j["samples_per_segment"] = m.samples_per_segment;
    if (m.is_cdma())
        j["assigned_rows"] = m.assigned_rows;
    return j;
}

DetectorConfig read_detector(const Section& s) {
    DetectorConfig d;
    d.responsivity_a_per_w = s.get("responsivity_a_per_w", d.responsivity_a_per_w);
    d.transimpedance_v_per_a = s.get("transimpedance_v_per_a", d.transimpedance_v_per_a);
    d.noise_floor_v_per_rthz = s.get("noise_floor_v_per_rthz", d.noise_floor_v_per_rthz);
    d.dark_offset_v = s.get("dark_offset_v", d.dark_offset_v);
    d.shot_noise = s.get("shot_noise", d.shot_noise);
    d.shot_wavelength_nm = s.get("shot_wavelength_nm", d.shot_wavelength_nm);
    d.saturation_v = s.get("saturation_v", d.saturation_v);
    s.finish();
    return d;
}

Json write_detector(const DetectorConfig& d) {
    return Json{{"responsivity_a_per_w", d.responsivity_a_per_w},
                {"transimpedance_v_per_a", d.transimpedance_v_per_a},
                {"noise_floor_v_per_rthz", d.noise_floor_v_per_rthz},
                {"dark_offset_v", d.dark_offset_v},
                {"shot_noise", d.shot_noise},
                {"shot_wavelength_nm", d.shot_wavelength_nm},
                {"saturation_v", d.saturation_v}};
}

AdcConfig read_adc(const Section& s, double sample_rate) {
    AdcConfig a;
    a.sample_rate_hz = s.get("sample_rate_hz", sample_rate);
    a.bits = s.get("bits", a.bits);
    a.full_scale_v = s.get("full_scale_v", a.full_scale_v);
    a.quantize = s.get("quantize", a.quantize);
    s.finish();
    return a;
}

Json write_adc(const AdcConfig& a) {
    return Json{{"sample_rate_hz", a.sample_rate_hz},
                {"bits", a.bits},
                {"full_scale_v", a.full_scale_v},
                {"quantize", a.quantize}};
}

SweepSettings read_sweep(const Section& s) {
    SweepSettings w;
    const bool list = s.has("od_values");
    const bool grid = s.has("od_start") || s.has("od_stop") || s.has("od_step");
    require(!(list && grid), ErrorKind::config, "sweep takes either od_values or od_start/od_stop/od_step");
    if (list)
        w.od_values = s.need<std::vector<double>>("od_values");
    else if (grid)
        w.od_values = od_grid(s.get("od_start", 0.0), s.get("od_stop", 5.0), s.get("od_step", 0.1));
    w.trials = s.get("trials", w.trials);
    w.snr_threshold = s.get("snr_threshold", w.snr_threshold);
    s.finish();
    return w;
}

CalibrationSettings read_calibration(const Section& s) {
    CalibrationSettings c;
    c.target_dr_db = s.need<double>("target_dr_db");
    c.target_snr = s.get("target_snr", c.target_snr);
    c.trials = s.get("trials", c.trials);
    c.lower_v_per_rthz = s.get("lower_v_per_rthz", c.lower_v_per_rthz);
    c.upper_v_per_rthz = s.get("upper_v_per_rthz", c.upper_v_per_rthz);
    s.finish();
    return c;
}

} // namespace

void ExperimentConfig::validate() const {
    experiment.validate();
    require(!sweep.od_values.empty(), ErrorKind::config, "sweep needs at least one OD value");
    for (std::size_t i = 0; i < sweep.od_values.size(); ++i) {
        require(sweep.od_values[i] >= 0.0, ErrorKind::config, "sweep OD values must be >= 0");
        if (i > 0)
            require(sweep.od_values[i] > sweep.od_values[i - 1], ErrorKind::config,
                    "sweep OD values must be strictly increasing");
    }
    require(sweep.trials >= 1, ErrorKind::config, "sweep trials must be >= 1");
    require(sweep.snr_threshold > 0.0, ErrorKind::config, "SNR threshold must be positive");
    if (calibration) {
        require(calibration->target_dr_db >= 0.0, ErrorKind::config, "calibration target DR must be >= 0 dB");
        require(calibration->target_snr > 0.0, ErrorKind::config, "calibration target SNR must be positive");
        require(calibration->trials >= 1, ErrorKind::config, "calibration trials must be >= 1");
        require(calibration->lower_v_per_rthz > 0.0 && calibration->upper_v_per_rthz > calibration->lower_v_per_rthz,
                ErrorKind::config, "calibration bounds must satisfy 0 < lower < upper");
    }
    if (full_scale_sample_rate_hz)
        require(*full_scale_sample_rate_hz > 0.0, ErrorKind::config, "full-scale sample rate must be positive");
    require(!output.directory.empty() && !output.spectrum_file.empty(), ErrorKind::config,
            "output directory and spectrum file must be named");
}

ExperimentConfig config_from_json(std::string_view text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::config, fmt::format("config is not valid JSON: {}", e.what()));
    }
    const Section top(root, "config");
    ExperimentConfig c;
    Experiment& e = c.experiment;
    e.name = top.need<std::string>("name");
    c.description = top.get<std::string>("description", "");
    c.master_seed = top.get<std::uint64_t>("seed", c.master_seed);

    const Section scene = top.sub("scene");
    e.source = read_source(scene.sub("source"));
    if (scene.has("filters")) {
        const Json& filters = scene.raw("filters");
        require(filters.is_array(), ErrorKind::config, "scene.filters must be an array");
        for (std::size_t i = 0; i < filters.size(); ++i)
            e.filters.push_back(read_filter(Section(filters[i], fmt::format("scene.filters[{}]", i))));
    }
    scene.finish();

    const Section optics = top.sub("optics");
    e.grating = optics.has("grating") ? read_grating(optics.sub("grating")) : GratingMap{};
    e.layout = optics.has("layout") ? read_layout(optics.sub("layout")) : PixelLayout{};
    e.blur_fwhm_nm = optics.get("blur_fwhm_nm", 0.0);
    if (optics.has("telescope")) {
        const Section t = optics.sub("telescope");
        c.telescope.f1_mm = t.get("f1_mm", c.telescope.f1_mm);
        c.telescope.f2_mm = t.get("f2_mm", c.telescope.f2_mm);
        c.telescope.f4_mm = t.get("f4_mm", c.telescope.f4_mm);
        t.finish();
    }
    optics.finish();

    e.mode = read_mode(top.sub("mode"), e.layout.pixel_count);
    e.detector = top.has("detector") ? read_detector(top.sub("detector")) : DetectorConfig{};
    e.adc = top.has("adc") ? read_adc(top.sub("adc"), e.mode.sample_rate_hz) : AdcConfig{e.mode.sample_rate_hz};
    e.exposure_fraction = top.get("exposure_fraction", 0.0);
    if (top.has("sweep"))
        c.sweep = read_sweep(top.sub("sweep"));
    if (top.has("calibration"))
        c.calibration = read_calibration(top.sub("calibration"));
    if (top.has("full_scale")) {
        const Section f = top.sub("full_scale");
        c.full_scale_sample_rate_hz = f.need<double>("sample_rate_hz");
        f.finish();
    }
    if (top.has("output")) {
        const Section o = top.sub("output");
        c.output.directory = o.get("directory", c.output.directory);
        c.output.spectrum_file = o.get("spectrum_file", c.output.spectrum_file);
        c.output.normalize = o.get("normalize", c.output.normalize);
        o.finish();
    }
    top.finish();
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    const Experiment& e = c.experiment;
    Json filters = Json::array();
    for (const auto& f : e.filters)
        filters.push_back(write_filter(f));
    Json root{{"name", e.name}, {"description", c.description}, {"seed", c.master_seed}};
    root["scene"] = Json{{"source", write_source(e.source)}, {"filters", filters}};
    root["optics"] = Json{{"grating", write_grating(e.grating)},
                          {"layout", write_layout(e.layout)},
                          {"blur_fwhm_nm", e.blur_fwhm_nm},
                          {"telescope",
                           {{"f1_mm", c.telescope.f1_mm}, {"f2_mm", c.telescope.f2_mm}, {"f4_mm", c.telescope.f4_mm}}}};
    root["mode"] = write_mode(e.mode);
    root["detector"] = write_detector(e.detector);
    root["adc"] = write_adc(e.adc);
    root["exposure_fraction"] = e.exposure_fraction;
    root["sweep"] = Json{{"od_values", c.sweep.od_values},
                         {"trials", c.sweep.trials},
                         {"snr_threshold", c.sweep.snr_threshold}};
    if (c.calibration)
        root["calibration"] = Json{{"target_dr_db", c.calibration->target_dr_db},
                                   {"target_snr", c.calibration->target_snr},
                                   {"trials", c.calibration->trials},
                                   {"lower_v_per_rthz", c.calibration->lower_v_per_rthz},
                                   {"upper_v_per_rthz", c.calibration->upper_v_per_rthz}};
    if (c.full_scale_sample_rate_hz)
        root["full_scale"] = Json{{"sample_rate_hz", *c.full_scale_sample_rate_hz}};
    root["output"] = Json{{"directory", c.output.directory},
                          {"spectrum_file", c.output.spectrum_file},
                          {"normalize", c.output.normalize}};
    return root.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        fail(ErrorKind::config, e.what());
    }
    return config_from_json(text);
}

ExperimentConfig to_full_scale(const ExperimentConfig& config) {
    require(config.full_scale_sample_rate_hz.has_value(), ErrorKind::config,
            fmt::format("config '{}' has no full_scale section", config.experiment.name));
    ExperimentConfig c = config;
    c.experiment.mode.sample_rate_hz = *config.full_scale_sample_rate_hz;
    c.experiment.mode.recompute_samples_per_segment();
    c.experiment.adc.sample_rate_hz = *config.full_scale_sample_rate_hz;
    c.validate();
    return c;
}

} // namespace caos
