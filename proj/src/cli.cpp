#include "caos/cli.hpp"

#include "caos/config.hpp"
#include "caos/error.hpp"
#include "caos/seed.hpp"
#include "caos/stream_io.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

namespace caos {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Seed streams for the single acquisitions of `simulate` and `response`.
constexpr std::uint64_t acquisition_stream = 0x51;
constexpr std::uint64_t response_stream = 0x2e;

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    bool full_scale = false;
};

// Thrown for failures that happen before any work starts (exit code 2).
struct ConfigFailure {
    Error error;
};

ExperimentConfig load(const RunOptions& o) {
    try {
        ExperimentConfig c = load_config(o.config_path);
        if (o.full_scale)
            c = to_full_scale(c);
        if (o.seed)
            c.master_seed = *o.seed;
        if (o.trials) {
            c.sweep.trials = *o.trials;
            if (c.calibration)
                c.calibration->trials = *o.trials;
        }
        if (!o.out_dir.empty())
            c.output.directory = o.out_dir;
        c.validate();
        return c;
    } catch (const Error& e) {
        throw ConfigFailure{e};
    }
}

Json number(double v) {
    if (std::isfinite(v))
        return v;
    return nullptr;
}

void write_csv(const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    require(!ec, ErrorKind::io, fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
    write_file_atomic(path, text);
}

Json base_summary(const ExperimentConfig& c, std::string_view command) {
    const Experiment& e = c.experiment;
    Json s{{"command", command},
           {"name", e.name},
           {"mode", to_string(e.mode.mode)},
           {"pixels", e.layout.pixel_count},
           {"sample_rate_hz", e.mode.sample_rate_hz},
           {"samples_per_segment", e.mode.samples_per_segment},
           {"encoding_time_s", encoding_time(e.mode, e.layout.pixel_count)},
           {"seed", c.master_seed}};
    return s;
}

std::optional<double> try_fwhm(const RecoveredSpectrum& spectrum) {
    try {
        return measure_fwhm(spectrum);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::measurement)
            return std::nullopt;
        throw;
    }
}

void write_summary(const fs::path& dir, const Json& summary) { write_csv(dir / "summary.json", summary.dump(2) + "\n"); }

int cmd_codebook(int order, const std::string& out_path, std::ostream& out) {
    const Codebook h = sylvester_codebook(order);
    bool orthogonal = true;
    for (int a = 0; a < order && orthogonal; ++a) {
        for (int b = 0; b < order; ++b) {
            long dot = 0;
            for (int k = 0; k < order; ++k)
                dot += h.at(a, k) * h.at(b, k);
            if (dot != (a == b ? order : 0)) {
                orthogonal = false;
                break;
            }
        }
    }
    write_csv(fs::absolute(out_path), codebook_to_csv(h));
    out << fmt::format("codebook W={} written to {}\n", order, out_path);
    out << fmt::format("orthogonality check (H H^T = {} I): {}\n", order, orthogonal ? "ok" : "FAILED");
    return orthogonal ? exit_ok : exit_runtime;
}

std::string spectrum_csv(const std::vector<double>& truth, const RecoveredSpectrum& rec,
                         const RecoveredSpectrum* normalized) {
    std::string csv = normalized ? "pixel,center_nm,truth_w,recovered_w,snr,normalized,valid\n"
                                 : "pixel,center_nm,truth_w,recovered_w,snr\n";
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& b = rec.bins[i];
        csv += fmt::format("{},{},{},{},{}", i, format_number(b.center_nm), format_number(truth[i]),
                           format_number(b.power), format_number(b.snr));
        if (normalized)
            csv += fmt::format(",{},{}", format_number(normalized->bins[i].power), normalized->bins[i].valid ? 1 : 0);
        csv += "\n";
    }
    return csv;
}

int cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
    const Pipeline pipeline(c.experiment);
    const auto truth = pipeline.truth();
    const auto rec = pipeline.acquire(truth, derive_seed(c.master_seed, acquisition_stream, 0));
    std::optional<RecoveredSpectrum> normalized;
    if (c.output.normalize) {
        const auto response =
            measure_system_response(c.experiment, derive_seed(c.master_seed, response_stream, 0));
        normalized = normalize(rec, response);
    }
    const fs::path dir = c.output.directory;
    write_csv(dir / c.output.spectrum_file, spectrum_csv(truth, rec, normalized ? &*normalized : nullptr));

    Json s = base_summary(c, "simulate");
    const auto fwhm = try_fwhm(normalized ? *normalized : rec);
    s["fwhm_nm"] = fwhm ? Json(*fwhm) : Json(nullptr);
    std::size_t peak = 0;
    const auto& shown = normalized ? *normalized : rec;
    for (std::size_t i = 1; i < shown.size(); ++i)
        if (shown.bins[i].valid && shown.bins[i].power > shown.bins[peak].power)
            peak = i;
    s["peak_pixel"] = peak;
    s["peak_center_nm"] = shown.bins[peak].center_nm;
    s["spectrum_file"] = c.output.spectrum_file;
    write_summary(dir, s);
    out << fmt::format("{}: {} pixels via {}, T_E = {} s, peak at {:.1f} nm\n", c.experiment.name, rec.size(),
                       to_string(c.experiment.mode.mode), format_number(encoding_time(c.experiment.mode,
                                                                                       c.experiment.layout.pixel_count)),
                       shown.bins[peak].center_nm);
    return exit_ok;
}

int cmd_response(const ExperimentConfig& c, std::ostream& out) {
    const auto response = measure_system_response(c.experiment, derive_seed(c.master_seed, response_stream, 0));
    std::string csv = "pixel,center_nm,amplitude_w\n";
    for (std::size_t i = 0; i < response.amplitudes.size(); ++i)
        csv += fmt::format("{},{},{}\n", i, format_number(response.centers_nm[i]),
                           format_number(response.amplitudes[i]));
    const fs::path dir = c.output.directory;
    write_csv(dir / "fig2_response.csv", csv);
    Json s = base_summary(c, "response");
    s["guard_w"] = response.guard;
    write_summary(dir, s);
    out << fmt::format("{}: system response over {} pixels written\n", c.experiment.name, response.amplitudes.size());
    return exit_ok;
}

int cmd_sweep(const ExperimentConfig& c, std::ostream& out) {
    SweepOptions opts;
    opts.od_values = c.sweep.od_values;
    opts.trials = c.sweep.trials;
    opts.snr_threshold = c.sweep.snr_threshold;
    opts.master_seed = c.master_seed;
    const auto r = dr_sweep(c.experiment, opts);

    std::string csv = "od,attenuation,truth_peak_w,recovered_peak_w,recovered_std_w,snr,snr_std,peak_pixel,passed\n";
    for (const auto& p : r.points)
        csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_number(p.od), format_number(std::pow(10.0, -p.od)),
                           format_number(p.truth_peak_w), format_number(p.recovered_peak_w),
                           format_number(p.recovered_std_w), format_number(p.snr), format_number(p.snr_std),
                           p.peak_pixel, p.passed ? 1 : 0);
    const fs::path dir = c.output.directory;
    write_csv(dir / "fig5_linearity.csv", csv);

    Json s = base_summary(c, "sweep-dr");
    s["trials"] = c.sweep.trials;
    s["snr_threshold"] = c.sweep.snr_threshold;
    s["target_pixel"] = r.target_pixel;
    s["max_od_passed"] = r.max_od_passed ? Json(*r.max_od_passed) : Json(nullptr);
    s["dr_db"] = r.dr_db;
    s["slope"] = number(r.slope);
    s["correlation"] = number(r.correlation);
    s["fitted_points"] = r.fitted_points;
    if (r.max_od_passed) {
        for (const auto& p : r.points)
            if (p.od == *r.max_od_passed) {
                s["min_detected_power_w"] = p.truth_peak_w;
                s["snr_at_max_od"] = p.snr;
            }
    }
    write_summary(dir, s);
    out << fmt::format("{}: {} DR = {} dB, slope = {}\n", c.experiment.name, to_string(c.experiment.mode.mode),
                       format_number(r.dr_db), format_number(r.slope));
    return exit_ok;
}

int cmd_calibrate(const ExperimentConfig& c, std::ostream& out) {
    if (!c.calibration)
        throw ConfigFailure{Error(ErrorKind::config, fmt::format("config '{}' has no calibration section",
                                                                 c.experiment.name))};
    const auto& cal = *c.calibration;
    const Pipeline pipeline(c.experiment);
    double peak = 0.0;
    for (double p : pipeline.truth())
        peak = std::max(peak, p);
    const double target_power = peak * std::pow(10.0, -cal.target_dr_db / 20.0);

    CalibrationOptions opts;
    opts.trials = cal.trials;
    opts.lower_v_per_rthz = cal.lower_v_per_rthz;
    opts.upper_v_per_rthz = cal.upper_v_per_rthz;
    opts.master_seed = c.master_seed;
    const double floor = calibrate_noise_floor(c.experiment.detector, c.experiment.adc, target_power, cal.target_snr,
                                               c.experiment.mode, opts);

    Json s = base_summary(c, "calibrate-noise");
    s["target_dr_db"] = cal.target_dr_db;
    s["target_power_w"] = target_power;
    s["target_snr"] = cal.target_snr;
    s["noise_floor_v_per_rthz"] = floor;
    write_summary(c.output.directory, s);
    out << fmt::format("{}: noise floor {} V/rtHz puts {} W at SNR {}\n", c.experiment.name, format_number(floor),
                       format_number(target_power), format_number(cal.target_snr));
    return exit_ok;
}

void add_run_flags(CLI::App* sub, RunOptions& o, bool with_trials) {
    sub->add_option("--config", o.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", o.out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", o.seed, "master seed (overrides the config)");
    sub->add_flag("--full-scale", o.full_scale, "use the full-scale sample rate from the config");
    if (with_trials)
        sub->add_option("--trials", o.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coded-access spectrometer simulator", "caos"};
    app.require_subcommand(1);

    int order = 0;
    std::string codebook_out;
    auto* codebook = app.add_subcommand("codebook", "write a Sylvester Walsh codebook as CSV");
    codebook->add_option("--order", order, "codebook order W (power of two)")->required();
    codebook->add_option("--out", codebook_out, "output CSV path")->required();

    RunOptions o;
    auto* simulate = app.add_subcommand("simulate", "run one acquisition and write the recovered spectrum");
    add_run_flags(simulate, o, false);
    auto* sweep = app.add_subcommand("sweep-dr", "dynamic-range sweep over ND filter values");
    add_run_flags(sweep, o, true);
    auto* calibrate = app.add_subcommand("calibrate-noise", "fit the detector noise floor to a DR target");
    add_run_flags(calibrate, o, true);
    auto* response = app.add_subcommand("response", "measure the system response without a test sample");
    add_run_flags(response, o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << "\n";
        return exit_config;
    }

    try {
        if (*codebook) {
            try {
                return cmd_codebook(order, codebook_out, out);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::domain)
                    throw ConfigFailure{e};
                throw;
            }
        }
        const ExperimentConfig c = load(o);
        if (*simulate)
            return cmd_simulate(c, out);
        if (*sweep)
            return cmd_sweep(c, out);
        if (*calibrate)
            return cmd_calibrate(c, out);
        return cmd_response(c, out);
    } catch (const ConfigFailure& f) {
        err << "error: " << to_string(f.error.kind()) << ": " << f.error.what() << "\n";
        return exit_config;
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_runtime;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << "\n";
        return exit_runtime;
    }
}

} // namespace caos
