#include "caos/stream_io.hpp"

#include "caos/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace caos {

static_assert(std::endian::native == std::endian::little, "raw stream format assumes a little-endian host");

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::io, fmt::format("cannot open {} for writing", tmp.string()));
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        require(static_cast<bool>(out), ErrorKind::io, fmt::format("write to {} failed", tmp.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::io, fmt::format("cannot move result into {}", path.string()));
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_number(double value) {
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    if (std::isnan(value))
        return "nan";
    return fmt::format("{}", value);
}

namespace {

double parse_double(std::string_view field) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t'))
        field.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    require(ec == std::errc() && ptr == field.data() + field.size(), ErrorKind::io,
            fmt::format("malformed number '{}'", field));
    return v;
}

// Two-column numeric CSV with a one-line header.
std::pair<std::vector<double>, std::vector<double>> read_two_columns(std::string_view text) {
    std::vector<double> a, b;
    bool header = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty() || line == "\r")
            continue;
        if (header) {
            header = false;
            continue;
        }
        const auto comma = line.find(',');
        require(comma != std::string_view::npos, ErrorKind::io, "expected two comma-separated columns");
        a.push_back(parse_double(line.substr(0, comma)));
        b.push_back(parse_double(line.substr(comma + 1)));
    }
    return {std::move(a), std::move(b)};
}

} // namespace

std::string scene_to_csv(const SpectralScene& scene) {
    std::string out = "wavelength_nm,density_w_per_nm\n";
    for (std::size_t i = 0; i < scene.size(); ++i)
        out += fmt::format("{},{}\n", format_number(scene.wavelengths()[i]), format_number(scene.density()[i]));
    return out;
}

SpectralScene scene_from_csv(std::string_view text) {
    auto [wl, d] = read_two_columns(text);
    return {std::move(wl), std::move(d)};
}

std::string codebook_to_csv(const Codebook& book) {
    std::string out;
    for (int c = 0; c < book.order(); ++c)
        out += fmt::format("{}c{}", c ? "," : "", c);
    out += '\n';
    for (int r = 0; r < book.order(); ++r) {
        for (int c = 0; c < book.order(); ++c)
            out += fmt::format("{}{}", c ? "," : "", book.at(r, c));
        out += '\n';
    }
    return out;
}

std::string stream_to_csv(const SampleStream& stream) {
    std::string out = "time_s,value\n";
    out.reserve(stream.samples.size() * 24);
    for (std::size_t i = 0; i < stream.samples.size(); ++i)
        out += fmt::format("{},{}\n", format_number(static_cast<double>(i) / stream.sample_rate_hz),
                           format_number(stream.samples[i]));
    return out;
}

SampleStream stream_from_csv(std::string_view text) {
    auto [t, v] = read_two_columns(text);
    require(v.size() >= 2, ErrorKind::io, "sample CSV needs at least two rows to infer the sample rate");
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    require(dt > 0.0, ErrorKind::io, "sample times must increase");
    // Times are written as i/f_s; recover f_s to the precision they carry.
    const double rate = 1.0 / dt;
    return {std::round(rate * 1e6) / 1e6, std::move(v)};
}

std::string stream_to_raw(const SampleStream& stream) {
    std::string out(16 + 8 * stream.samples.size(), '\0');
    const std::uint64_t n = stream.samples.size();
    std::memcpy(out.data(), &stream.sample_rate_hz, 8);
    std::memcpy(out.data() + 8, &n, 8);
    if (n)
        std::memcpy(out.data() + 16, stream.samples.data(), 8 * n);
    return out;
}

SampleStream stream_from_raw(std::string_view bytes) {
    require(bytes.size() >= 16, ErrorKind::io, "raw stream shorter than its header");
    SampleStream s;
    std::uint64_t n = 0;
    std::memcpy(&s.sample_rate_hz, bytes.data(), 8);
    std::memcpy(&n, bytes.data() + 8, 8);
    require(bytes.size() == 16 + 8 * n, ErrorKind::io,
            fmt::format("raw stream header announces {} samples but carries {} bytes", n, bytes.size() - 16));
    s.samples.resize(n);
    if (n)
        std::memcpy(s.samples.data(), bytes.data() + 16, 8 * n);
    return s;
}

FrameSchedule export_schedule(const ModulationPlan& plan) {
    const auto& timing = plan.timing();
    FrameSchedule sched;
    const double seg = timing.segment_duration_s();
    if (timing.carrier_hz() > 0.0) {
        sched.frame_rate_hz = 2.0 * timing.carrier_hz();
        const double per = sched.frame_rate_hz * seg;
        require(std::abs(per - std::nearbyint(per)) < 1e-6, ErrorKind::config,
                fmt::format("segment holds {} carrier half-periods; frame export needs a whole number", per));
        sched.frames_per_segment = std::lrint(per);
    } else {
        sched.frame_rate_hz = 1.0 / seg;
        sched.frames_per_segment = 1;
    }
    sched.frame_count = sched.frames_per_segment * timing.segments();

    std::string& csv = sched.csv;
    for (int i = 0; i < plan.pixel_count(); ++i)
        csv += fmt::format("{}p{}", i ? "," : "", i);
    csv += '\n';
    std::string row;
    for (int k = 0; k < timing.segments(); ++k) {
        for (long f = 0; f < sched.frames_per_segment; ++f) {
            const bool carrier_high = timing.carrier_hz() <= 0.0 || f % 2 == 0;
            row.clear();
            for (int i = 0; i < plan.pixel_count(); ++i) {
                if (i)
                    row += ',';
                row += (carrier_high && plan.pattern(k, i)) ? '1' : '0';
            }
            csv += row;
            csv += '\n';
        }
    }

    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(plan.mode()));
    j["pixels"] = plan.pixel_count();
    j["segments"] = timing.segments();
    j["segment_duration_s"] = seg;
    j["carrier_hz"] = timing.carrier_hz();
    j["frame_rate_hz"] = sched.frame_rate_hz;
    j["frames_per_segment"] = sched.frames_per_segment;
    j["frame_count"] = sched.frame_count;
    j["duration_s"] = plan.duration_s();
    j["adc_sample_rate_hz"] = timing.sample_rate_hz();
    sched.timing_json = j.dump(2) + "\n";
    return sched;
}

} // namespace caos
