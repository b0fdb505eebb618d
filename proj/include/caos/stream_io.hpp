#pragma once

#include "caos/codebook.hpp"
#include "caos/plan.hpp"
#include "caos/sample_stream.hpp"
#include "caos/scene.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace caos {

// Writes to <path>.tmp and renames over path, so readers never observe a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Shortest round-trippable decimal form ('.' separator).
std::string format_number(double value);

std::string scene_to_csv(const SpectralScene& scene);
SpectralScene scene_from_csv(std::string_view text);

std::string codebook_to_csv(const Codebook& codebook);

// "time_s,value" with one row per sample.
std::string stream_to_csv(const SampleStream& stream);
SampleStream stream_from_csv(std::string_view text);

// Raw little-endian record: float64 sample rate, uint64 length, then
// `length` float64 samples.
std::string stream_to_raw(const SampleStream& stream);
SampleStream stream_from_raw(std::string_view bytes);

// DMD frame schedule: one row per mirror frame, one 0/1 column per pixel.
// Carrier modes run two frames per carrier period.
struct FrameSchedule {
    double frame_rate_hz = 0.0;
    long frames_per_segment = 0;
    long frame_count = 0;
    std::string csv;
    std::string timing_json;
};

FrameSchedule export_schedule(const ModulationPlan& plan);

} // namespace caos
