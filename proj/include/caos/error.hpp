#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace caos {

// Failure categories surfaced to callers and, through the CLI, as the
// machine-parsable prefix of the single error line.
enum class ErrorKind {
    domain,
    range,
    shape,
    capacity,
    config,
    framing,
    calibration,
    measurement,
    io,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::range: return "range";
    case ErrorKind::shape: return "shape";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::config: return "config";
    case ErrorKind::framing: return "framing";
    case ErrorKind::calibration: return "calibration";
    case ErrorKind::measurement: return "measurement";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok)
        fail(kind, what);
}

} // namespace caos
