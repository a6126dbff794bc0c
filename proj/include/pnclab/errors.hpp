#pragma once

#include <stdexcept>
#include <string>

namespace pnclab {

// Bad dimensions, bad enum values, malformed experiment configs.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// API called out of order (backward before forward, eval before calibration).
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller handed data that violates a precondition (non-binary bits, NaNs).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// |H|^2 below the inversion floor where CSI features need 1/H.
class DegenerateChannelError : public std::runtime_error {
public:
    explicit DegenerateChannelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem trouble: cannot create, open or write an artifact.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A persisted artifact (weight file, manifest) failed to parse.
// Carries the file and line so the CLI can name the offending spot.
class ArtifactError : public std::runtime_error {
public:
    ArtifactError(const std::string& file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          file_(file),
          line_(line) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

}  // namespace pnclab
