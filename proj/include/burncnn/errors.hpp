#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace burncnn {

/// Caller broke a precondition: bad shape, out-of-range label, invalid rate.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed checkpoint bytes. `offset()` is where decoding stopped.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class UnsupportedVersion : public FormatError {
public:
    UnsupportedVersion(std::uint32_t version, std::uint32_t supported, std::uint64_t offset)
        : FormatError("unsupported checkpoint version " + std::to_string(version) +
                          " (this build reads up to " + std::to_string(supported) + ")",
                      offset),
          version_(version) {}

    std::uint32_t version() const noexcept { return version_; }

private:
    std::uint32_t version_;
};

/// A checkpoint whose structure does not match what transfer surgery expects.
class IncompatibleCheckpoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Manifest / config / table parse failure. `line()` is 1-based, 0 if unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InfeasibleSplit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    DecodeError(const std::string& path, const std::string& what)
        : std::runtime_error("cannot decode image '" + path + "': " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Filesystem read/write failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t step, double loss)
        : std::runtime_error("non-finite loss " + std::to_string(loss) + " at epoch " +
                             std::to_string(epoch) + ", step " + std::to_string(step)),
          epoch_(epoch), step_(step) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t epoch_;
    std::size_t step_;
};

}  // namespace burncnn
