#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shmssl {

enum class ErrorKind {
    Dimension,
    Numeric,
    Usage,
    Config,
    Format,
    Io,
    MissingData,
    Input,
    Divergence,
};

const char* to_string(ErrorKind kind);

/// Base for every error raised by the library. The kind is stable and is what
/// the CLI prints in its machine-parsable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& m) : Error(ErrorKind::Dimension, m) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& m) : Error(ErrorKind::Numeric, m) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& m) : Error(ErrorKind::Usage, m) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

class MissingDataError : public Error {
public:
    explicit MissingDataError(const std::string& m) : Error(ErrorKind::MissingData, m) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& m) : Error(ErrorKind::Input, m) {}
};

/// Raised for corrupt or truncated binary files; carries the byte offset at
/// which decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& m, std::uint64_t offset)
        : Error(ErrorKind::Format, m + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& m, int epoch, int batch)
        : Error(ErrorKind::Divergence,
                m + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
          epoch_(epoch), batch_(batch) {}

    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

private:
    int epoch_;
    int batch_;
};

}  // namespace shmssl
