#pragma once

#include <stdexcept>
#include <string>

namespace dtof {

/// Raised when input data violates a contract (bad shapes, unusable frames,
/// malformed files). The CLI maps it to exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for configuration problems: unknown keys, out-of-range values.
class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

/// Codec failures, tagged with what went wrong so callers can tell a broken
/// header from a short file.
class IoError : public DataError {
 public:
  enum class Kind {
    kOpenFailed,
    kMalformedHeader,
    kTruncatedPayload,
    kUnsupportedChannels,
    kUnsupportedFormat,
    kBadRecord,
    kWriteFailed,
  };

  IoError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace dtof
