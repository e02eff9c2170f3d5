#pragma once

#include <stdexcept>
#include <string>

namespace radrobust {

/// Root of every error raised by the library. `kind()` is a short stable tag
/// used in logs and in the report's failure column.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

/// Malformed input files or invalid in-memory objects. CLI exit code 3.
class DataError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration values. CLI exit code 2.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Numerical or statistical precondition that the data cannot satisfy
/// (single-class folds, empty pools, singular covariance...).
class ComputeError : public Error {
public:
  using Error::Error;
};

inline DataError format_error(const std::string& what) { return {"format", what}; }
inline DataError truncation_error(const std::string& what) { return {"truncation", what}; }
inline DataError geometry_error(const std::string& what) { return {"geometry", what}; }
inline DataError duplicate_key_error(const std::string& what) { return {"duplicate-key", what}; }
inline DataError range_error(const std::string& what) { return {"range", what}; }
inline DataError schema_error(const std::string& what) { return {"schema", what}; }
inline DataError alignment_error(const std::string& what) { return {"alignment", what}; }

}  // namespace radrobust
