#pragma once

#include <stdexcept>
#include <string>

namespace tdcr {

/// Caller-supplied data violates a precondition (empty cloud, size
/// mismatch, out-of-range configuration, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem size exceeds a configured solver limit.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric input too degenerate to solve (collinear correspondences, ...).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A filter removed every point.
class EmptyResult : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File I/O or parse failure; carries the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Weight-file failure, distinguished by kind.
class WeightsError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, BadShape, Truncated, BadChecksum };

  WeightsError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace tdcr
