#pragma once

#include <stdexcept>
#include <string>

namespace intformer {

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage found a hole in its input (e.g. a timestep with a
// missing leg snapshot).
struct GapError : std::runtime_error {
  explicit GapError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateLabelsError : std::runtime_error {
  explicit DegenerateLabelsError(const std::string& what) : std::runtime_error(what) {}
};

struct ResamplingError : std::runtime_error {
  explicit ResamplingError(const std::string& what) : std::runtime_error(what) {}
};

struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// A ratio metric was requested with a zero denominator; callers must not
// silently coerce this to 0.
struct UndefinedMetricError : std::runtime_error {
  explicit UndefinedMetricError(const std::string& what) : std::runtime_error(what) {}
};

// An explanation was requested at a size the exact enumerator cannot handle.
struct SizeError : std::runtime_error {
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

// A subcommand was invoked before the subcommand that produces its input.
struct DependencyError : std::runtime_error {
  explicit DependencyError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace intformer
