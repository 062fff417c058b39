// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace invlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Mismatched grid shapes.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Step index outside the schedule's valid range.
class StepError : public Error {
 public:
  explicit StepError(const std::string& what) : Error(what) {}
};

/// Degenerate metric input (empty selection, zero dynamic range, ...).
class MetricError : public Error {
 public:
  explicit MetricError(const std::string& what) : Error(what) {}
};

/// File read/write failure; the message includes the path.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace invlab
