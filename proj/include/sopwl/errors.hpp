#pragma once

#include <stdexcept>
#include <string>

namespace sopwl {

/// Structural problems while building a model: duplicate names, dangling
/// variable references, invalid bounds, mutation after freeze.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A name or value cannot be rendered in LP text.
class SerializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed solution text (status token, numeric value, unknown variable).
class SolutionParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parsed value lies outside its variable's bounds by more than tolerance.
class BoundViolation : public SolutionParseError {
 public:
  using SolutionParseError::SolutionParseError;
};

/// Launch failure, timeout, or missing output from an external solver.
class AdapterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Case document problems: syntax, missing fields, non-radial topology.
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Radial sweep did not converge.
class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sopwl
