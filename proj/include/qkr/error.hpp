#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace qkr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input. `field()` names the offending parameter or config key.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Population reached the edge of the momentum window; continuing would alias.
class BoundaryOverflow : public Error {
 public:
  BoundaryOverflow(std::optional<long> kick, double edge_population, double threshold);

  std::optional<long> kick() const noexcept { return kick_; }
  double edge_population() const noexcept { return edge_population_; }

 private:
  std::optional<long> kick_;
  double edge_population_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qkr
