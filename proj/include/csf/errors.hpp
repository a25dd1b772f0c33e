#pragma once

#include <stdexcept>
#include <string>

namespace csf {

/// Argument outside the domain where a formula is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Newton iteration of an implicit step stopped making progress.
class NewtonDiverged : public std::runtime_error {
 public:
  NewtonDiverged(double t, const std::string& what)
      : std::runtime_error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class NotMonotone : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace csf
