#pragma once

#include <stdexcept>
#include <string>

namespace betagas {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BETAGAS_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

/// Point or grid outside the domain of a potential.
BETAGAS_DEFINE_ERROR(DomainError);
/// Derivative requested at a piece boundary.
BETAGAS_DEFINE_ERROR(BoundaryError);
/// Malformed CriticalPotentialSpec.
BETAGAS_DEFINE_ERROR(InvalidSpecError);
/// Gluing could not be performed (matching value not positive).
BETAGAS_DEFINE_ERROR(ConstructionError);
/// Empty support at the requested threshold.
BETAGAS_DEFINE_ERROR(ThresholdError);
/// Density not positive on a claimed support interval.
BETAGAS_DEFINE_ERROR(InconsistencyError);
/// Invalid user configuration (chain, experiment, CLI).
BETAGAS_DEFINE_ERROR(ConfigError);
/// Correlator evaluated too close to the particles.
BETAGAS_DEFINE_ERROR(MarginError);
/// Escape frequency at 0 or 1; exponent fit undefined.
BETAGAS_DEFINE_ERROR(SaturationError);
/// Too few effective samples for a variance estimate.
BETAGAS_DEFINE_ERROR(UndersampleError);
/// Experiment launched on a potential that was not certified critical.
BETAGAS_DEFINE_ERROR(PreconditionError);

#undef BETAGAS_DEFINE_ERROR

/// Solver gave up; carries the residuals it reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double on_support, double off_support)
      : Error(what), on_support_(on_support), off_support_(off_support) {}
  double on_support() const noexcept { return on_support_; }
  double off_support() const noexcept { return off_support_; }

 private:
  double on_support_;
  double off_support_;
};

}  // namespace betagas
