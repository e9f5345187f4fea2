#pragma once

#include <stdexcept>
#include <string>

namespace elastoslab {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The deformation gradient lost invertibility (det F below the floor).
struct SingularMap : Error {
  using Error::Error;
};

/// Mollifier width too small for the horizontal grid to resolve.
struct KernelUnresolved : Error {
  using Error::Error;
};

/// Coefficient matrix of the pressure problem failed the SPD floor.
struct NotSPD : Error {
  using Error::Error;
};

/// Iterative solver exhausted its iteration budget.
struct NoConvergence : Error {
  using Error::Error;
};

/// An initial-data recipe produced constraint residuals above tolerance.
struct InvalidRecipe : Error {
  using Error::Error;
};

/// Requested per-face stability condition is not met by the data.
struct StabilityViolation : Error {
  using Error::Error;
};

/// All three 2x2 minors fell below the selection floor at some node.
struct DegenerateMinor : Error {
  using Error::Error;
};

/// Runtime monitor left the working regime (|J-1|, |A-I|, RT margin).
struct AprioriViolation : Error {
  double jk_dev = 0.0;
  double ak_dev = 0.0;
  double rt_margin = 0.0;
  AprioriViolation(const std::string& msg, double jk, double ak, double rt)
      : Error(msg), jk_dev(jk), ak_dev(ak), rt_margin(rt) {}
};

/// A time step was rejected (stage raised AprioriViolation or CFL breach).
struct StepRejected : Error {
  using Error::Error;
};

/// Configuration text could not be parsed.
struct ParseError : Error {
  int line = 0;
  ParseError(const std::string& msg, int line_no) : Error(msg), line(line_no) {}
};

/// A parsed configuration value is out of range.
struct ValidationError : Error {
  std::string field;
  ValidationError(const std::string& field_name, const std::string& msg)
      : Error(field_name + ": " + msg), field(field_name) {}
};

/// sweep-report was pointed at an incomplete run set.
struct MissingRun : Error {
  using Error::Error;
};

}  // namespace elastoslab
