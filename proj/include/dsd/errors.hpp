#pragma once

#include <stdexcept>
#include <string>

// Exception hierarchy for the dsd library. Every throwing operation documents
// which of these it can raise. `Error` splits into two branches: input or
// contract violations (caught early, deterministic) and numerical failures
// (conditioning or iteration breakdown discovered mid-computation).

namespace dsd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition or validation check failed on otherwise well-formed input.
struct ValidationError : Error {
  using Error::Error;
};

// A computation broke down numerically and no valid result exists.
struct NumericError : Error {
  using Error::Error;
};

struct EmptyDomain : ValidationError {
  using ValidationError::ValidationError;
};
struct NotHermitian : ValidationError {
  using ValidationError::ValidationError;
};
struct NotContracting : ValidationError {
  using ValidationError::ValidationError;
};
struct NotProjection : ValidationError {
  using ValidationError::ValidationError;
};
struct NotFixedSize : ValidationError {
  using ValidationError::ValidationError;
};
struct OutOfRange : ValidationError {
  using ValidationError::ValidationError;
};
struct NotCoprime : ValidationError {
  using ValidationError::ValidationError;
};
struct SumNotInteger : ValidationError {
  using ValidationError::ValidationError;
};
struct SumExceedsOne : ValidationError {
  using ValidationError::ValidationError;
};
struct ZeroInclusion : ValidationError {
  using ValidationError::ValidationError;
};
struct ZeroJointInclusion : ValidationError {
  using ValidationError::ValidationError;
};
struct TooLarge : ValidationError {
  using ValidationError::ValidationError;
};
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

struct ConstructionFailed : NumericError {
  using NumericError::NumericError;
};
struct NumericalBreakdown : NumericError {
  using NumericError::NumericError;
};
struct NegativeProbability : NumericError {
  using NumericError::NumericError;
};
struct NoRealRoot : NumericError {
  using NumericError::NumericError;
};

}  // namespace dsd
