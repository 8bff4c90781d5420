#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loopkit {

enum class ErrorCode {
  NonTransient,
  NegativeRate,
  ZeroMeasureWeight,
  OutOfDomain,
  QuadratureFailure,
  MatrixExponentialFailure,
  InfiniteMoment,
  TooManyPermutations,
  SeriesTruncationFailure,
  NonFiniteDiagonal,
  InfiniteLifetime,
  InsufficientEffectiveSampleSize,
  InvalidArgument,
  MalformedInput,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported as a loopkit::Error carrying a code so
// callers (the CLI in particular) can map it onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace loopkit
