#include "loopkit/errors.hpp"

namespace loopkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonTransient: return "NonTransient";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::ZeroMeasureWeight: return "ZeroMeasureWeight";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::MatrixExponentialFailure: return "MatrixExponentialFailure";
    case ErrorCode::InfiniteMoment: return "InfiniteMoment";
    case ErrorCode::TooManyPermutations: return "TooManyPermutations";
    case ErrorCode::SeriesTruncationFailure: return "SeriesTruncationFailure";
    case ErrorCode::NonFiniteDiagonal: return "NonFiniteDiagonal";
    case ErrorCode::InfiniteLifetime: return "InfiniteLifetime";
    case ErrorCode::InsufficientEffectiveSampleSize: return "InsufficientEffectiveSampleSize";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedInput: return "MalformedInput";
  }
  return "Unknown";
}

}  // namespace loopkit
