#include "rh/error.hpp"

namespace rh {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_params: return "InvalidParams";
    case Errc::discriminant_negative: return "DiscriminantNegative";
    case Errc::out_of_domain: return "OutOfDomain";
    case Errc::lambda_zero: return "LambdaZero";
    case Errc::non_positive_dt: return "NonPositiveDt";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::non_negative_drift: return "NonNegativeDrift";
    case Errc::grid_too_coarse: return "GridTooCoarse";
    case Errc::non_convergence: return "NonConvergence";
    case Errc::parameter_mismatch: return "ParameterMismatch";
    case Errc::start_stock_non_positive: return "StartStockNonPositive";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace rh
