#pragma once

#include <stdexcept>
#include <string>

namespace rh {

/// Failure categories raised by the library. Every throwing operation uses
/// `rh::Error` carrying one of these codes.
enum class Errc {
  invalid_params,
  discriminant_negative,
  out_of_domain,
  lambda_zero,
  non_positive_dt,
  insufficient_data,
  non_negative_drift,
  grid_too_coarse,
  non_convergence,
  parameter_mismatch,
  start_stock_non_positive,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rh
