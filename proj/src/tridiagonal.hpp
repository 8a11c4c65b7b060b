#pragma once

#include <cstddef>
#include <vector>

namespace rh::detail {

// Solves lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = rhs[i] (Thomas algorithm).
// lo[0] and up[n-1] are ignored. The matrices assembled here are
// diagonally dominant M-matrices, so no pivoting is needed.
inline void solve_tridiagonal(const std::vector<double>& lo, const std::vector<double>& di,
                              const std::vector<double>& up, const std::vector<double>& rhs,
                              std::vector<double>& x, std::vector<double>& work) {
  const std::size_t n = di.size();
  x.resize(n);
  work.resize(n);
  double beta = di[0];
  x[0] = rhs[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    work[i] = up[i - 1] / beta;
    beta = di[i] - lo[i] * work[i];
    x[i] = (rhs[i] - lo[i] * x[i - 1]) / beta;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= work[i + 1] * x[i + 1];
}

}  // namespace rh::detail
