#include "shapprop/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace shapprop {

void solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (!(best > 1e-12)) {
      throw SingularSystemError("singular system at pivot column " + std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t c = col; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] * inv;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      b[r] -= factor * b[col];
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * b[c];
    b[ri] = s / a[ri * n + ri];
  }
}

std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n) {
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) {
          throw SingularSystemError("matrix is not positive definite at row " +
                                    std::to_string(i));
        }
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return l;
}

std::vector<double> lower_triangular_inverse(const std::vector<double>& l, std::size_t n) {
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    inv[col * n + col] = 1.0 / l[col * n + col];
    for (std::size_t row = col + 1; row < n; ++row) {
      double s = 0.0;
      for (std::size_t k = col; k < row; ++k) s += l[row * n + k] * inv[k * n + col];
      inv[row * n + col] = -s / l[row * n + row];
    }
  }
  return inv;
}

}  // namespace shapprop
