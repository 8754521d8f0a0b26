#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "shapprop/common.hpp"

namespace shapprop {

// Neumaier compensated accumulator. Used wherever a sum must stay stable
// regardless of the magnitude spread of its terms (oracle subset sums,
// background means).
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  NeumaierSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

// Unbiased (n-1) standard deviation; 0 for fewer than two values. Deviations
// are measured against the first value before centering, so a run of
// identical values reports exactly zero (no mean-rounding residue).
inline double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double origin = v[0];
  NeumaierSum shifted;
  for (double x : v) shifted.add(x - origin);
  const double m = shifted.value() / static_cast<double>(v.size());
  NeumaierSum s;
  for (double x : v) {
    const double d = (x - origin) - m;
    s.add(d * d);
  }
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Shapley subset weight W(s, n) = s! (n-s-1)! / n!, computed in log space so
// it stays usable up to the n = 20 enumeration bound without overflow games.
inline double shapley_subset_weight(int subset_size, int n_features) {
  return std::exp(log_factorial(subset_size) + log_factorial(n_features - subset_size - 1) -
                  log_factorial(n_features));
}

// Exact for k up to ~28 of n up to ~58 (fits the 53-bit mantissa); plenty for
// tree depths and KernelSHAP coalition sizes used here.
inline double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

// KernelSHAP coalition weight for 0 < s < n.
inline double kernel_shap_weight(int n_features, int subset_size) {
  const double c = binomial_coefficient(n_features, subset_size);
  return (n_features - 1) / (c * subset_size * (n_features - subset_size));
}

// Row-major read-only view over a dense matrix.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t r) const { return {data + r * cols, cols}; }
};

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// A is row-major n x n and is destroyed; b holds the solution on return.
// Throws SingularSystemError when a pivot degenerates.
void solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n);

// Lower Cholesky factor of a symmetric positive definite row-major matrix.
// Throws SingularSystemError when the matrix is not positive definite.
std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n);

// Inverse of a lower-triangular matrix by forward substitution.
std::vector<double> lower_triangular_inverse(const std::vector<double>& l, std::size_t n);

}  // namespace shapprop
