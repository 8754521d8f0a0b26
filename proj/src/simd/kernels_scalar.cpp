#include "shapprop/simd/kernels.hpp"

namespace shapprop::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void matvec_bias(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot(w + r * cols, x, cols) + (bias ? bias[r] : 0.0);
  }
}

void relu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void blend_bits(const double* fg, const double* bg, std::uint64_t bits, double* out,
                std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ((bits >> i) & 1u) ? fg[i] : bg[i];
  }
}

void blend_mask(const double* fg, const double* bg, const std::uint8_t* mask, double* out,
                std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = mask[i] ? fg[i] : bg[i];
  }
}

}  // namespace shapprop::kernels::scalar
