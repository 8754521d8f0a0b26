#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Data-parallel inner loops used by forward evaluation and hybrid-sample
// composition. Every kernel has a scalar reference implementation; on x86-64
// an AVX2 variant is compiled separately and selected at runtime via cpuid.
// The two are equivalence-tested against each other (bit-exact for the
// selection/max kernels, tight relative tolerance for fused-multiply sums).

namespace shapprop::kernels {

enum class Backend { Scalar, Avx2 };

// Backend resolved at first use: SHAPPROP_SIMD=scalar|avx2|auto (default
// auto) then cpuid. force_backend() overrides, mainly for the equivalence
// tests; it throws ValidationError if the requested backend is unavailable.
Backend active_backend();
const char* backend_name();
void force_backend(Backend b);
bool avx2_available();

double dot(const double* a, const double* b, std::size_t n);

// y[r] = dot(w_row_r, x) + bias[r]; w is row-major rows x cols.
void matvec_bias(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols);

void relu(const double* x, double* y, std::size_t n);

// out[i] = ((bits >> i) & 1) ? fg[i] : bg[i]; n <= 64. This is the hybrid
// sample X(x, x', S) with S encoded as a bit set.
void blend_bits(const double* fg, const double* bg, std::uint64_t bits, double* out,
                std::size_t n);

// out[i] = mask[i] ? fg[i] : bg[i].
void blend_mask(const double* fg, const double* bg, const std::uint8_t* mask, double* out,
                std::size_t n);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return dot(a.data(), b.data(), a.size());
}

// Scalar reference implementations, exposed for the equivalence suite.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void matvec_bias(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
void relu(const double* x, double* y, std::size_t n);
void blend_bits(const double* fg, const double* bg, std::uint64_t bits, double* out,
                std::size_t n);
void blend_mask(const double* fg, const double* bg, const std::uint8_t* mask, double* out,
                std::size_t n);
}  // namespace scalar

#if defined(SHAPPROP_WITH_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void matvec_bias(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
void relu(const double* x, double* y, std::size_t n);
void blend_bits(const double* fg, const double* bg, std::uint64_t bits, double* out,
                std::size_t n);
void blend_mask(const double* fg, const double* bg, const std::uint8_t* mask, double* out,
                std::size_t n);
}  // namespace avx2
#endif

}  // namespace shapprop::kernels
