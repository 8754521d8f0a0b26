// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; it must not be entered unless cpuid reports support
// (dispatch.cpp guarantees that).

#include "shapprop/simd/kernels.hpp"

#if defined(SHAPPROP_WITH_AVX2)

#include <immintrin.h>

#include <cstring>

namespace shapprop::kernels::avx2 {

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  __m256d acc = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  __m128d s2 = _mm_add_pd(lo, hi);
  __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
  double s = _mm_cvtsd_f64(s1);
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
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void blend_bits(const double* fg, const double* bg, std::uint64_t bits, double* out,
                std::size_t n) {
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i word = _mm256_set1_epi64x(static_cast<long long>(bits));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i shifts = _mm256_set_epi64x(
        static_cast<long long>(i + 3), static_cast<long long>(i + 2),
        static_cast<long long>(i + 1), static_cast<long long>(i));
    const __m256i lane_bits = _mm256_and_si256(_mm256_srlv_epi64(word, shifts), one);
    // lanes with bit set -> all-ones mask -> take fg
    const __m256d mask = _mm256_castsi256_pd(_mm256_cmpeq_epi64(lane_bits, one));
    const __m256d f = _mm256_loadu_pd(fg + i);
    const __m256d b = _mm256_loadu_pd(bg + i);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(b, f, mask));
  }
  for (; i < n; ++i) {
    out[i] = ((bits >> i) & 1u) ? fg[i] : bg[i];
  }
}

void blend_mask(const double* fg, const double* bg, const std::uint8_t* mask, double* out,
                std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // widen 4 mask bytes to 64-bit lanes, nonzero -> take fg
    int packed;
    std::memcpy(&packed, mask + i, sizeof(packed));
    const __m128i bytes = _mm_cvtsi32_si128(packed);
    const __m256i lanes = _mm256_cvtepu8_epi64(bytes);
    const __m256d sel = _mm256_castsi256_pd(
        _mm256_cmpgt_epi64(lanes, _mm256_setzero_si256()));
    const __m256d f = _mm256_loadu_pd(fg + i);
    const __m256d b = _mm256_loadu_pd(bg + i);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(b, f, sel));
  }
  for (; i < n; ++i) {
    out[i] = mask[i] ? fg[i] : bg[i];
  }
}

}  // namespace shapprop::kernels::avx2

#endif  // SHAPPROP_WITH_AVX2
