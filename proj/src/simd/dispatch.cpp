#include <atomic>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "shapprop/common.hpp"
#include "shapprop/parallel.hpp"
#include "shapprop/simd/kernels.hpp"

namespace shapprop {

namespace {
std::atomic<int> g_thread_limit{0};
}

int thread_limit() {
  int n = g_thread_limit.load(std::memory_order_relaxed);
  if (n > 0) return n;
  if (const char* env = std::getenv("SHAPPROP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_thread_limit(int n) { g_thread_limit.store(n, std::memory_order_relaxed); }

}  // namespace shapprop

namespace shapprop::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*matvec_bias)(const double*, const double*, const double*, double*, std::size_t,
                      std::size_t);
  void (*relu)(const double*, double*, std::size_t);
  void (*blend_bits)(const double*, const double*, std::uint64_t, double*, std::size_t);
  void (*blend_mask)(const double*, const double*, const std::uint8_t*, double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::matvec_bias, scalar::relu, scalar::blend_bits,
                        scalar::blend_mask};

#if defined(SHAPPROP_WITH_AVX2)
constexpr Table kAvx2{avx2::dot, avx2::matvec_bias, avx2::relu, avx2::blend_bits,
                      avx2::blend_mask};
#endif

bool cpu_has_avx2() {
#if defined(SHAPPROP_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_backend() {
  if (const char* env = std::getenv("SHAPPROP_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!cpu_has_avx2()) {
        throw ValidationError("SHAPPROP_SIMD=avx2 requested but AVX2/FMA is unavailable");
      }
      return Backend::Avx2;
    }
    // anything else, including "auto", falls through to detection
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

struct State {
  Backend backend;
  const Table* table;
};

State& state() {
  static State s = [] {
    const Backend b = pick_backend();
#if defined(SHAPPROP_WITH_AVX2)
    return State{b, b == Backend::Avx2 ? &kAvx2 : &kScalar};
#else
    return State{b, &kScalar};
#endif
  }();
  return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

const char* backend_name() {
  return state().backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() { return cpu_has_avx2(); }

void force_backend(Backend b) {
  if (b == Backend::Avx2 && !cpu_has_avx2()) {
    throw ValidationError("cannot force avx2 backend: AVX2/FMA is unavailable");
  }
#if defined(SHAPPROP_WITH_AVX2)
  state() = State{b, b == Backend::Avx2 ? &kAvx2 : &kScalar};
#else
  state() = State{Backend::Scalar, &kScalar};
#endif
}

double dot(const double* a, const double* b, std::size_t n) {
  return state().table->dot(a, b, n);
}

void matvec_bias(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols) {
  state().table->matvec_bias(w, bias, x, y, rows, cols);
}

void relu(const double* x, double* y, std::size_t n) { state().table->relu(x, y, n); }

void blend_bits(const double* fg, const double* bg, std::uint64_t bits, double* out,
                std::size_t n) {
  state().table->blend_bits(fg, bg, bits, out, n);
}

void blend_mask(const double* fg, const double* bg, const std::uint8_t* mask, double* out,
                std::size_t n) {
  state().table->blend_mask(fg, bg, mask, out, n);
}

}  // namespace shapprop::kernels
