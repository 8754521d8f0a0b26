#include <doctest.h>

#include <cstring>
#include <vector>

#include "shapprop/engine.hpp"
#include "shapprop/oracle.hpp"
#include "shapprop/rng.hpp"
#include "shapprop/simd/kernels.hpp"
#include "testutil.hpp"

using namespace shapprop;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_uniform(-scale, scale);
  return v;
}

struct BackendGuard {
  kernels::Backend saved;
  BackendGuard() : saved(kernels::active_backend()) {}
  ~BackendGuard() { kernels::force_backend(saved); }
};

}  // namespace

// Scalar and SIMD variants must agree: bit-exact where the kernel only
// selects or compares, tight relative tolerance where FMA reassociates sums.
TEST_CASE("simd variants match scalar reference") {
  if (!kernels::avx2_available()) {
    MESSAGE("AVX2 unavailable; scalar-only build, nothing to compare");
    return;
  }
  Rng rng(20240811);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng.next_below(200);
    const auto a = random_vec(rng, n, 10.0);
    const auto b = random_vec(rng, n, 10.0);

    const double d_scalar = kernels::scalar::dot(a.data(), b.data(), n);
    const double d_avx2 = kernels::avx2::dot(a.data(), b.data(), n);
    CHECK(d_avx2 == doctest::Approx(d_scalar).epsilon(1e-12));

    std::vector<double> r_scalar(n), r_avx2(n);
    kernels::scalar::relu(a.data(), r_scalar.data(), n);
    kernels::avx2::relu(a.data(), r_avx2.data(), n);
    CHECK(std::memcmp(r_scalar.data(), r_avx2.data(), n * sizeof(double)) == 0);

    // blend_bits is specified for up to 64 lanes
    const std::size_t nb = std::min<std::size_t>(n, 64);
    const std::uint64_t bits = rng.next_u64();
    std::vector<double> h_scalar(n), h_avx2(n);
    kernels::scalar::blend_bits(a.data(), b.data(), bits, h_scalar.data(), nb);
    kernels::avx2::blend_bits(a.data(), b.data(), bits, h_avx2.data(), nb);
    CHECK(std::memcmp(h_scalar.data(), h_avx2.data(), nb * sizeof(double)) == 0);

    std::vector<std::uint8_t> mask(n);
    for (auto& m : mask) m = rng.next_below(2) ? 1 : 0;
    kernels::scalar::blend_mask(a.data(), b.data(), mask.data(), h_scalar.data(), n);
    kernels::avx2::blend_mask(a.data(), b.data(), mask.data(), h_avx2.data(), n);
    CHECK(std::memcmp(h_scalar.data(), h_avx2.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("matvec_bias equals row-by-row dot products") {
  Rng rng(7);
  for (int round = 0; round < 50; ++round) {
    const std::size_t rows = 1 + rng.next_below(12);
    const std::size_t cols = 1 + rng.next_below(40);
    const auto w = random_vec(rng, rows * cols, 2.0);
    const auto bias = random_vec(rng, rows, 1.0);
    const auto x = random_vec(rng, cols, 3.0);
    std::vector<double> y(rows);
    kernels::matvec_bias(w.data(), bias.data(), x.data(), y.data(), rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      double expect = bias[r];
      for (std::size_t c = 0; c < cols; ++c) expect += w[r * cols + c] * x[c];
      CHECK(y[r] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("blend_bits composes the coalition hybrid") {
  const std::vector<double> fg{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> bg{-1.0, -2.0, -3.0, -4.0, -5.0};
  std::vector<double> out(5);
  kernels::blend_bits(fg.data(), bg.data(), 0b10101u, out.data(), 5);
  CHECK(out == std::vector<double>{1.0, -2.0, 3.0, -4.0, 5.0});
  kernels::blend_bits(fg.data(), bg.data(), 0u, out.data(), 5);
  CHECK(out == bg);
  kernels::blend_bits(fg.data(), bg.data(), 0b11111u, out.data(), 5);
  CHECK(out == fg);
}

TEST_CASE("whole explanations agree across backends") {
  if (!kernels::avx2_available()) return;
  BackendGuard guard;
  Rng rng(909);
  const ComputeGraph g = testutil::random_mlp(rng, 6, 3);
  const Sample fg = testutil::random_sample(rng, 6);
  std::vector<Sample> bgs{testutil::random_sample(rng, 6), testutil::random_sample(rng, 6)};

  kernels::force_backend(kernels::Backend::Scalar);
  const auto scalar_phi = engine::explain(g, fg, bgs, engine::rescale_config()).phi;
  const auto scalar_oracle = oracle::shapley_background(g, fg, bgs).phi;
  kernels::force_backend(kernels::Backend::Avx2);
  const auto avx2_phi = engine::explain(g, fg, bgs, engine::rescale_config()).phi;
  const auto avx2_oracle = oracle::shapley_background(g, fg, bgs).phi;

  CHECK(testutil::max_abs_diff(scalar_phi, avx2_phi) <= 1e-10);
  CHECK(testutil::max_abs_diff(scalar_oracle, avx2_oracle) <= 1e-10);
}

TEST_CASE("force_backend switches the dispatch table") {
  BackendGuard guard;
  kernels::force_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  CHECK(std::string(kernels::backend_name()) == "scalar");
  if (kernels::avx2_available()) {
    kernels::force_backend(kernels::Backend::Avx2);
    CHECK(std::string(kernels::backend_name()) == "avx2");
  }
}
