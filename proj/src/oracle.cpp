#include "shapprop/oracle.hpp"

#include <string>

#include "shapprop/numeric.hpp"
#include "shapprop/parallel.hpp"
#include "shapprop/simd/kernels.hpp"

namespace shapprop::oracle {

namespace {

void check_inputs(const ComputeGraph& g, std::span<const double> fg,
                  std::span<const double> bg) {
  const std::size_t n = g.input_dim();
  if (n > kMaxExactFeatures) {
    throw ValidationError(
        "exact enumeration is limited to " + std::to_string(kMaxExactFeatures) +
        " features (got " + std::to_string(n) +
        "); use the propagation engine or a sampling estimator instead");
  }
  if (fg.size() != n || bg.size() != n) {
    throw DimensionMismatchError("oracle: sample length does not match graph input_dim " +
                                 std::to_string(n));
  }
  if (!all_finite(fg) || !all_finite(bg)) {
    throw ValidationError("oracle: samples must be finite");
  }
}

// f on every hybrid; values[m] = f(X(fg, bg, m)). Parallel over mask blocks,
// each worker with its own evaluator; writes are disjoint.
std::vector<double> evaluate_all_hybrids(const ComputeGraph& g, std::span<const double> fg,
                                         std::span<const double> bg,
                                         std::size_t output_index) {
  const std::size_t n = g.input_dim();
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> values(total);
  parallel_blocks(total, [&](std::size_t begin, std::size_t end) {
    Evaluator ev(g);
    Sample hybrid(n);
    for (std::size_t m = begin; m < end; ++m) {
      kernels::blend_bits(fg.data(), bg.data(), m, hybrid.data(), n);
      values[m] = ev.output(hybrid, output_index);
    }
  });
  return values;
}

// Weighted marginal-contribution sums from a precomputed hybrid value table.
std::vector<double> accumulate_phi(std::span<const double> values, std::size_t n) {
  std::vector<double> weight(n);  // W(s, n) by subset size
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = shapley_subset_weight(static_cast<int>(s), static_cast<int>(n));
  }
  std::vector<double> phi(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const std::uint32_t bit = 1u << i;
    NeumaierSum acc;
    const std::size_t total = values.size();
    for (std::size_t m = 0; m < total; ++m) {
      if (m & bit) continue;
      const std::size_t s = static_cast<std::size_t>(
          __builtin_popcount(static_cast<std::uint32_t>(m)));
      acc.add(weight[s] * (values[m | bit] - values[m]));
    }
    phi[i] = acc.value();
  });
  return phi;
}

}  // namespace

Sample hybrid_sample(std::span<const double> foreground, std::span<const double> background,
                     CoalitionMask mask) {
  if (foreground.size() != mask.dim || background.size() != mask.dim) {
    throw DimensionMismatchError("hybrid_sample: mask dimension mismatch");
  }
  Sample out(mask.dim);
  kernels::blend_bits(foreground.data(), background.data(), mask.bits, out.data(), mask.dim);
  return out;
}

Attribution shapley_single_reference(const ComputeGraph& g, std::span<const double> foreground,
                                     std::span<const double> background,
                                     std::size_t output_index) {
  check_inputs(g, foreground, background);
  const auto values = evaluate_all_hybrids(g, foreground, background, output_index);
  Attribution a;
  a.method = Method::Exact;
  a.phi = accumulate_phi(values, g.input_dim());
  return a;
}

Attribution shapley_background(const ComputeGraph& g, std::span<const double> foreground,
                               const std::vector<Sample>& backgrounds,
                               std::size_t output_index) {
  if (backgrounds.empty()) throw ValidationError("oracle: background set is empty");
  const std::size_t n = g.input_dim();
  std::vector<std::vector<double>> per_ref(backgrounds.size());
  for (std::size_t b = 0; b < backgrounds.size(); ++b) {
    per_ref[b] = shapley_single_reference(g, foreground, backgrounds[b], output_index).phi;
  }
  Attribution a;
  a.method = Method::Exact;
  a.phi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    NeumaierSum acc;
    for (const auto& phi : per_ref) acc.add(phi[i]);
    a.phi[i] = acc.value() / static_cast<double>(backgrounds.size());
  }
  a.per_reference = std::move(per_ref);
  return a;
}

Attribution shapley_background_direct(const ComputeGraph& g, std::span<const double> foreground,
                                      const std::vector<Sample>& backgrounds,
                                      std::size_t output_index) {
  if (backgrounds.empty()) throw ValidationError("oracle: background set is empty");
  for (const Sample& bg : backgrounds) check_inputs(g, foreground, bg);
  const std::size_t n = g.input_dim();
  const std::size_t total = std::size_t{1} << n;

  // v(S) = E_b f(X(x, b, S)) over the interventional background expectation
  std::vector<double> v(total, 0.0);
  for (const Sample& bg : backgrounds) {
    const auto values = evaluate_all_hybrids(g, foreground, bg, output_index);
    for (std::size_t m = 0; m < total; ++m) v[m] += values[m];
  }
  const double inv = 1.0 / static_cast<double>(backgrounds.size());
  for (double& x : v) x *= inv;

  Attribution a;
  a.method = Method::Exact;
  a.phi = accumulate_phi(v, n);
  return a;
}

}  // namespace shapprop::oracle
