#pragma once

#include <cstdint>

#include "shapprop/types.hpp"

// Sampling-based SHAP estimators, model-agnostic over the graph's forward
// function. Both are seed-deterministic: the coalition / permutation stream
// is drawn single-threaded up front (see rng.hpp for the pinned generator),
// model evaluations may run in parallel into indexed slots, and reductions
// happen in a fixed order. Growing n_samples extends the stream as a prefix,
// so doubling grids reuse draws (paired-seed convergence checks rely on it).

namespace shapprop::samplers {

enum class EstimatorKind { Kernel, Ime };

struct SamplerConfig {
  std::size_t n_samples = 2000;  // coalition draws (Kernel) / permutation draws (Ime)
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::Kernel;

  void validate(std::size_t input_dim) const;
};

// Shapley-kernel weighted regression. Coalitions are drawn from the kernel
// distribution over sizes 1..n-1; the empty and full coalitions (infinite
// kernel weight) are enforced exactly through the intercept and the
// efficiency constraint. When n_samples covers every proper coalition the
// estimator switches to full enumeration with analytic weights and matches
// the oracle. A singular regression is re-drawn (at most 3 retries) before
// giving up.
Attribution kernel_shap(const ComputeGraph& g, std::span<const double> foreground,
                        const std::vector<Sample>& backgrounds, const SamplerConfig& config,
                        std::size_t output_index = 0);

// Permutation sampling: each draw walks a random feature order, attributing
// to each feature its marginal contribution when added. Draws are spread
// round-robin over the background set and per-background means are averaged
// with equal weight, so efficiency holds exactly per run. With n_samples >=
// n! per background the permutations are enumerated exhaustively and the
// estimate is exact.
Attribution ime_shap(const ComputeGraph& g, std::span<const double> foreground,
                     const std::vector<Sample>& backgrounds, const SamplerConfig& config,
                     std::size_t output_index = 0);

enum class ProbeMethod { Kernel, Ime, DeepshapRescale };

// Sampling-variability report: repeated runs per sample count, summarized by
// the standard deviation of the k-th largest |phi| (k = 10, or the smallest
// rank available when the model has fewer features, flagged via
// rank_truncated). Used to judge estimator convergence; a deterministic
// method reports exactly zero everywhere.
struct VarianceReport {
  std::vector<std::size_t> sample_grid;
  // attributions[grid][repeat] is a full phi vector
  std::vector<std::vector<std::vector<double>>> attributions;
  std::vector<std::vector<double>> ranked_stat;  // [grid][repeat] k-th largest |phi|
  std::vector<double> stddev;                    // [grid]
  std::size_t stat_rank = 10;
  bool rank_truncated = false;
};

VarianceReport variance_probe(ProbeMethod method, const ComputeGraph& g,
                              const ExplainInstance& instance,
                              std::vector<std::size_t> sample_grid,
                              std::span<const std::uint64_t> repeat_seeds);

}  // namespace shapprop::samplers
