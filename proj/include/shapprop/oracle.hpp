#pragma once

#include <cstdint>

#include "shapprop/types.hpp"

// Ground-truth interventional Shapley values by exhaustive subset
// enumeration. Everything else in the library is verified against this
// module, so it stays deliberately simple: evaluate the model on all 2^n
// hybrid samples and accumulate exactly weighted marginal contributions.

namespace shapprop::oracle {

// Enumeration bound: 2^20 forward passes is the largest run that stays
// interactive on a laptop.
inline constexpr std::size_t kMaxExactFeatures = 20;

// The coalition S as a bit set over feature indices; bit i set means feature
// i takes its foreground value.
struct CoalitionMask {
  std::uint32_t bits = 0;
  std::size_t dim = 0;

  bool contains(std::size_t i) const { return (bits >> i) & 1u; }
  CoalitionMask with(std::size_t i) const { return {bits | (1u << i), dim}; }
  std::size_t count() const { return static_cast<std::size_t>(__builtin_popcount(bits)); }
};

// X(x, x', S): features in S from the foreground, the rest from the
// background.
Sample hybrid_sample(std::span<const double> foreground, std::span<const double> background,
                     CoalitionMask mask);

// Exact single-reference Shapley values:
//   phi_i = sum_{S subseteq N\{i}} W(|S|, n) [f(X(x,x',S+i)) - f(X(x,x',S))]
// with W(s, n) = s!(n-s-1)!/n!. Refuses input_dim > kMaxExactFeatures.
Attribution shapley_single_reference(const ComputeGraph& g, std::span<const double> foreground,
                                     std::span<const double> background,
                                     std::size_t output_index = 0);

// Mean of shapley_single_reference over the background set.
Attribution shapley_background(const ComputeGraph& g, std::span<const double> foreground,
                               const std::vector<Sample>& backgrounds,
                               std::size_t output_index = 0);

// Same quantity by the other route: Shapley values of the set function
// v(S) = mean_b f(X(x, b, S)). Agreement of the two routes (<= 1e-9) is the
// background-averaging identity the engine relies on.
Attribution shapley_background_direct(const ComputeGraph& g, std::span<const double> foreground,
                                      const std::vector<Sample>& backgrounds,
                                      std::size_t output_index = 0);

}  // namespace shapprop::oracle
