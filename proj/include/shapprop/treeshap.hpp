#pragma once

#include "shapprop/types.hpp"

// Exact single-reference interventional SHAP values for decision trees, in
// time linear in the tree size (no 2^features blowup).
//
// Method: walk the tree once per (foreground, background) pair. At a split
// where both samples go the same way, follow that child. Where they diverge
// on a fresh feature, branch both ways, recording the feature as
// foreground-constrained (the coalition must contain it) or
// background-constrained (must exclude it); features already constrained on
// the path follow their recorded side. A leaf reached with d
// foreground-constrained and e background-constrained features represents
// the indicator game [D subseteq S][E cap S = empty] scaled by the leaf
// value, whose Shapley values have the closed form
//   i in D:  +value / (N * C(N-1, d-1))
//   j in E:  -value / (N * C(N-1, d))        with N = d + e.
// Leaves with N = 0 are reached by every coalition and cancel out of the
// attributions. Correctness is pinned by the oracle-equivalence suite.

namespace shapprop::treeshap {

inline constexpr std::size_t kMaxFeatures = 10000;
inline constexpr std::size_t kMaxDepth = 32;

// Per-feature attributions for one tree; sum(phi) == tree(fg) - tree(bg).
std::vector<double> tree_shap_single_reference(const Tree& tree, std::span<const double> foreground,
                                               std::span<const double> background,
                                               std::size_t input_dim);

// Additive over the ensemble's sum aggregation.
std::vector<double> tree_shap_single_reference(const TreeEnsembleSpec& ensemble,
                                               std::span<const double> foreground,
                                               std::span<const double> background);

}  // namespace shapprop::treeshap
