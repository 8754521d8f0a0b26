#include "shapprop/treeshap.hpp"

#include <algorithm>
#include <string>

#include "shapprop/numeric.hpp"

namespace shapprop::treeshap {

namespace {

// Weight tables indexed [n][m] for paths with n diverging features, m of
// them foreground-constrained. Values are exact: the binomials involved fit
// a double's mantissa for n <= kMaxDepth.
struct WeightTable {
  // pos[n][m]: coefficient for each foreground-constrained feature (m >= 1)
  // neg[n][m]: coefficient for each background-constrained feature (m <= n-1)
  double pos[kMaxDepth + 1][kMaxDepth + 1] = {};
  double neg[kMaxDepth + 1][kMaxDepth + 1] = {};

  WeightTable() {
    for (int n = 1; n <= static_cast<int>(kMaxDepth); ++n) {
      for (int m = 0; m <= n; ++m) {
        if (m >= 1) pos[n][m] = 1.0 / (n * binomial_coefficient(n - 1, m - 1));
        if (m <= n - 1) neg[n][m] = 1.0 / (n * binomial_coefficient(n - 1, m));
      }
    }
  }
};

const WeightTable& weights() {
  static const WeightTable t;
  return t;
}

struct Walker {
  const Tree& tree;
  std::span<const double> fg;
  std::span<const double> bg;
  std::vector<double>& phi;
  // -1 background-constrained, 0 free, +1 foreground-constrained
  std::vector<std::int8_t>& constraint;
  // (feature, went_foreground) assignments along the current path
  std::vector<std::pair<std::int32_t, bool>> path;

  void deposit(double leaf_value) {
    const std::size_t n = path.size();
    if (n == 0) return;  // reached by every coalition; cancels in phi
    std::size_t m = 0;
    for (const auto& [feat, to_fg] : path) m += to_fg ? 1 : 0;
    const WeightTable& w = weights();
    for (const auto& [feat, to_fg] : path) {
      if (to_fg) {
        phi[static_cast<std::size_t>(feat)] += leaf_value * w.pos[n][m];
      } else {
        phi[static_cast<std::size_t>(feat)] -= leaf_value * w.neg[n][m];
      }
    }
  }

  void walk(std::int32_t node) {
    const TreeNode& t = tree.nodes[static_cast<std::size_t>(node)];
    if (t.is_leaf()) {
      deposit(t.value);
      return;
    }
    const std::size_t feat = static_cast<std::size_t>(t.feature);
    const std::int32_t fg_child = fg[feat] <= t.threshold ? t.left : t.right;
    const std::int32_t bg_child = bg[feat] <= t.threshold ? t.left : t.right;
    if (fg_child == bg_child) {
      walk(fg_child);
      return;
    }
    switch (constraint[feat]) {
      case +1:
        walk(fg_child);
        return;
      case -1:
        walk(bg_child);
        return;
      default:
        break;
    }
    constraint[feat] = +1;
    path.emplace_back(t.feature, true);
    walk(fg_child);
    path.pop_back();

    constraint[feat] = -1;
    path.emplace_back(t.feature, false);
    walk(bg_child);
    path.pop_back();

    constraint[feat] = 0;
  }
};

void check(const Tree& tree, std::span<const double> fg, std::span<const double> bg,
           std::size_t input_dim) {
  if (input_dim > kMaxFeatures) {
    throw ValidationError("tree shap: input dimension " + std::to_string(input_dim) +
                          " exceeds limit " + std::to_string(kMaxFeatures));
  }
  if (fg.size() != input_dim || bg.size() != input_dim) {
    throw DimensionMismatchError("tree shap: sample length does not match input_dim " +
                                 std::to_string(input_dim));
  }
  tree.validate(input_dim);
  if (tree.depth() > kMaxDepth) {
    throw ValidationError("tree shap: tree depth " + std::to_string(tree.depth()) +
                          " exceeds limit " + std::to_string(kMaxDepth));
  }
}

void accumulate_tree(const Tree& tree, std::span<const double> fg, std::span<const double> bg,
                     std::vector<double>& phi, std::vector<std::int8_t>& constraint) {
  Walker w{tree, fg, bg, phi, constraint, {}};
  w.path.reserve(kMaxDepth);
  w.walk(0);
}

}  // namespace

std::vector<double> tree_shap_single_reference(const Tree& tree, std::span<const double> foreground,
                                               std::span<const double> background,
                                               std::size_t input_dim) {
  check(tree, foreground, background, input_dim);
  std::vector<double> phi(input_dim, 0.0);
  std::vector<std::int8_t> constraint(input_dim, 0);
  accumulate_tree(tree, foreground, background, phi, constraint);
  return phi;
}

std::vector<double> tree_shap_single_reference(const TreeEnsembleSpec& ensemble,
                                               std::span<const double> foreground,
                                               std::span<const double> background) {
  // summed tree by tree so the ensemble result is bit-identical to adding
  // up standalone per-tree attributions
  std::vector<double> phi(ensemble.in_dim, 0.0);
  std::vector<double> scratch(ensemble.in_dim);
  std::vector<std::int8_t> constraint(ensemble.in_dim, 0);
  for (const Tree& tree : ensemble.trees) {
    check(tree, foreground, background, ensemble.in_dim);
    std::fill(scratch.begin(), scratch.end(), 0.0);
    accumulate_tree(tree, foreground, background, scratch, constraint);
    for (std::size_t i = 0; i < ensemble.in_dim; ++i) phi[i] += scratch[i];
  }
  return phi;
}

}  // namespace shapprop::treeshap
