#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "shapprop/engine.hpp"
#include "shapprop/numeric.hpp"
#include "shapprop/types.hpp"

// Desk-scale benchmark machinery: the Corrgroups60 synthetic dataset, the
// keep-absolute (mask) ablation metric, the RevealCancel threshold study, and
// minimal model-fitting utilities for building an MLP-into-trees stack to
// explain. Fitting quality only needs to "learn the signal"; nothing here is
// a serious trainer.

namespace shapprop::bench {

// Synthetic regression data: features in correlated triples
// (corr(x_i, x_{i+1}) = corr(x_i, x_{i+2}) = corr(x_{i+1}, x_{i+2}) = rho for
// i = 0, 3, 6, ...; zero across triples; unit variances), labels
// y = X beta + eps with beta_i = 1 iff i mod 3 == 0 and eps ~ N(0, noise_var).
struct CorrgroupsSpec {
  std::size_t n = 1000;
  std::size_t d = 60;
  double rho = 0.99;
  double noise_var = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;  // d divisible by 3, 0 <= rho < 1, n > 0
};

struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;  // row-major n x d
  std::vector<double> y;

  std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
  MatrixView view() const { return {x.data(), n, d}; }
};

Dataset gen_corrgroups(const CorrgroupsSpec& spec);

std::vector<double> column_means(MatrixView m);

// Lloyd's algorithm with k-means++ seeding, fixed iteration budget; the
// standard background summarizer (k centers of the data rows).
std::vector<Sample> kmeans_centers(MatrixView data, std::size_t k, std::uint64_t seed,
                                   std::size_t iterations = 50);

double r_squared(std::span<const double> prediction, std::span<const double> truth);

// Model forward function for the ablation metric. It is copied once per
// worker thread, so the usual pattern is a lambda owning an Evaluator by
// value; it must be copyable, not thread-safe.
using ForwardFn = std::function<double(std::span<const double>)>;

inline ForwardFn graph_forward_fn(const ComputeGraph& g, std::size_t output_index = 0) {
  return [ev = Evaluator(g), output_index](std::span<const double> x) mutable {
    return ev.output(x, output_index);
  };
}

// R^2 of the model as features are unmasked per sample in descending |phi|
// order; masked features take the training mean. points run k = 0 (all
// masked) through k = d (nothing masked).
struct AblationCurve {
  std::vector<std::size_t> features_kept;
  std::vector<double> r_squared;
  std::string method;

  // trapezoidal area over the normalized k axis (so a constant curve at R^2
  // = c has area c)
  double area() const;
};

AblationCurve keep_absolute_mask(const ForwardFn& model,
                                 const std::vector<std::vector<double>>& attributions,
                                 MatrixView x_test, std::span<const double> y_test,
                                 std::span<const double> train_means,
                                 std::string method_label = {});

// Seeded uniform [-1, 1] attribution rows; the "Random" ablation baseline.
std::vector<std::vector<double>> random_attributions(std::size_t rows, std::size_t d,
                                                     std::uint64_t seed);

// Threshold study on ReLU(x1 + x2 + x3 + x4 + 100): background fixed at zero,
// foregrounds drawn coordinate-wise from the discrete uniform integers
// {-1000, ..., 1000}. Per rule, the mean absolute difference from the exact
// Shapley values per draw plus the aggregate over draws.
struct ToyStudyResult {
  std::vector<Method> rules;               // Rescale, RevealCancel, RevealCancelMean
  std::vector<std::vector<double>> mae;    // [rule][draw]
  std::vector<double> aggregate_mae;       // [rule]
  std::vector<Sample> foregrounds;
};

ToyStudyResult toy_revealcancel_study(std::uint64_t seed, std::size_t n_draws = 100);

// --- fitting utilities ---------------------------------------------------

// (X^T X + lambda I) w = X^T y, no intercept.
std::vector<double> ridge_fit(MatrixView x, std::span<const double> y, double lambda);

// Greedy variance-reduction CART regression tree.
Tree fit_cart(MatrixView x, std::span<const double> target, std::size_t max_depth,
              std::size_t min_leaf);

// Squared-error gradient boosting; the learning rate is folded into leaf
// values, the first "tree" is the constant mean stump.
TreeEnsembleSpec fit_boosted_trees(MatrixView x, std::span<const double> y,
                                   std::size_t n_trees, std::size_t max_depth,
                                   double learning_rate, std::size_t min_leaf);

// Ridge-initialized ReLU extractor feeding a boosted tree head, the
// mixed-model stack the ablation benchmark explains.
struct StackParams {
  std::size_t hidden = 8;
  std::size_t n_trees = 30;
  std::size_t tree_depth = 3;
  double learning_rate = 0.3;
  std::size_t min_leaf = 10;
  double ridge_lambda = 1e-3;
  std::uint64_t seed = 0;
};

ComputeGraph fit_stack_model(MatrixView x_train, std::span<const double> y_train,
                             const StackParams& params);

}  // namespace shapprop::bench
