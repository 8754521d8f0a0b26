#include <doctest.h>

#include "shapprop/oracle.hpp"
#include "shapprop/treeshap.hpp"
#include "testutil.hpp"

using namespace shapprop;

namespace {

// Wrap a tree ensemble as a graph so the oracle can chew on it.
ComputeGraph as_graph(TreeEnsembleSpec ensemble) {
  const std::size_t dim = ensemble.in_dim;
  std::vector<Node> nodes{Node{"x", InputSpec{dim}}, Node{"t", std::move(ensemble)}};
  std::vector<Edge> edges{{"x", "t", 0}};
  return ComputeGraph(std::move(nodes), std::move(edges), "t", dim);
}

Tree single_split() {
  // x0 <= 0.5 -> 1 else 5
  Tree t;
  t.nodes = {TreeNode{0, 0.5, 1, 2, 0.0}, TreeNode{-1, 0, -1, -1, 1.0},
             TreeNode{-1, 0, -1, -1, 5.0}};
  return t;
}

}  // namespace

TEST_CASE("single split, single feature") {
  const auto phi = treeshap::tree_shap_single_reference(single_split(), Sample{1.0},
                                                        Sample{0.0}, 1);
  CHECK(phi[0] == doctest::Approx(4.0));
}

TEST_CASE("depth-2 tree equals brute force over the four hybrids") {
  // split on x0 at 0.5, then each side splits on x1 at 0.5
  Tree t;
  t.nodes = {
      TreeNode{0, 0.5, 1, 2, 0.0},   TreeNode{1, 0.5, 3, 4, 0.0},
      TreeNode{1, 0.5, 5, 6, 0.0},   TreeNode{-1, 0, -1, -1, 1.0},
      TreeNode{-1, 0, -1, -1, 2.0},  TreeNode{-1, 0, -1, -1, -3.0},
      TreeNode{-1, 0, -1, -1, 10.0},
  };
  TreeEnsembleSpec ensemble{2, {t}};
  const Sample fg{1.0, 1.0};
  const Sample bg{0.0, 0.0};
  const auto phi = treeshap::tree_shap_single_reference(ensemble, fg, bg);
  const auto exact = oracle::shapley_single_reference(as_graph(ensemble), fg, bg);
  CHECK(testutil::max_abs_diff(phi, exact.phi) <= 1e-12);
}

TEST_CASE("duplicated tree doubles the attribution") {
  const Tree t = single_split();
  TreeEnsembleSpec one{1, {t}};
  TreeEnsembleSpec two{1, {t, t}};
  const Sample fg{1.0};
  const Sample bg{0.0};
  const auto phi1 = treeshap::tree_shap_single_reference(one, fg, bg);
  const auto phi2 = treeshap::tree_shap_single_reference(two, fg, bg);
  CHECK(phi2[0] == doctest::Approx(2.0 * phi1[0]).epsilon(1e-15));
}

TEST_CASE("oracle equivalence on random trees") {
  Rng rng(2024);
  for (int seed_round = 0; seed_round < 200; ++seed_round) {
    const std::size_t n = 2 + rng.next_below(7);  // up to 8 features
    TreeEnsembleSpec ensemble{n, {testutil::random_tree(rng, n, 4)}};
    const Sample fg = testutil::random_sample(rng, n, -2.0, 2.0);
    const Sample bg = testutil::random_sample(rng, n, -2.0, 2.0);
    const auto phi = treeshap::tree_shap_single_reference(ensemble, fg, bg);
    const auto exact = oracle::shapley_single_reference(as_graph(ensemble), fg, bg);
    REQUIRE(testutil::max_abs_diff(phi, exact.phi) <= 1e-9);
  }
}

TEST_CASE("local accuracy: sum of phi telescopes to T(fg) - T(bg)") {
  Rng rng(55);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = 2 + rng.next_below(6);
    TreeEnsembleSpec ensemble{n, {}};
    const std::size_t n_trees = 1 + rng.next_below(5);
    for (std::size_t k = 0; k < n_trees; ++k) {
      ensemble.trees.push_back(testutil::random_tree(rng, n, 5));
    }
    const Sample fg = testutil::random_sample(rng, n, -2.0, 2.0);
    const Sample bg = testutil::random_sample(rng, n, -2.0, 2.0);
    const auto phi = treeshap::tree_shap_single_reference(ensemble, fg, bg);
    const double expect = ensemble_eval(ensemble, fg) - ensemble_eval(ensemble, bg);
    CHECK(std::abs(testutil::sum(phi) - expect) <= 1e-9);
  }
}

TEST_CASE("ensemble attribution is the exact sum of per-tree attributions") {
  Rng rng(66);
  const std::size_t n = 5;
  TreeEnsembleSpec ensemble{n, {}};
  for (int k = 0; k < 4; ++k) ensemble.trees.push_back(testutil::random_tree(rng, n, 4));
  const Sample fg = testutil::random_sample(rng, n);
  const Sample bg = testutil::random_sample(rng, n);

  const auto whole = treeshap::tree_shap_single_reference(ensemble, fg, bg);
  std::vector<double> summed(n, 0.0);
  for (const Tree& t : ensemble.trees) {
    const auto part = treeshap::tree_shap_single_reference(t, fg, bg, n);
    for (std::size_t i = 0; i < n; ++i) summed[i] += part[i];
  }
  CHECK(testutil::max_abs_diff(whole, summed) == 0.0);  // same accumulation order
}

TEST_CASE("features never split on get exactly zero") {
  Rng rng(9);
  TreeEnsembleSpec ensemble{6, {testutil::random_tree(rng, 3, 4)}};  // splits only on 0..2
  const Sample fg = testutil::random_sample(rng, 6);
  const Sample bg = testutil::random_sample(rng, 6);
  const auto phi = treeshap::tree_shap_single_reference(ensemble, fg, bg);
  CHECK(phi[3] == 0.0);
  CHECK(phi[4] == 0.0);
  CHECK(phi[5] == 0.0);
}

TEST_CASE("malformed trees are rejected") {
  Tree bad;
  bad.nodes = {TreeNode{0, 0.5, 1, 5, 0.0}, TreeNode{-1, 0, -1, -1, 1.0}};  // right out of range
  CHECK_THROWS_AS(treeshap::tree_shap_single_reference(bad, Sample{1.0}, Sample{0.0}, 1),
                  ValidationError);

  Tree bad_feat = single_split();
  bad_feat.nodes[0].feature = 7;  // outside input_dim
  CHECK_THROWS_AS(treeshap::tree_shap_single_reference(bad_feat, Sample{1.0}, Sample{0.0}, 1),
                  ValidationError);
}
