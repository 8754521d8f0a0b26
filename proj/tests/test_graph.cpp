#include <doctest.h>

#include "shapprop/model_json.hpp"
#include "shapprop/rng.hpp"
#include "testutil.hpp"

using namespace shapprop;

namespace {

ComputeGraph relu_toy() {
  // ReLU(x1 + x2 + 100)
  std::vector<Node> nodes{
      Node{"x", InputSpec{2}},
      Node{"sum", LinearSpec{1, 2, {1.0, 1.0}, {100.0}}},
      Node{"act", ActivationSpec{ActKind::Relu}},
  };
  std::vector<Edge> edges{{"x", "sum", 0}, {"sum", "act", 0}};
  return ComputeGraph(std::move(nodes), std::move(edges), "act", 2);
}

}  // namespace

TEST_CASE("forward on a single linear node is the dot product") {
  std::vector<Node> nodes{Node{"x", InputSpec{2}},
                          Node{"l", LinearSpec{1, 2, {3.0, 2.0}, {0.0}}}};
  std::vector<Edge> edges{{"x", "l", 0}};
  const ComputeGraph g(std::move(nodes), std::move(edges), "l", 2);
  const auto rec = forward(g, Sample{1.0, 1.0});
  CHECK(rec.output(g) == doctest::Approx(5.0));
}

TEST_CASE("forward clamps through relu") {
  const ComputeGraph g = relu_toy();
  CHECK(forward(g, Sample{-150.0, 30.0}).output(g) == doctest::Approx(0.0));
  CHECK(forward(g, Sample{10.0, 20.0}).output(g) == doctest::Approx(130.0));
}

TEST_CASE("loss node at the model's own prediction is zero") {
  ComputeGraph base = relu_toy();
  const Sample x{12.0, 7.0};
  const double fx = forward(base, x).output(base);

  std::vector<Node> nodes = base.nodes();
  nodes.push_back(Node{"loss", LossSpec{LossKind::SquaredError, fx}});
  std::vector<Edge> edges = base.edges();
  edges.push_back(Edge{"act", "loss", 0});
  const ComputeGraph g(std::move(nodes), std::move(edges), "loss", 2);
  CHECK(forward(g, x).output(g) == doctest::Approx(0.0));
}

TEST_CASE("forward is affine for purely linear graphs (superposition)") {
  Rng rng(42);
  for (int round = 0; round < 30; ++round) {
    const std::size_t n = 2 + rng.next_below(5);
    const ComputeGraph g =
        testutil::random_linear_graph(rng, n, 1 + rng.next_below(3), true);
    const Sample a = testutil::random_sample(rng, n);
    const Sample b = testutil::random_sample(rng, n);
    Sample ab(n);
    for (std::size_t i = 0; i < n; ++i) ab[i] = a[i] + b[i];
    const Sample zero(n, 0.0);

    const double f0 = forward(g, zero).output(g);
    const double fa = forward(g, a).output(g);
    const double fb = forward(g, b).output(g);
    const double fab = forward(g, ab).output(g);
    CHECK(std::abs((fab - f0) - ((fa - f0) + (fb - f0))) <= 1e-9);
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(11);
  const ComputeGraph g = testutil::random_mlp(rng, 5, 3);
  const Sample x = testutil::random_sample(rng, 5);
  const double first = forward(g, x).output(g);
  for (int i = 0; i < 5; ++i) {
    CHECK(forward(g, x).output(g) == first);  // bit-identical
  }
}

TEST_CASE("forward rejects dimension mismatch with the node name") {
  const ComputeGraph g = relu_toy();
  try {
    forward(g, Sample{1.0, 2.0, 3.0});
    FAIL("expected DimensionMismatchError");
  } catch (const DimensionMismatchError& e) {
    CHECK(std::string(e.what()).find("x") != std::string::npos);
  }
}

TEST_CASE("model json round-trips structurally") {
  Rng rng(5);
  // two-layer linear graph
  const ComputeGraph g = testutil::random_linear_graph(rng, 3, 2);
  const ComputeGraph back = load_model(save_model(g));
  CHECK(back == g);

  // stack with a tree head survives too
  const ComputeGraph stack = testutil::random_stack(rng, 4, 3, 2, 2);
  CHECK(load_model(save_model(stack)) == stack);
}

TEST_CASE("json with unknown edge target is a dangling edge") {
  const char* text = R"({
    "input_dim": 2,
    "nodes": [{"id": "x", "kind": {"type": "input", "dim": 2}}],
    "edges": [["x", "ghost", 0]],
    "output": "x"})";
  CHECK_THROWS_AS(load_model(text), DanglingEdgeError);
}

TEST_CASE("json with a cycle is rejected") {
  const char* text = R"({
    "input_dim": 2,
    "nodes": [
      {"id": "x", "kind": {"type": "input", "dim": 2}},
      {"id": "a", "kind": {"type": "activation", "fn": "relu"}},
      {"id": "b", "kind": {"type": "activation", "fn": "relu"}}],
    "edges": [["a", "b", 0], ["b", "a", 0]],
    "output": "a"})";
  CHECK_THROWS_AS(load_model(text), CycleError);
}

TEST_CASE("dimension agreement along edges is enforced") {
  // 2x3 linear feeds a consumer expecting 3 inputs: mismatch
  const char* text = R"({
    "input_dim": 3,
    "nodes": [
      {"id": "x",  "kind": {"type": "input", "dim": 3}},
      {"id": "l1", "kind": {"type": "linear", "weights": [[1,0,0],[0,1,0]], "bias": [0,0]}},
      {"id": "l2", "kind": {"type": "linear", "weights": [[1,1,1]], "bias": [0]}}],
    "edges": [["x", "l1", 0], ["l1", "l2", 0]],
    "output": "l2"})";
  CHECK_THROWS_AS(load_model(text), DimensionMismatchError);

  // same weights feeding an activation (shape-preserving) are fine
  const char* ok = R"({
    "input_dim": 3,
    "nodes": [
      {"id": "x",  "kind": {"type": "input", "dim": 3}},
      {"id": "l1", "kind": {"type": "linear", "weights": [[1,0,0],[0,1,0]], "bias": [0,0]}},
      {"id": "a1", "kind": {"type": "activation", "fn": "relu"}}],
    "edges": [["x", "l1", 0], ["l1", "a1", 0]],
    "output": "a1"})";
  CHECK_NOTHROW(load_model(ok));
}

TEST_CASE("only input slot 0 is wired") {
  const char* text = R"({
    "input_dim": 1,
    "nodes": [
      {"id": "x", "kind": {"type": "input", "dim": 1}},
      {"id": "a", "kind": {"type": "activation", "fn": "relu"}}],
    "edges": [["x", "a", 1]],
    "output": "a"})";
  CHECK_THROWS_AS(load_model(text), ValidationError);
}

TEST_CASE("malformed json raises ParseError") {
  CHECK_THROWS_AS(load_model("{ not json"), ParseError);
  CHECK_THROWS_AS(load_model(R"({"input_dim": 1})"), ParseError);
}

TEST_CASE("nodes given out of topological order are re-sorted") {
  const char* text = R"({
    "input_dim": 1,
    "nodes": [
      {"id": "a", "kind": {"type": "activation", "fn": "identity"}},
      {"id": "x", "kind": {"type": "input", "dim": 1}}],
    "edges": [["x", "a", 0]],
    "output": "a"})";
  const ComputeGraph g = load_model(text);
  CHECK(g.nodes()[0].id == "x");
  CHECK(forward(g, Sample{4.5}).output(g) == doctest::Approx(4.5));
}

TEST_CASE("tree split goes left on equality") {
  Tree t;
  t.nodes = {TreeNode{0, 0.5, 1, 2, 0.0}, TreeNode{-1, 0, -1, -1, 1.0},
             TreeNode{-1, 0, -1, -1, 5.0}};
  CHECK(t.eval(Sample{0.5}) == 1.0);
  CHECK(t.eval(Sample{0.5 + 1e-12}) == 5.0);
}
