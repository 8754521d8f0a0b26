#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shapprop/common.hpp"

namespace shapprop {

// A model input or a baseline; raw feature units.
using Sample = std::vector<double>;

enum class ActKind { Relu, Sigmoid, Tanh, Identity };
enum class LossKind { SquaredError, BinaryCrossEntropy, Identity };

double apply_activation(ActKind g, double x);
double activation_derivative(ActKind g, double x);
double apply_loss(LossKind kind, double y, double target);
double loss_derivative(LossKind kind, double y, double target);

std::string_view to_string(ActKind g);
std::string_view to_string(LossKind k);
ActKind activation_from_string(std::string_view s);
LossKind loss_from_string(std::string_view s);

struct InputSpec {
  std::size_t dim = 0;
  bool operator==(const InputSpec&) const = default;
};

// Dense layer y = W x + b, W row-major out_dim x in_dim.
struct LinearSpec {
  std::size_t out_dim = 0;
  std::size_t in_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double weight(std::size_t row, std::size_t col) const { return weights[row * in_dim + col]; }
  std::span<const double> row(std::size_t r) const { return {weights.data() + r * in_dim, in_dim}; }
  bool operator==(const LinearSpec&) const = default;
};

struct ActivationSpec {
  ActKind fn = ActKind::Identity;
  bool operator==(const ActivationSpec&) const = default;
};

// Binary decision tree stored as flat parallel-indexed nodes; index 0 is the
// root. A node is a leaf iff left < 0. Split semantics: go left iff
// value <= threshold (fixed bit-exactly, see the model format doc).
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double eval(std::span<const double> x) const;
  std::size_t depth() const;
  // Throws ValidationError on structural problems (bad child indices, a
  // feature index outside [0, input_dim), orphaned cycles).
  void validate(std::size_t input_dim) const;
  bool operator==(const Tree&) const = default;
};

// Ensemble output is the sum of its trees' outputs (gradient-boosting
// convention; any learning rate is folded into the leaf values).
struct TreeEnsembleSpec {
  std::size_t in_dim = 0;
  std::vector<Tree> trees;
  bool operator==(const TreeEnsembleSpec&) const = default;
};

struct LossSpec {
  LossKind kind = LossKind::SquaredError;
  double target = 0.0;
  bool operator==(const LossSpec&) const = default;
};

using NodeKind = std::variant<InputSpec, LinearSpec, ActivationSpec, TreeEnsembleSpec, LossSpec>;

struct Node {
  std::string id;
  NodeKind kind;
  bool operator==(const Node&) const = default;
};

// Directed edge producer -> consumer. All current node kinds take exactly one
// input, so slot must be 0; the field exists in the wire format for forward
// compatibility.
struct Edge {
  std::string src;
  std::string dst;
  std::size_t slot = 0;
  bool operator==(const Edge&) const = default;
};

// Immutable, validated model DAG. Nodes are stored in topological order
// (re-sorted on construction if needed); construction throws CycleError,
// DanglingEdgeError, DimensionMismatchError or ValidationError with the
// offending node named in the message. Instances are safe to share across
// threads.
class ComputeGraph {
 public:
  ComputeGraph(std::vector<Node> nodes, std::vector<Edge> edges, std::string output_id,
               std::size_t input_dim);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t input_dim() const { return input_dim_; }
  const std::string& output_id() const { return output_id_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t output_node() const { return output_node_; }
  std::size_t input_node() const { return input_node_; }
  std::size_t out_dim(std::size_t node) const { return out_dims_[node]; }
  std::size_t output_dim() const { return out_dims_[output_node_]; }

  // Index of the producer feeding `node`, or -1 for the input node.
  std::int64_t producer(std::size_t node) const { return producers_[node]; }
  std::span<const std::size_t> consumers(std::size_t node) const {
    return {consumers_[node].data(), consumers_[node].size()};
  }

  std::size_t index_of(std::string_view id) const;  // throws DanglingEdgeError
  bool contains_tree_node() const;
  bool is_linear_only() const;  // only Input/Linear/identity-Activation nodes

  bool operator==(const ComputeGraph& other) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::string output_id_;
  std::size_t input_dim_ = 0;
  std::size_t output_node_ = 0;
  std::size_t input_node_ = 0;
  std::vector<std::size_t> out_dims_;
  std::vector<std::int64_t> producers_;
  std::vector<std::vector<std::size_t>> consumers_;

  void validate_and_index();
};

// Per-node output vectors for one forward pass, aligned with graph node
// order. values[output_node][k] is the model prediction f_k(x).
struct ActivationRecord {
  std::vector<std::vector<double>> values;

  const std::vector<double>& at(std::size_t node) const { return values[node]; }
  double output(const ComputeGraph& g, std::size_t output_index = 0) const {
    return values[g.output_node()][output_index];
  }
};

// Reusable forward evaluator; owns its workspace so tight loops (oracle
// enumeration, samplers) do not reallocate per call. Not thread-safe; create
// one per thread.
class Evaluator {
 public:
  explicit Evaluator(const ComputeGraph& g);

  // Evaluates every node; returns the output node's value at output_index.
  double output(std::span<const double> x, std::size_t output_index = 0);
  // Values of the last call, aligned with graph node order.
  const std::vector<std::vector<double>>& values() const { return values_; }
  const ComputeGraph& graph() const { return *graph_; }

 private:
  const ComputeGraph* graph_;
  std::vector<std::vector<double>> values_;
};

ActivationRecord forward(const ComputeGraph& g, std::span<const double> x);

double ensemble_eval(const TreeEnsembleSpec& ensemble, std::span<const double> x);

}  // namespace shapprop
