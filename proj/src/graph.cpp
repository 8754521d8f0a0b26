#include "shapprop/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "shapprop/numeric.hpp"
#include "shapprop/simd/kernels.hpp"

namespace shapprop {

double apply_activation(ActKind g, double x) {
  switch (g) {
    case ActKind::Relu:
      return x > 0.0 ? x : 0.0;
    case ActKind::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case ActKind::Tanh:
      return std::tanh(x);
    case ActKind::Identity:
      return x;
  }
  throw ValidationError("unknown activation kind");
}

double activation_derivative(ActKind g, double x) {
  switch (g) {
    case ActKind::Relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActKind::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActKind::Identity:
      return 1.0;
  }
  throw ValidationError("unknown activation kind");
}

double apply_loss(LossKind kind, double y, double target) {
  switch (kind) {
    case LossKind::SquaredError:
      return (y - target) * (y - target);
    case LossKind::BinaryCrossEntropy: {
      // y is a probability; clamp away from {0,1} so the log stays finite
      const double p = std::min(1.0 - 1e-12, std::max(1e-12, y));
      return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
    }
    case LossKind::Identity:
      return y;
  }
  throw ValidationError("unknown loss kind");
}

double loss_derivative(LossKind kind, double y, double target) {
  switch (kind) {
    case LossKind::SquaredError:
      return 2.0 * (y - target);
    case LossKind::BinaryCrossEntropy: {
      const double p = std::min(1.0 - 1e-12, std::max(1e-12, y));
      return (p - target) / (p * (1.0 - p));
    }
    case LossKind::Identity:
      return 1.0;
  }
  throw ValidationError("unknown loss kind");
}

std::string_view to_string(ActKind g) {
  switch (g) {
    case ActKind::Relu:
      return "relu";
    case ActKind::Sigmoid:
      return "sigmoid";
    case ActKind::Tanh:
      return "tanh";
    case ActKind::Identity:
      return "identity";
  }
  return "?";
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::SquaredError:
      return "squared_error";
    case LossKind::BinaryCrossEntropy:
      return "binary_cross_entropy";
    case LossKind::Identity:
      return "identity";
  }
  return "?";
}

ActKind activation_from_string(std::string_view s) {
  if (s == "relu") return ActKind::Relu;
  if (s == "sigmoid") return ActKind::Sigmoid;
  if (s == "tanh") return ActKind::Tanh;
  if (s == "identity") return ActKind::Identity;
  throw ParseError("unknown activation function: " + std::string(s));
}

LossKind loss_from_string(std::string_view s) {
  if (s == "squared_error") return LossKind::SquaredError;
  if (s == "binary_cross_entropy") return LossKind::BinaryCrossEntropy;
  if (s == "identity") return LossKind::Identity;
  throw ParseError("unknown loss kind: " + std::string(s));
}

double Tree::eval(std::span<const double> x) const {
  std::int32_t i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (!n.is_leaf()) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

void Tree::validate(std::size_t input_dim) const {
  if (nodes.empty()) throw ValidationError("tree has no nodes");
  const auto size = static_cast<std::int32_t>(nodes.size());
  std::vector<bool> seen(nodes.size(), false);
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const std::int32_t i = stack.back();
    stack.pop_back();
    if (i < 0 || i >= size) throw ValidationError("tree child index out of range");
    if (seen[static_cast<std::size_t>(i)]) {
      throw ValidationError("tree node reachable twice (not a tree)");
    }
    seen[static_cast<std::size_t>(i)] = true;
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      if (n.right >= 0) throw ValidationError("leaf with a right child");
      if (!std::isfinite(n.value)) throw ValidationError("non-finite leaf value");
      continue;
    }
    if (n.right < 0) throw ValidationError("internal node missing right child");
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= input_dim) {
      throw ValidationError("tree split feature " + std::to_string(n.feature) +
                            " outside input dimension " + std::to_string(input_dim));
    }
    if (!std::isfinite(n.threshold)) throw ValidationError("non-finite split threshold");
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
}

double ensemble_eval(const TreeEnsembleSpec& ensemble, std::span<const double> x) {
  double s = 0.0;
  for (const Tree& t : ensemble.trees) s += t.eval(x);
  return s;
}

namespace {

std::size_t node_in_dim(const Node& n) {
  if (std::holds_alternative<InputSpec>(n.kind)) return 0;
  if (const auto* lin = std::get_if<LinearSpec>(&n.kind)) return lin->in_dim;
  if (const auto* tree = std::get_if<TreeEnsembleSpec>(&n.kind)) return tree->in_dim;
  return SIZE_MAX;  // activation/loss adapt to their producer
}

}  // namespace

ComputeGraph::ComputeGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                           std::string output_id, std::size_t input_dim)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      output_id_(std::move(output_id)),
      input_dim_(input_dim) {
  validate_and_index();
}

std::size_t ComputeGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw DanglingEdgeError("unknown node id: " + std::string(id));
}

bool ComputeGraph::contains_tree_node() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) {
    return std::holds_alternative<TreeEnsembleSpec>(n.kind);
  });
}

bool ComputeGraph::is_linear_only() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) {
    if (std::holds_alternative<InputSpec>(n.kind)) return true;
    if (std::holds_alternative<LinearSpec>(n.kind)) return true;
    if (const auto* act = std::get_if<ActivationSpec>(&n.kind)) {
      return act->fn == ActKind::Identity;
    }
    return false;
  });
}

bool ComputeGraph::operator==(const ComputeGraph& other) const {
  return nodes_ == other.nodes_ && edges_ == other.edges_ && output_id_ == other.output_id_ &&
         input_dim_ == other.input_dim_;
}

void ComputeGraph::validate_and_index() {
  const std::size_t n = nodes_.size();
  if (n == 0) throw ValidationError("graph has no nodes");

  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!by_id.emplace(nodes_[i].id, i).second) {
      throw ValidationError("duplicate node id: " + nodes_[i].id);
    }
  }

  for (const Edge& e : edges_) {
    if (!by_id.count(e.src)) throw DanglingEdgeError("edge source references unknown node id: " + e.src);
    if (!by_id.count(e.dst)) throw DanglingEdgeError("edge target references unknown node id: " + e.dst);
    if (e.slot != 0) {
      throw ValidationError("node " + e.dst + ": only input slot 0 is supported");
    }
  }
  if (!by_id.count(output_id_)) {
    throw DanglingEdgeError("output references unknown node id: " + output_id_);
  }

  // Kahn topological sort (stable by original position) so downstream code
  // can rely on producers preceding consumers in node order.
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (const Edge& e : edges_) {
    const std::size_t s = by_id[e.src];
    const std::size_t d = by_id[e.dst];
    out[s].push_back(d);
    ++indegree[d];
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::make_heap(ready.begin(), ready.end(), std::greater<>{});
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
    const std::size_t i = ready.back();
    ready.pop_back();
    order.push_back(i);
    for (std::size_t d : out[i]) {
      if (--indegree[d] == 0) {
        ready.push_back(d);
        std::push_heap(ready.begin(), ready.end(), std::greater<>{});
      }
    }
  }
  if (order.size() != n) throw CycleError("graph contains a cycle");

  const bool already_sorted =
      std::is_sorted(order.begin(), order.end());
  if (!already_sorted) {
    std::vector<Node> sorted;
    sorted.reserve(n);
    for (std::size_t i : order) sorted.push_back(std::move(nodes_[i]));
    nodes_ = std::move(sorted);
    by_id.clear();
    for (std::size_t i = 0; i < n; ++i) by_id.emplace(nodes_[i].id, i);
  }

  producers_.assign(n, -1);
  consumers_.assign(n, {});
  std::vector<int> wired(n, 0);
  for (const Edge& e : edges_) {
    const std::size_t s = by_id[e.src];
    const std::size_t d = by_id[e.dst];
    if (++wired[d] > 1) {
      throw ValidationError("node " + nodes_[d].id + ": input slot 0 wired more than once");
    }
    producers_[d] = static_cast<std::int64_t>(s);
    consumers_[s].push_back(d);
  }
  for (auto& c : consumers_) std::sort(c.begin(), c.end());

  // per-node structural checks + output dimensions
  out_dims_.assign(n, 0);
  std::size_t input_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = nodes_[i];
    const bool is_input = std::holds_alternative<InputSpec>(node.kind);
    if (is_input) {
      ++input_count;
      input_node_ = i;
      if (producers_[i] >= 0) {
        throw ValidationError("input node " + node.id + " must not have an inbound edge");
      }
    } else if (producers_[i] < 0) {
      throw ValidationError("node " + node.id + ": input slot 0 is not wired");
    }

    if (const auto* in = std::get_if<InputSpec>(&node.kind)) {
      if (in->dim == 0) throw ValidationError("input node " + node.id + " has zero dimension");
      if (in->dim != input_dim_) {
        throw DimensionMismatchError("input node " + node.id + " has dim " +
                                     std::to_string(in->dim) + " but graph input_dim is " +
                                     std::to_string(input_dim_));
      }
      out_dims_[i] = in->dim;
    } else if (const auto* lin = std::get_if<LinearSpec>(&node.kind)) {
      if (lin->weights.size() != lin->out_dim * lin->in_dim) {
        throw ValidationError("linear node " + node.id + ": weight matrix size " +
                              std::to_string(lin->weights.size()) + " != out_dim*in_dim");
      }
      if (lin->bias.size() != lin->out_dim) {
        throw ValidationError("linear node " + node.id + ": bias length " +
                              std::to_string(lin->bias.size()) + " != out_dim " +
                              std::to_string(lin->out_dim));
      }
      if (!all_finite(lin->weights) || !all_finite(lin->bias)) {
        throw ValidationError("linear node " + node.id + " has non-finite parameters");
      }
      out_dims_[i] = lin->out_dim;
    } else if (std::holds_alternative<ActivationSpec>(node.kind)) {
      out_dims_[i] = out_dims_[static_cast<std::size_t>(producers_[i])];
    } else if (const auto* tree = std::get_if<TreeEnsembleSpec>(&node.kind)) {
      if (tree->trees.empty()) {
        throw ValidationError("tree ensemble node " + node.id + " has no trees");
      }
      for (const Tree& t : tree->trees) {
        try {
          t.validate(tree->in_dim);
        } catch (const ValidationError& e) {
          throw ValidationError("tree ensemble node " + node.id + ": " + e.what());
        }
      }
      out_dims_[i] = 1;
    } else if (std::holds_alternative<LossSpec>(node.kind)) {
      out_dims_[i] = 1;
      if (node.id != output_id_) {
        throw ValidationError("loss node " + node.id + " must be the output node");
      }
    }

    // dims agree along the inbound edge
    const std::size_t want = node_in_dim(node);
    if (want != 0 && want != SIZE_MAX) {
      const std::size_t got = out_dims_[static_cast<std::size_t>(producers_[i])];
      if (got != want) {
        throw DimensionMismatchError(
            "node " + node.id + " expects input dim " + std::to_string(want) +
            " but its producer provides " + std::to_string(got));
      }
    }
    if (const auto* loss = std::get_if<LossSpec>(&node.kind)) {
      (void)loss;
      if (out_dims_[static_cast<std::size_t>(producers_[i])] != 1) {
        throw DimensionMismatchError("loss node " + node.id + " requires a scalar producer");
      }
    }
  }
  if (input_count != 1) {
    throw ValidationError("graph must have exactly one input node, found " +
                          std::to_string(input_count));
  }
  output_node_ = by_id[output_id_];
}

Evaluator::Evaluator(const ComputeGraph& g) : graph_(&g) {
  values_.resize(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    values_[i].resize(g.out_dim(i));
  }
}

double Evaluator::output(std::span<const double> x, std::size_t output_index) {
  const ComputeGraph& g = *graph_;
  if (x.size() != g.input_dim()) {
    throw DimensionMismatchError("forward: sample has " + std::to_string(x.size()) +
                                 " features but node " + g.nodes()[g.input_node()].id +
                                 " expects " + std::to_string(g.input_dim()));
  }
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const Node& node = g.nodes()[i];
    std::vector<double>& out = values_[i];
    if (std::holds_alternative<InputSpec>(node.kind)) {
      std::copy(x.begin(), x.end(), out.begin());
      continue;
    }
    const std::vector<double>& in = values_[static_cast<std::size_t>(g.producer(i))];
    if (const auto* lin = std::get_if<LinearSpec>(&node.kind)) {
      kernels::matvec_bias(lin->weights.data(), lin->bias.data(), in.data(), out.data(),
                           lin->out_dim, lin->in_dim);
    } else if (const auto* act = std::get_if<ActivationSpec>(&node.kind)) {
      if (act->fn == ActKind::Relu) {
        kernels::relu(in.data(), out.data(), in.size());
      } else {
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = apply_activation(act->fn, in[k]);
      }
    } else if (const auto* tree = std::get_if<TreeEnsembleSpec>(&node.kind)) {
      out[0] = ensemble_eval(*tree, in);
    } else if (const auto* loss = std::get_if<LossSpec>(&node.kind)) {
      out[0] = apply_loss(loss->kind, in[0], loss->target);
    }
  }
  return values_[g.output_node()][output_index];
}

ActivationRecord forward(const ComputeGraph& g, std::span<const double> x) {
  Evaluator ev(g);
  ev.output(x, 0);
  return ActivationRecord{ev.values()};
}

}  // namespace shapprop
