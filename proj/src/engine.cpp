#include "shapprop/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapprop/numeric.hpp"
#include "shapprop/parallel.hpp"
#include "shapprop/treeshap.hpp"

namespace shapprop::engine {

void RuleConfig::validate() const {
  if (!(zero_delta_epsilon > 0.0)) {
    throw ValidationError("RuleConfig: zero_delta_epsilon must be positive");
  }
  if (!std::isfinite(fixed_threshold)) {
    throw ValidationError("RuleConfig: fixed threshold must be finite");
  }
}

Method RuleConfig::method() const {
  if (rule == Rule::Rescale) return Method::Rescale;
  return threshold_mode == ThresholdMode::Mean ? Method::RevealCancelMean
                                               : Method::RevealCancel;
}

double rescale_multiplier(double f_h, double b_h, ActKind g, double epsilon) {
  const double d = f_h - b_h;
  if (std::abs(d) >= epsilon) {
    return (apply_activation(g, f_h) - apply_activation(g, b_h)) / d;
  }
  return activation_derivative(g, 0.5 * (f_h + b_h));
}

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Per-neuron RevealCancel pieces in multiplier form: mu[i] satisfies
// mu[i] * (fg_in[i] - bg_in[i]) == the attribution flowing to input i.
struct NeuronSplit {
  std::vector<double> mu;
  double phi_pos = 0.0;
  double phi_neg = 0.0;
  double threshold = 0.0;
};

NeuronSplit neuron_split(std::span<const double> w, double bias, ActKind g,
                         std::span<const double> fg_in, std::span<const double> bg_in,
                         ThresholdMode mode, double fixed_t, double epsilon) {
  const std::size_t n = w.size();
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) delta[i] = w[i] * (fg_in[i] - bg_in[i]);

  double t = 0.0;
  if (mode == ThresholdMode::Mean) {
    t = mean(delta);
  } else if (mode == ThresholdMode::Fixed) {
    t = fixed_t;
  }

  // ties go negative: positive iff delta > t
  double f_pos = 0.0, b_pos = 0.0, f_neg = 0.0, b_neg = 0.0;
  double abs_pos = 0.0, abs_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (delta[i] > t) {
      f_pos += w[i] * fg_in[i];
      b_pos += w[i] * bg_in[i];
      abs_pos += std::abs(delta[i]);
    } else {
      f_neg += w[i] * fg_in[i];
      b_neg += w[i] * bg_in[i];
      abs_neg += std::abs(delta[i]);
    }
  }

  // two-player exact Shapley values of the partition aggregates; the bias
  // rides inside every g() evaluation and cancels in the differences
  const double ff = apply_activation(g, f_pos + f_neg + bias);
  const double bf = apply_activation(g, b_pos + f_neg + bias);
  const double fb = apply_activation(g, f_pos + b_neg + bias);
  const double bb = apply_activation(g, b_pos + b_neg + bias);

  NeuronSplit out;
  out.threshold = t;
  out.phi_pos = 0.5 * ((ff - bf) + (fb - bb));
  out.phi_neg = 0.5 * ((ff - fb) + (bf - bb));

  const double d_pos = f_pos - b_pos;
  const double d_neg = f_neg - b_neg;
  const bool pos_secant = std::abs(d_pos) >= epsilon;
  const bool neg_secant = std::abs(d_neg) >= epsilon;
  const double pos_ratio = pos_secant ? out.phi_pos / d_pos : 0.0;
  const double neg_ratio = neg_secant ? out.phi_neg / d_neg : 0.0;

  out.mu.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = delta[i] > t;
    if (positive ? pos_secant : neg_secant) {
      out.mu[i] = (positive ? pos_ratio : neg_ratio) * w[i];
    } else {
      // degenerate partition (f and b aggregates coincide): spread the
      // partition's attribution proportionally to |delta|, preserving sums
      const double abs_sum = positive ? abs_pos : abs_neg;
      if (abs_sum > 0.0) {
        const double phi = positive ? out.phi_pos : out.phi_neg;
        out.mu[i] = phi * std::abs(w[i]) * sgn(fg_in[i] - bg_in[i]) / abs_sum;
      }
    }
  }
  return out;
}

}  // namespace

RevealCancelSplit reveal_cancel_split(std::span<const double> weights, double bias, ActKind g,
                                      std::span<const double> fg_in,
                                      std::span<const double> bg_in, ThresholdMode mode,
                                      double fixed_t, double epsilon) {
  if (weights.size() != fg_in.size() || weights.size() != bg_in.size()) {
    throw DimensionMismatchError("reveal_cancel_split: weight/sample length mismatch");
  }
  const NeuronSplit s = neuron_split(weights, bias, g, fg_in, bg_in, mode, fixed_t, epsilon);
  RevealCancelSplit out;
  out.phi_pos = s.phi_pos;
  out.phi_neg = s.phi_neg;
  out.threshold = s.threshold;
  out.phi_inputs.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.phi_inputs[i] = s.mu[i] * (fg_in[i] - bg_in[i]);
  }
  return out;
}

namespace {

void check_finite_record(const ComputeGraph& g, const std::vector<std::vector<double>>& values,
                         const char* which) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!all_finite(values[i])) {
      throw EvaluationError("non-finite value at node " + g.nodes()[i].id + " during " +
                            which + " forward pass");
    }
  }
}

void check_tree_heads_terminal(const ComputeGraph& g) {
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (!std::holds_alternative<TreeEnsembleSpec>(g.nodes()[i].kind)) continue;
    for (std::size_t c : g.consumers(i)) {
      if (!std::holds_alternative<LossSpec>(g.nodes()[c].kind)) {
        throw ValidationError("tree ensemble node " + g.nodes()[i].id +
                              " must be terminal (or feed a loss head); it feeds " +
                              g.nodes()[c].id);
      }
    }
  }
}

}  // namespace

Attribution explain_single(const ComputeGraph& g, std::span<const double> foreground,
                           std::span<const double> background, const RuleConfig& config,
                           std::size_t output_index) {
  config.validate();
  if (output_index >= g.output_dim()) {
    throw DimensionMismatchError("output index " + std::to_string(output_index) +
                                 " out of range for output dim " +
                                 std::to_string(g.output_dim()));
  }
  check_tree_heads_terminal(g);

  Evaluator fg_ev(g), bg_ev(g);
  fg_ev.output(foreground, output_index);
  bg_ev.output(background, output_index);
  const auto& fv = fg_ev.values();
  const auto& bv = bg_ev.values();
  check_finite_record(g, fv, "foreground");
  check_finite_record(g, bv, "background");

  const std::size_t count = g.node_count();
  const double eps = config.zero_delta_epsilon;

  std::vector<std::vector<double>> mult(count);
  std::vector<char> consumed_by_fusion(count, 0);
  mult[g.output_node()].assign(g.output_dim(), 0.0);
  mult[g.output_node()][output_index] = 1.0;

  auto flow_into = [&](std::size_t node, std::size_t k, double value) {
    auto& m = mult[node];
    if (m.empty()) m.assign(g.out_dim(node), 0.0);
    m[k] += value;
  };

  Attribution result;
  result.method = config.method();
  result.phi.assign(g.input_dim(), 0.0);

  for (std::size_t idx = count; idx-- > 0;) {
    if (mult[idx].empty() || consumed_by_fusion[idx]) continue;
    const Node& node = g.nodes()[idx];
    const std::vector<double>& m_out = mult[idx];

    if (std::holds_alternative<InputSpec>(node.kind)) {
      for (std::size_t k = 0; k < m_out.size(); ++k) {
        result.phi[k] += m_out[k] * (foreground[k] - background[k]);
      }
      continue;
    }

    const std::size_t prod = static_cast<std::size_t>(g.producer(idx));

    if (const auto* lin = std::get_if<LinearSpec>(&node.kind)) {
      for (std::size_t j = 0; j < lin->out_dim; ++j) {
        const double mj = m_out[j];
        if (mj == 0.0) continue;
        const auto row = lin->row(j);
        for (std::size_t i = 0; i < lin->in_dim; ++i) {
          flow_into(prod, i, mj * row[i]);
        }
      }
    } else if (const auto* act = std::get_if<ActivationSpec>(&node.kind)) {
      const Node& prod_node = g.nodes()[prod];
      const auto* lin = std::get_if<LinearSpec>(&prod_node.kind);
      const bool fusable = config.rule == Rule::RevealCancel && lin != nullptr &&
                           g.consumers(prod).size() == 1 && prod != g.output_node();
      if (fusable) {
        // RevealCancel: explain linear + activation as one unit, per neuron
        const std::size_t lin_prod = static_cast<std::size_t>(g.producer(prod));
        const auto& fg_in = fv[lin_prod];
        const auto& bg_in = bv[lin_prod];
        for (std::size_t j = 0; j < lin->out_dim; ++j) {
          const double mj = m_out[j];
          if (mj == 0.0) continue;
          const NeuronSplit s =
              neuron_split(lin->row(j), lin->bias[j], act->fn, fg_in, bg_in,
                           config.threshold_mode, config.fixed_threshold, eps);
          for (std::size_t i = 0; i < lin->in_dim; ++i) {
            if (s.mu[i] != 0.0) flow_into(lin_prod, i, mj * s.mu[i]);
          }
        }
        consumed_by_fusion[prod] = 1;
      } else {
        if (config.rule == Rule::RevealCancel) result.rescale_fallback = true;
        const auto& pre_f = fv[prod];
        const auto& pre_b = bv[prod];
        for (std::size_t j = 0; j < m_out.size(); ++j) {
          if (m_out[j] == 0.0) continue;
          flow_into(prod, j,
                    m_out[j] * rescale_multiplier(pre_f[j], pre_b[j], act->fn, eps));
        }
      }
    } else if (const auto* tree = std::get_if<TreeEnsembleSpec>(&node.kind)) {
      // exact per-reference tree SHAP seeds, turned into multipliers; a tree
      // has no derivative, so coincident inputs fall back to 0 (their seed
      // attribution is 0 there as well)
      const auto seeds = treeshap::tree_shap_single_reference(*tree, fv[prod], bv[prod]);
      const double mj = m_out[0];
      for (std::size_t i = 0; i < tree->in_dim; ++i) {
        const double d = fv[prod][i] - bv[prod][i];
        if (std::abs(d) >= eps && seeds[i] != 0.0) {
          flow_into(prod, i, mj * seeds[i] / d);
        }
      }
    } else if (const auto* loss = std::get_if<LossSpec>(&node.kind)) {
      const double fy = fv[prod][0];
      const double by = bv[prod][0];
      const double d = fy - by;
      double ratio;
      if (std::abs(d) >= eps) {
        ratio = (apply_loss(loss->kind, fy, loss->target) -
                 apply_loss(loss->kind, by, loss->target)) /
                d;
      } else {
        ratio = loss_derivative(loss->kind, 0.5 * (fy + by), loss->target);
      }
      flow_into(prod, 0, m_out[0] * ratio);
    }
  }
  return result;
}

Attribution explain(const ComputeGraph& g, std::span<const double> foreground,
                    const std::vector<Sample>& backgrounds, const RuleConfig& config,
                    std::size_t output_index) {
  if (backgrounds.empty()) {
    throw ValidationError("explain: background set must not be empty");
  }
  config.validate();

  const std::size_t n_refs = backgrounds.size();
  std::vector<Attribution> singles(n_refs);
  parallel_for(n_refs, [&](std::size_t b) {
    singles[b] = explain_single(g, foreground, backgrounds[b], config, output_index);
  });

  Attribution out;
  out.method = config.method();
  out.phi.assign(g.input_dim(), 0.0);
  for (std::size_t i = 0; i < g.input_dim(); ++i) {
    NeumaierSum acc;
    for (const Attribution& s : singles) acc.add(s.phi[i]);
    out.phi[i] = acc.value() / static_cast<double>(n_refs);
  }
  for (const Attribution& s : singles) out.rescale_fallback |= s.rescale_fallback;
  if (config.keep_per_reference) {
    out.per_reference.reserve(n_refs);
    for (Attribution& s : singles) out.per_reference.push_back(std::move(s.phi));
  }
  return out;
}

ComputeGraph with_loss(const ComputeGraph& g, LossKind loss, double target) {
  if (g.output_dim() != 1) {
    throw DimensionMismatchError("with_loss: graph output must be scalar, got dim " +
                                 std::to_string(g.output_dim()));
  }
  std::string id = "loss";
  for (int k = 1; std::any_of(g.nodes().begin(), g.nodes().end(),
                              [&](const Node& n) { return n.id == id; });
       ++k) {
    id = "loss_" + std::to_string(k);
  }
  std::vector<Node> nodes = g.nodes();
  nodes.push_back(Node{id, LossSpec{loss, target}});
  std::vector<Edge> edges = g.edges();
  edges.push_back(Edge{g.output_id(), id, 0});
  return ComputeGraph(std::move(nodes), std::move(edges), id, g.input_dim());
}

Attribution explain_loss(const ComputeGraph& g, std::span<const double> foreground,
                         const std::vector<Sample>& backgrounds, LossKind loss,
                         double target, const RuleConfig& config) {
  const ComputeGraph composed = with_loss(g, loss, target);
  return explain(composed, foreground, backgrounds, config, 0);
}

}  // namespace shapprop::engine
