#pragma once

#include "shapprop/types.hpp"

// Layer-wise SHAP propagation. A backward pass carries a multiplier vector
// (the ratio phi(h) / (f_h - b_h), the role a gradient plays in
// backpropagation) from the explained output down to the inputs:
//
//   - Linear nodes propagate through the transposed weight matrix (exact).
//   - Activation nodes apply the configured rule per neuron: Rescale uses the
//     secant slope (g(f_h) - g(b_h)) / (f_h - b_h); RevealCancel fuses the
//     activation with its producer linear layer, partitions that layer's
//     inputs at a threshold on w_i (f_xi - b_xi), and explains the two
//     partition aggregates exactly as a two-player game before propagating
//     linearly within each partition.
//   - Tree-ensemble heads are seeded with exact per-reference tree SHAP
//     values converted to multipliers.
//   - Loss nodes are scalar nonlinearities and use the secant slope (exact,
//     single input).
//
// Input attributions are phi_i = m_i (f_xi - b_xi); their sum telescopes to
// f(foreground) - f(background) for every rule (local accuracy).
// Multi-background explanations average the per-reference runs.

namespace shapprop::engine {

enum class Rule { Rescale, RevealCancel };
enum class ThresholdMode { Zero, Mean, Fixed };

struct RuleConfig {
  Rule rule = Rule::Rescale;
  ThresholdMode threshold_mode = ThresholdMode::Zero;  // RevealCancel only
  double fixed_threshold = 0.0;                        // ThresholdMode::Fixed
  // Below this |f_h - b_h| the secant is replaced by the analytic derivative
  // at the midpoint (trees, which have none, fall back to 0).
  double zero_delta_epsilon = 1e-6;
  bool keep_per_reference = false;

  void validate() const;
  Method method() const;
};

inline RuleConfig rescale_config() { return {}; }
inline RuleConfig reveal_cancel_config(ThresholdMode mode = ThresholdMode::Zero,
                                       double fixed_t = 0.0) {
  RuleConfig c;
  c.rule = Rule::RevealCancel;
  c.threshold_mode = mode;
  c.fixed_threshold = fixed_t;
  return c;
}

// Secant multiplier for a scalar nonlinearity, with the derivative-at-
// midpoint fallback when f_h and b_h (nearly) coincide. Total function.
double rescale_multiplier(double f_h, double b_h, ActKind g, double epsilon);

// One output neuron of a fused Linear->Activation pair under RevealCancel,
// explained with seed multiplier 1. phi_inputs are the attributions assigned
// to the linear layer's inputs; they sum to g(f_h) - g(b_h).
struct RevealCancelSplit {
  std::vector<double> phi_inputs;
  double phi_pos = 0.0;  // attribution of the above-threshold partition
  double phi_neg = 0.0;
  double threshold = 0.0;
};

RevealCancelSplit reveal_cancel_split(std::span<const double> weights, double bias, ActKind g,
                                      std::span<const double> fg_in,
                                      std::span<const double> bg_in, ThresholdMode mode,
                                      double fixed_t, double epsilon);

// Single-reference layer-wise propagation.
Attribution explain_single(const ComputeGraph& g, std::span<const double> foreground,
                           std::span<const double> background, const RuleConfig& config,
                           std::size_t output_index = 0);

// Mean over per-background single-reference explanations (the background-
// distribution form). per_reference rows are kept when the config asks.
Attribution explain(const ComputeGraph& g, std::span<const double> foreground,
                    const std::vector<Sample>& backgrounds, const RuleConfig& config,
                    std::size_t output_index = 0);

inline Attribution explain(const ComputeGraph& g, const ExplainInstance& instance,
                           const RuleConfig& config) {
  return explain(g, instance.foreground, instance.backgrounds, config, instance.output_index);
}

// Appends a loss head to a scalar-output graph and explains the loss.
Attribution explain_loss(const ComputeGraph& g, std::span<const double> foreground,
                         const std::vector<Sample>& backgrounds, LossKind loss,
                         double target, const RuleConfig& config);

// The loss-composed graph itself (also used to brute-force loss explanations
// against the oracle).
ComputeGraph with_loss(const ComputeGraph& g, LossKind loss, double target);

}  // namespace shapprop::engine
