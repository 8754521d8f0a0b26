#pragma once

#include <string_view>
#include <vector>

#include "shapprop/graph.hpp"

namespace shapprop {

// Which procedure produced an attribution vector.
enum class Method {
  Exact,             // brute-force interventional Shapley
  Rescale,           // layer-wise propagation, Rescale rule
  RevealCancel,      // layer-wise propagation, RevealCancel (threshold 0 or fixed)
  RevealCancelMean,  // RevealCancel with the mean-of-deltas threshold
  KernelShap,
  Ime,
  Random,
};

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

// Per-input-feature attribution values, in units of the model output.
// Invariant (local accuracy): sum(phi) == f(foreground) - mean_b f(b) within
// the producing method's tolerance.
struct Attribution {
  std::vector<double> phi;
  Method method = Method::Exact;
  // Set when a RevealCancel run met a nonlinearity outside the fused
  // Linear->Activation pattern and silently used Rescale there.
  bool rescale_fallback = false;
  // One row per background sample, populated on request.
  std::vector<std::vector<double>> per_reference;
};

// One explanation task: the sample being explained, the baselines supplying
// values for "missing" features, and which output coordinate to explain.
struct ExplainInstance {
  Sample foreground;
  std::vector<Sample> backgrounds;
  std::size_t output_index = 0;
};

}  // namespace shapprop
