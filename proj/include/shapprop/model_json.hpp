#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "shapprop/graph.hpp"

// JSON model format (field names are fixed; see README "Model format"):
//
// {
//   "input_dim": 2,
//   "nodes": [
//     {"id": "x",  "kind": {"type": "input", "dim": 2}},
//     {"id": "l1", "kind": {"type": "linear", "weights": [[1.0, 1.0]], "bias": [100.0]}},
//     {"id": "a1", "kind": {"type": "activation", "fn": "relu"}}
//   ],
//   "edges": [["x", "l1", 0], ["l1", "a1", 0]],
//   "output": "a1"
// }
//
// Linear weights are row-major (outer list = output rows). Tree ensembles use
// flat arrays indexed by tree-node id, root = 0, leaves marked left = -1:
//   {"type": "tree_ensemble", "input_dim": 4, "trees": [
//     {"feature": [0, -1, -1], "threshold": [0.5, 0.0, 0.0],
//      "left": [1, -1, -1], "right": [2, -1, -1], "value": [0.0, 1.0, 5.0]}]}
// Split semantics: go left iff value <= threshold.
// Loss nodes: {"type": "loss", "loss": "squared_error" | "binary_cross_entropy"
//              | "identity", "target": 0.0}

namespace shapprop {

ComputeGraph load_model(std::string_view json_text);
std::string save_model(const ComputeGraph& g);

ComputeGraph load_model_file(const std::filesystem::path& path);
void save_model_file(const ComputeGraph& g, const std::filesystem::path& path);

}  // namespace shapprop
