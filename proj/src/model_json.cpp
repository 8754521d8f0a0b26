#include "shapprop/model_json.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace shapprop {

namespace {

using nlohmann::json;

json tree_to_json(const Tree& t) {
  json j;
  auto& feature = j["feature"] = json::array();
  auto& threshold = j["threshold"] = json::array();
  auto& left = j["left"] = json::array();
  auto& right = j["right"] = json::array();
  auto& value = j["value"] = json::array();
  for (const TreeNode& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return j;
}

Tree tree_from_json(const json& j) {
  const auto& feature = j.at("feature");
  const auto& threshold = j.at("threshold");
  const auto& left = j.at("left");
  const auto& right = j.at("right");
  const auto& value = j.at("value");
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
    throw ParseError("tree arrays have mismatched lengths");
  }
  Tree t;
  t.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.nodes[i].feature = feature[i].get<std::int32_t>();
    t.nodes[i].threshold = threshold[i].get<double>();
    t.nodes[i].left = left[i].get<std::int32_t>();
    t.nodes[i].right = right[i].get<std::int32_t>();
    t.nodes[i].value = value[i].get<double>();
  }
  return t;
}

json kind_to_json(const NodeKind& kind) {
  json j;
  if (const auto* in = std::get_if<InputSpec>(&kind)) {
    j["type"] = "input";
    j["dim"] = in->dim;
  } else if (const auto* lin = std::get_if<LinearSpec>(&kind)) {
    j["type"] = "linear";
    auto& rows = j["weights"] = json::array();
    for (std::size_t r = 0; r < lin->out_dim; ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < lin->in_dim; ++c) row.push_back(lin->weight(r, c));
      rows.push_back(std::move(row));
    }
    j["bias"] = lin->bias;
  } else if (const auto* act = std::get_if<ActivationSpec>(&kind)) {
    j["type"] = "activation";
    j["fn"] = std::string(to_string(act->fn));
  } else if (const auto* tree = std::get_if<TreeEnsembleSpec>(&kind)) {
    j["type"] = "tree_ensemble";
    j["input_dim"] = tree->in_dim;
    auto& trees = j["trees"] = json::array();
    for (const Tree& t : tree->trees) trees.push_back(tree_to_json(t));
  } else if (const auto* loss = std::get_if<LossSpec>(&kind)) {
    j["type"] = "loss";
    j["loss"] = std::string(to_string(loss->kind));
    j["target"] = loss->target;
  }
  return j;
}

NodeKind kind_from_json(const json& j, const std::string& node_id) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "input") {
    return InputSpec{j.at("dim").get<std::size_t>()};
  }
  if (type == "linear") {
    LinearSpec lin;
    const auto& rows = j.at("weights");
    if (!rows.is_array() || rows.empty()) {
      throw ParseError("linear node " + node_id + ": weights must be a non-empty array of rows");
    }
    lin.out_dim = rows.size();
    lin.in_dim = rows[0].size();
    lin.weights.reserve(lin.out_dim * lin.in_dim);
    for (const auto& row : rows) {
      if (row.size() != lin.in_dim) {
        throw ParseError("linear node " + node_id + ": ragged weight rows");
      }
      for (const auto& v : row) lin.weights.push_back(v.get<double>());
    }
    lin.bias = j.at("bias").get<std::vector<double>>();
    return lin;
  }
  if (type == "activation") {
    return ActivationSpec{activation_from_string(j.at("fn").get<std::string>())};
  }
  if (type == "tree_ensemble") {
    TreeEnsembleSpec spec;
    spec.in_dim = j.at("input_dim").get<std::size_t>();
    for (const auto& t : j.at("trees")) spec.trees.push_back(tree_from_json(t));
    return spec;
  }
  if (type == "loss") {
    return LossSpec{loss_from_string(j.at("loss").get<std::string>()),
                    j.at("target").get<double>()};
  }
  throw ParseError("node " + node_id + ": unknown kind type \"" + type + "\"");
}

}  // namespace

ComputeGraph load_model(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
  try {
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    std::vector<Node> nodes;
    for (const auto& jn : j.at("nodes")) {
      const auto id = jn.at("id").get<std::string>();
      nodes.push_back(Node{id, kind_from_json(jn.at("kind"), id)});
    }
    std::vector<Edge> edges;
    for (const auto& je : j.at("edges")) {
      if (!je.is_array() || je.size() != 3) {
        throw ParseError("edges must be [src, dst, slot] triples");
      }
      edges.push_back(Edge{je[0].get<std::string>(), je[1].get<std::string>(),
                           je[2].get<std::size_t>()});
    }
    return ComputeGraph(std::move(nodes), std::move(edges),
                        j.at("output").get<std::string>(), input_dim);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

std::string save_model(const ComputeGraph& g) {
  json j;
  j["input_dim"] = g.input_dim();
  auto& nodes = j["nodes"] = json::array();
  for (const Node& n : g.nodes()) {
    json jn;
    jn["id"] = n.id;
    jn["kind"] = kind_to_json(n.kind);
    nodes.push_back(std::move(jn));
  }
  auto& edges = j["edges"] = json::array();
  for (const Edge& e : g.edges()) {
    edges.push_back(json::array({e.src, e.dst, e.slot}));
  }
  j["output"] = g.output_id();
  return j.dump(2);
}

ComputeGraph load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  // graph validation errors (cycle, dangling edge, dimension mismatch)
  // propagate with their own types so callers can map them to exit codes
  return load_model(buf.str());
}

void save_model_file(const ComputeGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path.string());
  out << save_model(g) << '\n';
}

}  // namespace shapprop
