// shapprop CLI: model/data I/O, explanation runs, benchmark orchestration.
//
// Exit codes: 0 success, 2 bad flags/usage, 3 dimension mismatch,
// 1 any other error. All randomness flows from --seed; identical flags,
// input files and seed produce byte-identical output CSVs.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shapprop/bench.hpp"
#include "shapprop/csv.hpp"
#include "shapprop/engine.hpp"
#include "shapprop/manifest.hpp"
#include "shapprop/model_json.hpp"
#include "shapprop/oracle.hpp"
#include "shapprop/parallel.hpp"
#include "shapprop/rng.hpp"
#include "shapprop/samplers.hpp"

namespace {

using namespace shapprop;

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<Sample> rows;
};

// Accepts either exactly the model's feature columns or those plus a trailing
// "y" label column (so `gen` output feeds `explain` untransformed).
FeatureTable load_features(const std::filesystem::path& path, std::size_t input_dim) {
  const csv::Table t = csv::read_file(path);
  std::size_t cols = t.cols();
  if (cols == input_dim + 1 && !t.header.empty() && t.header.back() == "y") {
    cols = input_dim;
  } else if (cols != input_dim) {
    throw DimensionMismatchError(path.string() + ": model expects " +
                                 std::to_string(input_dim) + " feature columns, file has " +
                                 std::to_string(t.cols()) +
                                 (t.header.empty() ? "" : " (last column \"" + t.header.back() +
                                                              "\")"));
  }
  FeatureTable out;
  out.names.assign(t.header.begin(), t.header.begin() + static_cast<long>(cols));
  out.rows.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    out.rows.emplace_back(row.begin(), row.begin() + static_cast<long>(cols));
  }
  return out;
}

std::vector<double> label_column(const csv::Table& t, const std::filesystem::path& path) {
  if (t.header.empty() || t.header.back() != "y") {
    throw DimensionMismatchError(path.string() + ": expected a trailing \"y\" label column");
  }
  std::vector<double> y;
  y.reserve(t.rows.size());
  for (const auto& row : t.rows) y.push_back(row.back());
  return y;
}

int run_explain(const std::string& model_path, const std::string& data_path,
                const std::string& background, const std::string& method_name,
                const std::string& out_path, std::uint64_t seed, std::size_t samples,
                std::size_t output_index) {
  const ComputeGraph model = load_model_file(model_path);
  const FeatureTable data = load_features(data_path, model.input_dim());
  const Method method = method_from_string(method_name);

  std::vector<Sample> backgrounds;
  bool background_is_file = false;
  if (background.rfind("kmeans:", 0) == 0) {
    const std::string arg = background.substr(7);
    std::size_t k = 0;
    try {
      k = static_cast<std::size_t>(std::stoul(arg));
    } catch (...) {
      throw ValidationError("--background kmeans:<k> needs a positive integer, got \"" + arg +
                            "\"");
    }
    std::vector<double> flat;
    flat.reserve(data.rows.size() * model.input_dim());
    for (const auto& r : data.rows) flat.insert(flat.end(), r.begin(), r.end());
    backgrounds = bench::kmeans_centers(
        MatrixView{flat.data(), data.rows.size(), model.input_dim()}, k, seed);
  } else {
    background_is_file = true;
    backgrounds = load_features(background, model.input_dim()).rows;
  }
  if (backgrounds.empty()) throw ValidationError("background set is empty");

  const std::size_t effective_samples =
      samples > 0 ? samples : (method == Method::Ime ? 4000 : 2000);

  std::vector<std::vector<double>> phi_rows(data.rows.size());
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const Sample& fg = data.rows[r];
    switch (method) {
      case Method::Exact:
        phi_rows[r] = oracle::shapley_background(model, fg, backgrounds, output_index).phi;
        break;
      case Method::Rescale:
        phi_rows[r] =
            engine::explain(model, fg, backgrounds, engine::rescale_config(), output_index).phi;
        break;
      case Method::RevealCancel:
        phi_rows[r] = engine::explain(model, fg, backgrounds,
                                      engine::reveal_cancel_config(engine::ThresholdMode::Zero),
                                      output_index)
                          .phi;
        break;
      case Method::RevealCancelMean:
        phi_rows[r] = engine::explain(model, fg, backgrounds,
                                      engine::reveal_cancel_config(engine::ThresholdMode::Mean),
                                      output_index)
                          .phi;
        break;
      case Method::KernelShap: {
        samplers::SamplerConfig c{effective_samples, mix_seed(seed, r),
                                  samplers::EstimatorKind::Kernel};
        phi_rows[r] = samplers::kernel_shap(model, fg, backgrounds, c, output_index).phi;
        break;
      }
      case Method::Ime: {
        samplers::SamplerConfig c{effective_samples, mix_seed(seed, r),
                                  samplers::EstimatorKind::Ime};
        phi_rows[r] = samplers::ime_shap(model, fg, backgrounds, c, output_index).phi;
        break;
      }
      case Method::Random:
        throw ValidationError("--method random is only an ablation baseline; use cmd ablate");
    }
  }

  csv::write_file(out_path, data.names, phi_rows);

  RunManifest manifest;
  manifest.command = "explain";
  manifest.seed = seed;
  manifest.config = {{"model", model_path},
                     {"data", data_path},
                     {"background", background},
                     {"method", method_name},
                     {"samples", std::to_string(effective_samples)},
                     {"output_index", std::to_string(output_index)},
                     {"out", out_path}};
  manifest.input_digests.emplace_back(model_path, fnv1a64_hex(model_path));
  manifest.input_digests.emplace_back(data_path, fnv1a64_hex(data_path));
  if (background_is_file) {
    manifest.input_digests.emplace_back(background, fnv1a64_hex(background));
  }
  manifest.outputs = {out_path};
  write_manifest_sidecar(manifest, out_path);
  return 0;
}

int run_ablate(const std::string& model_path, const std::string& data_path,
               const std::string& attr_path, const std::string& means_path,
               const std::string& train_path, const std::string& label,
               const std::string& out_path, std::uint64_t seed) {
  const ComputeGraph model = load_model_file(model_path);
  const csv::Table data = csv::read_file(data_path);
  const FeatureTable features = load_features(data_path, model.input_dim());
  const std::vector<double> y = label_column(data, data_path);

  const csv::Table attr_table = csv::read_file(attr_path);
  if (attr_table.cols() != model.input_dim()) {
    throw DimensionMismatchError(attr_path + ": expected " +
                                 std::to_string(model.input_dim()) + " columns, got " +
                                 std::to_string(attr_table.cols()));
  }
  if (attr_table.rows.size() != features.rows.size()) {
    throw DimensionMismatchError(attr_path + ": " + std::to_string(attr_table.rows.size()) +
                                 " attribution rows vs " +
                                 std::to_string(features.rows.size()) + " data rows in " +
                                 data_path);
  }

  std::vector<double> means;
  if (!means_path.empty()) {
    const csv::Table m = csv::read_file(means_path);
    if (m.cols() != model.input_dim() || m.rows.size() != 1) {
      throw DimensionMismatchError(means_path + ": expected a single row of " +
                                   std::to_string(model.input_dim()) + " means");
    }
    means = m.rows[0];
  } else if (!train_path.empty()) {
    const FeatureTable train = load_features(train_path, model.input_dim());
    std::vector<double> flat;
    for (const auto& r : train.rows) flat.insert(flat.end(), r.begin(), r.end());
    means = bench::column_means(MatrixView{flat.data(), train.rows.size(), model.input_dim()});
  } else {
    throw ValidationError("ablate: provide --means or --train for the imputation means");
  }

  std::vector<double> flat;
  for (const auto& r : features.rows) flat.insert(flat.end(), r.begin(), r.end());
  const MatrixView x_test{flat.data(), features.rows.size(), model.input_dim()};

  std::string effective_label = label;
  std::vector<std::vector<double>> attributions = attr_table.rows;
  if (label == "random") {
    attributions = bench::random_attributions(features.rows.size(), model.input_dim(), seed);
  }

  const bench::AblationCurve curve = bench::keep_absolute_mask(
      bench::graph_forward_fn(model), attributions, x_test, y, means, effective_label);

  std::vector<std::vector<double>> rows;
  rows.reserve(curve.features_kept.size());
  for (std::size_t i = 0; i < curve.features_kept.size(); ++i) {
    rows.push_back({static_cast<double>(curve.features_kept[i]), curve.r_squared[i]});
  }
  csv::write_file(out_path, {"features_kept", "r_squared"}, rows);

  RunManifest manifest;
  manifest.command = "ablate";
  manifest.seed = seed;
  manifest.config = {{"model", model_path}, {"data", data_path},   {"attr", attr_path},
                     {"means", means_path}, {"train", train_path}, {"label", label},
                     {"out", out_path}};
  manifest.input_digests.emplace_back(model_path, fnv1a64_hex(model_path));
  manifest.input_digests.emplace_back(data_path, fnv1a64_hex(data_path));
  manifest.input_digests.emplace_back(attr_path, fnv1a64_hex(attr_path));
  if (!means_path.empty()) manifest.input_digests.emplace_back(means_path, fnv1a64_hex(means_path));
  if (!train_path.empty()) manifest.input_digests.emplace_back(train_path, fnv1a64_hex(train_path));
  manifest.outputs = {out_path};
  write_manifest_sidecar(manifest, out_path);
  return 0;
}

int run_gen(std::size_t n, std::size_t d, double rho, double noise_var, std::uint64_t seed,
            const std::string& out_path) {
  bench::CorrgroupsSpec spec;
  spec.n = n;
  spec.d = d;
  spec.rho = rho;
  spec.noise_var = noise_var;
  spec.seed = seed;
  const bench::Dataset data = bench::gen_corrgroups(spec);

  std::vector<std::string> header;
  header.reserve(d + 1);
  for (std::size_t c = 0; c < d; ++c) header.push_back("x" + std::to_string(c));
  header.push_back("y");
  std::vector<std::vector<double>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    rows[r].assign(data.row(r).begin(), data.row(r).end());
    rows[r].push_back(data.y[r]);
  }
  csv::write_file(out_path, header, rows);

  RunManifest manifest;
  manifest.command = "gen";
  manifest.seed = seed;
  manifest.config = {{"n", std::to_string(n)},
                     {"d", std::to_string(d)},
                     {"rho", csv::format_double(rho)},
                     {"noise_var", csv::format_double(noise_var)},
                     {"out", out_path}};
  manifest.outputs = {out_path};
  write_manifest_sidecar(manifest, out_path);
  return 0;
}

int run_toy(std::uint64_t seed, const std::string& out_path) {
  const bench::ToyStudyResult result = bench::toy_revealcancel_study(seed);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t rule = 0; rule < result.rules.size(); ++rule) {
    const std::string name(to_string(result.rules[rule]));
    for (std::size_t s = 0; s < result.mae[rule].size(); ++s) {
      rows.push_back({name, std::to_string(s), csv::format_double(result.mae[rule][s])});
    }
    rows.push_back({name, "aggregate", csv::format_double(result.aggregate_mae[rule])});
  }
  csv::write_file_raw(out_path, {"rule", "sample", "mae"}, rows);

  RunManifest manifest;
  manifest.command = "toy";
  manifest.seed = seed;
  manifest.config = {{"out", out_path}};
  manifest.outputs = {out_path};
  write_manifest_sidecar(manifest, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapprop: SHAP values for compute-graph models by layer-wise propagation"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: SHAPPROP_THREADS or all cores)");

  // explain
  auto* explain = app.add_subcommand("explain", "Per-sample attributions for a model over a dataset");
  std::string model_path, data_path, background, method = "rescale", out_path;
  std::uint64_t seed = 0;
  std::size_t samples = 0, output_index = 0;
  explain->add_option("--model", model_path, "Model JSON file")->required();
  explain->add_option("--data", data_path, "Samples to explain (CSV)")->required();
  explain->add_option("--background", background, "Background CSV or kmeans:<k>")->required();
  explain
      ->add_option("--method", method,
                   "rescale | revealcancel | revealcancel-mean | exact | kernel | ime")
      ->required();
  explain->add_option("--out", out_path, "Output attribution CSV")->required();
  explain->add_option("--seed", seed, "Random seed (samplers, kmeans)");
  explain->add_option("--samples", samples, "Sampler evaluations (default kernel 2000, ime 4000)");
  explain->add_option("--output-index", output_index, "Output coordinate to explain");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Keep-absolute (mask) ablation curve");
  std::string attr_path, means_path, train_path, label;
  ablate->add_option("--model", model_path, "Model JSON file")->required();
  ablate->add_option("--data", data_path, "Test CSV with trailing y column")->required();
  ablate->add_option("--attr", attr_path, "Attribution CSV from explain")->required();
  ablate->add_option("--means", means_path, "Single-row CSV of imputation means");
  ablate->add_option("--train", train_path, "Training CSV to compute means from");
  ablate->add_option("--label", label, "Method tag for the curve (\"random\" replaces the attributions)");
  ablate->add_option("--out", out_path, "Output curve CSV")->required();
  ablate->add_option("--seed", seed, "Seed for the random baseline");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate the correlated-triples dataset");
  std::size_t gen_n = 1000, gen_d = 60;
  double rho = 0.99, noise_var = 1e-4;
  gen->add_option("--n", gen_n, "Rows");
  gen->add_option("--d", gen_d, "Features (multiple of 3)");
  gen->add_option("--rho", rho, "Within-triple correlation");
  gen->add_option("--noise-var", noise_var, "Label noise variance");
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out_path, "Output CSV")->required();

  // toy
  auto* toy = app.add_subcommand("toy", "RevealCancel threshold study on the ReLU toy model");
  toy->add_option("--seed", seed, "Random seed");
  toy->add_option("--out", out_path, "Output error-table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  if (threads > 0) shapprop::set_thread_limit(threads);

  try {
    if (*explain) {
      return run_explain(model_path, data_path, background, method, out_path, seed, samples,
                         output_index);
    }
    if (*ablate) {
      return run_ablate(model_path, data_path, attr_path, means_path, train_path, label,
                        out_path, seed);
    }
    if (*gen) {
      return run_gen(gen_n, gen_d, rho, noise_var, seed, out_path);
    }
    if (*toy) {
      return run_toy(seed, out_path);
    }
  } catch (const shapprop::DimensionMismatchError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const shapprop::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
