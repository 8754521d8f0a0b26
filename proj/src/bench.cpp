#include "shapprop/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shapprop/oracle.hpp"
#include "shapprop/parallel.hpp"
#include "shapprop/rng.hpp"

namespace shapprop::bench {

void CorrgroupsSpec::validate() const {
  if (n == 0) throw ValidationError("corrgroups: n must be positive");
  if (d == 0 || d % 3 != 0) {
    throw ValidationError("corrgroups: d must be a positive multiple of 3, got " +
                          std::to_string(d));
  }
  if (!(rho >= 0.0) || rho >= 1.0) {
    throw ValidationError("corrgroups: rho must be in [0, 1), got " + std::to_string(rho));
  }
  if (!(noise_var >= 0.0)) throw ValidationError("corrgroups: noise_var must be >= 0");
}

Dataset gen_corrgroups(const CorrgroupsSpec& spec) {
  spec.validate();

  // Cholesky factor of the 3x3 equicorrelated block [[1,r,r],[r,1,r],[r,r,1]]
  const double r = spec.rho;
  const double l22 = std::sqrt(1.0 - r * r);
  const double l32 = r > 0.0 ? (r - r * r) / l22 : 0.0;
  const double rad = 1.0 - r * r - l32 * l32;
  if (!(l22 > 0.0) || !(rad > 0.0)) {
    throw ValidationError("corrgroups: correlation block is not positive definite at rho = " +
                          std::to_string(r));
  }
  const double l33 = std::sqrt(rad);

  const std::size_t n = spec.n;
  const std::size_t d = spec.d;
  Rng rng(spec.seed);
  Dataset data;
  data.n = n;
  data.d = d;
  data.x.resize(n * d);
  data.y.resize(n);

  // raw standard-normal draws plus per-row label noise, one fixed stream order
  std::vector<double> noise(n);
  const double noise_sd = std::sqrt(spec.noise_var);
  for (std::size_t row = 0; row < n; ++row) {
    double* z = data.x.data() + row * d;
    for (std::size_t c = 0; c < d; ++c) z[c] = rng.next_normal();
    noise[row] = noise_sd * rng.next_normal();
  }

  // target correlation: block-diagonal triples, Cholesky per block
  std::vector<double> target_l(d * d, 0.0);
  for (std::size_t g = 0; g < d; g += 3) {
    target_l[g * d + g] = 1.0;
    target_l[(g + 1) * d + g] = r;
    target_l[(g + 1) * d + g + 1] = l22;
    target_l[(g + 2) * d + g] = r;
    target_l[(g + 2) * d + g + 1] = l32;
    target_l[(g + 2) * d + g + 2] = l33;
  }

  // Empirical moment matching: center the draws, whiten their sample
  // covariance, then color with the target factor. The realized correlation
  // matrix then equals the target exactly (every seed), which is what a
  // correlation benchmark needs; rows are jointly Gaussian-derived but no
  // longer independent. Falls back to plain coloring when n <= d (sample
  // covariance singular).
  bool matched = false;
  if (n > d) {
    for (std::size_t c = 0; c < d; ++c) {
      NeumaierSum s;
      for (std::size_t row = 0; row < n; ++row) s.add(data.x[row * d + c]);
      const double m = s.value() / static_cast<double>(n);
      for (std::size_t row = 0; row < n; ++row) data.x[row * d + c] -= m;
    }
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t row = 0; row < n; ++row) {
      const double* z = data.x.data() + row * d;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) cov[i * d + j] += z[i] * z[j];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        cov[i * d + j] *= inv_n;
        cov[j * d + i] = cov[i * d + j];
      }
    }
    try {
      const auto sample_l = cholesky_lower(cov, d);
      const auto sample_inv = lower_triangular_inverse(sample_l, d);
      // transform = target_l * sample_l^-1 (lower triangular)
      std::vector<double> transform(d * d, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          double s = 0.0;
          for (std::size_t k = j; k <= i; ++k) s += target_l[i * d + k] * sample_inv[k * d + j];
          transform[i * d + j] = s;
        }
      }
      std::vector<double> row_buf(d);
      for (std::size_t row = 0; row < n; ++row) {
        double* z = data.x.data() + row * d;
        for (std::size_t i = 0; i < d; ++i) {
          double s = 0.0;
          for (std::size_t k = 0; k <= i; ++k) s += transform[i * d + k] * z[k];
          row_buf[i] = s;
        }
        std::copy(row_buf.begin(), row_buf.end(), z);
      }
      matched = true;
    } catch (const SingularSystemError&) {
      // degenerate draw; fall through to plain coloring
    }
  }
  if (!matched) {
    std::vector<double> row_buf(3);
    for (std::size_t row = 0; row < n; ++row) {
      double* z = data.x.data() + row * d;
      for (std::size_t g = 0; g < d; g += 3) {
        row_buf[0] = z[g];
        row_buf[1] = r * z[g] + l22 * z[g + 1];
        row_buf[2] = r * z[g] + l32 * z[g + 1] + l33 * z[g + 2];
        z[g] = row_buf[0];
        z[g + 1] = row_buf[1];
        z[g + 2] = row_buf[2];
      }
    }
  }

  for (std::size_t row = 0; row < n; ++row) {
    const double* x = data.x.data() + row * d;
    NeumaierSum label;
    for (std::size_t i = 0; i < d; i += 3) label.add(x[i]);
    data.y[row] = label.value() + noise[row];
  }
  return data;
}

std::vector<double> column_means(MatrixView m) {
  std::vector<double> means(m.cols, 0.0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    NeumaierSum s;
    for (std::size_t r = 0; r < m.rows; ++r) s.add(m.data[r * m.cols + c]);
    means[c] = m.rows ? s.value() / static_cast<double>(m.rows) : 0.0;
  }
  return means;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<Sample> kmeans_centers(MatrixView data, std::size_t k, std::uint64_t seed,
                                   std::size_t iterations) {
  if (k == 0 || k > data.rows) {
    throw ValidationError("kmeans: k must be in [1, rows], got " + std::to_string(k));
  }
  Rng rng(seed);
  std::vector<Sample> centers;
  centers.reserve(k);

  // k-means++ seeding
  {
    const std::size_t first = static_cast<std::size_t>(rng.next_below(data.rows));
    centers.emplace_back(data.row(first).begin(), data.row(first).end());
  }
  std::vector<double> dist(data.rows);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) {
      double best = sq_dist(data.row(r), centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c) {
        best = std::min(best, sq_dist(data.row(r), centers[c]));
      }
      dist[r] = best;
      total += best;
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double u = rng.next_unit() * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < data.rows; ++r) {
        acc += dist[r];
        if (acc >= u) {
          chosen = r;
          break;
        }
      }
    } else {
      chosen = static_cast<std::size_t>(rng.next_below(data.rows));
    }
    centers.emplace_back(data.row(chosen).begin(), data.row(chosen).end());
  }

  // Lloyd iterations; an emptied cluster keeps its previous center
  std::vector<std::size_t> assign(data.rows, 0);
  for (std::size_t it = 0; it < iterations; ++it) {
    bool moved = false;
    for (std::size_t r = 0; r < data.rows; ++r) {
      std::size_t best = 0;
      double best_d = sq_dist(data.row(r), centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(data.row(r), centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[r] != best) moved = true;
      assign[r] = best;
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(data.cols, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < data.rows; ++r) {
      ++counts[assign[r]];
      const auto row = data.row(r);
      for (std::size_t c = 0; c < data.cols; ++c) sums[assign[r]][c] += row[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < data.cols; ++j) {
        centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
    if (!moved) break;
  }
  return centers;
}

double r_squared(std::span<const double> prediction, std::span<const double> truth) {
  if (prediction.size() != truth.size() || truth.empty()) {
    throw DimensionMismatchError("r_squared: prediction/truth length mismatch");
  }
  const double y_bar = mean(truth);
  NeumaierSum ss_res, ss_tot;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res.add((truth[i] - prediction[i]) * (truth[i] - prediction[i]));
    ss_tot.add((truth[i] - y_bar) * (truth[i] - y_bar));
  }
  if (ss_tot.value() <= 0.0) return 0.0;
  return 1.0 - ss_res.value() / ss_tot.value();
}

double AblationCurve::area() const {
  if (features_kept.size() < 2) return 0.0;
  const double span = static_cast<double>(features_kept.back() - features_kept.front());
  double a = 0.0;
  for (std::size_t i = 1; i < features_kept.size(); ++i) {
    const double w = static_cast<double>(features_kept[i] - features_kept[i - 1]);
    a += 0.5 * w * (r_squared[i] + r_squared[i - 1]);
  }
  return a / span;
}

AblationCurve keep_absolute_mask(const ForwardFn& model,
                                 const std::vector<std::vector<double>>& attributions,
                                 MatrixView x_test, std::span<const double> y_test,
                                 std::span<const double> train_means,
                                 std::string method_label) {
  const std::size_t rows = x_test.rows;
  const std::size_t d = x_test.cols;
  if (attributions.size() != rows || y_test.size() != rows) {
    throw DimensionMismatchError("keep_absolute_mask: attribution/data row count mismatch (" +
                                 std::to_string(attributions.size()) + " attributions, " +
                                 std::to_string(rows) + " samples, " +
                                 std::to_string(y_test.size()) + " labels)");
  }
  if (train_means.size() != d) {
    throw DimensionMismatchError("keep_absolute_mask: means length != feature count");
  }
  for (const auto& a : attributions) {
    if (a.size() != d) {
      throw DimensionMismatchError("keep_absolute_mask: attribution width != feature count");
    }
  }

  // per-sample unmask order: descending |phi|, ties to the lower index
  std::vector<std::vector<std::uint32_t>> order(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto& o = order[r];
    o.resize(d);
    std::iota(o.begin(), o.end(), 0u);
    const auto& phi = attributions[r];
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
      return std::abs(phi[a]) > std::abs(phi[b]);
    });
  }

  // predictions[k][r] = model output with the top-k features of row r kept.
  // The forward fn is copied per worker block, so a stateful fn (the usual
  // Evaluator-by-value lambda) needs to be copyable, not thread-safe.
  std::vector<std::vector<double>> predictions(d + 1, std::vector<double>(rows));
  parallel_blocks(rows, [&](std::size_t begin, std::size_t end) {
    ForwardFn worker_model = model;
    Sample masked(d);
    for (std::size_t r = begin; r < end; ++r) {
      std::copy(train_means.begin(), train_means.end(), masked.begin());
      predictions[0][r] = worker_model(masked);
      const auto row = x_test.row(r);
      for (std::size_t k = 1; k <= d; ++k) {
        const std::uint32_t feat = order[r][k - 1];
        masked[feat] = row[feat];
        predictions[k][r] = worker_model(masked);
      }
    }
  });

  AblationCurve curve;
  curve.method = std::move(method_label);
  curve.features_kept.resize(d + 1);
  curve.r_squared.resize(d + 1);
  for (std::size_t k = 0; k <= d; ++k) {
    curve.features_kept[k] = k;
    curve.r_squared[k] = shapprop::bench::r_squared(predictions[k], y_test);
  }
  return curve;
}

std::vector<std::vector<double>> random_attributions(std::size_t rows, std::size_t d,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(rows, std::vector<double>(d));
  for (auto& row : out) {
    for (double& v : row) v = rng.next_uniform(-1.0, 1.0);
  }
  return out;
}

ToyStudyResult toy_revealcancel_study(std::uint64_t seed, std::size_t n_draws) {
  // ReLU(x1 + x2 + x3 + x4 + 100)
  std::vector<Node> nodes{
      Node{"x", InputSpec{4}},
      Node{"sum", LinearSpec{1, 4, {1.0, 1.0, 1.0, 1.0}, {100.0}}},
      Node{"relu", ActivationSpec{ActKind::Relu}},
  };
  std::vector<Edge> edges{{"x", "sum", 0}, {"sum", "relu", 0}};
  const ComputeGraph graph(std::move(nodes), std::move(edges), "relu", 4);
  const Sample background(4, 0.0);

  ToyStudyResult result;
  result.rules = {Method::Rescale, Method::RevealCancel, Method::RevealCancelMean};
  const engine::RuleConfig configs[3] = {
      engine::rescale_config(),
      engine::reveal_cancel_config(engine::ThresholdMode::Zero),
      engine::reveal_cancel_config(engine::ThresholdMode::Mean),
  };

  Rng rng(seed);
  result.foregrounds.reserve(n_draws);
  for (std::size_t s = 0; s < n_draws; ++s) {
    Sample fg(4);
    for (double& v : fg) v = static_cast<double>(rng.next_int(-1000, 1000));
    result.foregrounds.push_back(std::move(fg));
  }

  result.mae.assign(3, std::vector<double>(n_draws, 0.0));
  for (std::size_t s = 0; s < n_draws; ++s) {
    const Sample& fg = result.foregrounds[s];
    const auto exact = oracle::shapley_single_reference(graph, fg, background).phi;
    for (std::size_t rule = 0; rule < 3; ++rule) {
      const auto est = engine::explain_single(graph, fg, background, configs[rule]).phi;
      NeumaierSum err;
      for (std::size_t i = 0; i < 4; ++i) err.add(std::abs(est[i] - exact[i]));
      result.mae[rule][s] = err.value() / 4.0;
    }
  }
  result.aggregate_mae.resize(3);
  for (std::size_t rule = 0; rule < 3; ++rule) {
    result.aggregate_mae[rule] = mean(result.mae[rule]);
  }
  return result;
}

std::vector<double> ridge_fit(MatrixView x, std::span<const double> y, double lambda) {
  if (x.rows != y.size()) throw DimensionMismatchError("ridge_fit: row count mismatch");
  const std::size_t d = x.cols;
  std::vector<double> a(d * d, 0.0);
  std::vector<double> b(d, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      if (row[i] == 0.0) continue;
      for (std::size_t j = i; j < d; ++j) a[i * d + j] += row[i] * row[j];
      b[i] += row[i] * y[r];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) a[i * d + j] = a[j * d + i];
    a[i * d + i] += lambda;
  }
  solve_dense(a, b, d);
  return b;
}

namespace {

struct CartBuilder {
  MatrixView x;
  std::span<const double> target;
  std::size_t max_depth;
  std::size_t min_leaf;
  Tree tree;

  std::int32_t build(std::vector<std::uint32_t>& rows, std::size_t depth) {
    double sum = 0.0;
    for (std::uint32_t r : rows) sum += target[r];
    const double node_mean = sum / static_cast<double>(rows.size());

    const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, node_mean});
    if (depth >= max_depth || rows.size() < 2 * min_leaf) return id;

    // best variance-reduction split
    double best_gain = 1e-12;
    std::int32_t best_feat = -1;
    double best_thr = 0.0;
    double parent_sse = 0.0;
    for (std::uint32_t r : rows) {
      const double d = target[r] - node_mean;
      parent_sse += d * d;
    }

    std::vector<std::pair<double, std::uint32_t>> sorted(rows.size());
    for (std::size_t f = 0; f < x.cols; ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sorted[i] = {x.row(rows[i])[f], rows[i]};
      }
      std::sort(sorted.begin(), sorted.end());
      double left_sum = 0.0, left_sq = 0.0;
      double right_sum = 0.0, right_sq = 0.0;
      for (const auto& [v, r] : sorted) {
        right_sum += target[r];
        right_sq += target[r] * target[r];
      }
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double t = target[sorted[i].second];
        left_sum += t;
        left_sq += t * t;
        right_sum -= t;
        right_sq -= t * t;
        if (sorted[i].first == sorted[i + 1].first) continue;  // no usable boundary
        const std::size_t nl = i + 1, nr = sorted.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                           (right_sq - right_sum * right_sum / static_cast<double>(nr));
        const double gain = parent_sse - sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = static_cast<std::int32_t>(f);
          best_thr = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    if (best_feat < 0) return id;

    std::vector<std::uint32_t> left, right;
    for (std::uint32_t r : rows) {
      (x.row(r)[static_cast<std::size_t>(best_feat)] <= best_thr ? left : right).push_back(r);
    }
    if (left.empty() || right.empty()) return id;

    tree.nodes[static_cast<std::size_t>(id)].feature = best_feat;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best_thr;
    tree.nodes[static_cast<std::size_t>(id)].value = 0.0;
    const std::int32_t l = build(left, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    const std::int32_t rgt = build(right, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].right = rgt;
    return id;
  }
};

}  // namespace

Tree fit_cart(MatrixView x, std::span<const double> target, std::size_t max_depth,
              std::size_t min_leaf) {
  if (x.rows != target.size() || x.rows == 0) {
    throw DimensionMismatchError("fit_cart: row count mismatch");
  }
  CartBuilder builder{x, target, max_depth, std::max<std::size_t>(1, min_leaf), {}};
  std::vector<std::uint32_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), 0u);
  builder.build(rows, 0);
  return std::move(builder.tree);
}

TreeEnsembleSpec fit_boosted_trees(MatrixView x, std::span<const double> y,
                                   std::size_t n_trees, std::size_t max_depth,
                                   double learning_rate, std::size_t min_leaf) {
  TreeEnsembleSpec ensemble;
  ensemble.in_dim = x.cols;

  // constant base predictor as a leaf-only tree
  const double base = mean(y);
  ensemble.trees.push_back(Tree{{TreeNode{-1, 0.0, -1, -1, base}}});

  std::vector<double> residual(y.begin(), y.end());
  for (double& r : residual) r -= base;

  for (std::size_t t = 0; t < n_trees; ++t) {
    Tree fitted = fit_cart(x, residual, max_depth, min_leaf);
    for (TreeNode& node : fitted.nodes) {
      if (node.is_leaf()) node.value *= learning_rate;
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
      residual[r] -= fitted.eval(x.row(r));
    }
    ensemble.trees.push_back(std::move(fitted));
  }
  return ensemble;
}

ComputeGraph fit_stack_model(MatrixView x_train, std::span<const double> y_train,
                             const StackParams& params) {
  const std::size_t d = x_train.cols;
  const std::size_t h = params.hidden;
  if (h == 0) throw ValidationError("fit_stack_model: hidden width must be positive");

  const std::vector<double> ridge = ridge_fit(x_train, y_train, params.ridge_lambda);

  // extractor rows: signed, scaled copies of the ridge direction plus a
  // little noise, so both response signs survive the ReLU
  Rng rng(params.seed);
  LinearSpec lin;
  lin.out_dim = h;
  lin.in_dim = d;
  lin.weights.resize(h * d);
  lin.bias.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    const double scale = sign * (0.6 + 0.8 * rng.next_unit());
    for (std::size_t c = 0; c < d; ++c) {
      lin.weights[j * d + c] = scale * ridge[c] + 0.02 * rng.next_normal();
    }
  }

  // boosted trees on the extractor outputs
  std::vector<double> hidden_feats(x_train.rows * h);
  std::vector<double> pre(h);
  for (std::size_t r = 0; r < x_train.rows; ++r) {
    const auto row = x_train.row(r);
    for (std::size_t j = 0; j < h; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += lin.weights[j * d + c] * row[c];
      pre[j] = s;
      hidden_feats[r * h + j] = s > 0.0 ? s : 0.0;
    }
  }
  TreeEnsembleSpec trees =
      fit_boosted_trees(MatrixView{hidden_feats.data(), x_train.rows, h}, y_train,
                        params.n_trees, params.tree_depth, params.learning_rate,
                        params.min_leaf);

  std::vector<Node> nodes{
      Node{"x", InputSpec{d}},
      Node{"extractor", std::move(lin)},
      Node{"relu", ActivationSpec{ActKind::Relu}},
      Node{"trees", std::move(trees)},
  };
  std::vector<Edge> edges{{"x", "extractor", 0}, {"extractor", "relu", 0}, {"relu", "trees", 0}};
  return ComputeGraph(std::move(nodes), std::move(edges), "trees", d);
}

}  // namespace shapprop::bench
