// Acceptance suite: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Each criterion is self-contained with pinned seeds and
// tolerances so a run is reproducible bit for bit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "shapprop/bench.hpp"
#include "shapprop/engine.hpp"
#include "shapprop/oracle.hpp"
#include "shapprop/samplers.hpp"
#include "shapprop/treeshap.hpp"
#include "testutil.hpp"

using namespace shapprop;
using testutil::max_abs_diff;
using testutil::sum;

namespace {

struct Criterion {
  int number;
  const char* description;
  std::function<bool(std::string&)> run;
};

double output_of(const ComputeGraph& g, std::span<const double> x) {
  return forward(g, x).output(g);
}

double local_accuracy_gap(const ComputeGraph& g, std::span<const double> fg,
                          const std::vector<Sample>& bgs, std::span<const double> phi) {
  double expect = output_of(g, fg);
  double mean_b = 0.0;
  for (const auto& bg : bgs) mean_b += output_of(g, bg);
  expect -= mean_b / static_cast<double>(bgs.size());
  return std::abs(sum(phi) - expect);
}

// 1. local accuracy on 500 random graphs x 3 rules x background sizes {1, 5}
bool criterion_local_accuracy(std::string& detail) {
  Rng rng(1001);
  const engine::RuleConfig configs[3] = {
      engine::rescale_config(),
      engine::reveal_cancel_config(engine::ThresholdMode::Zero),
      engine::reveal_cancel_config(engine::ThresholdMode::Mean),
  };
  double worst = 0.0;
  std::size_t cases = 0;
  for (int round = 0; round < 500; ++round) {
    const std::size_t n = 2 + rng.next_below(7);  // <= 8 features
    const ComputeGraph g = testutil::random_mlp(rng, n, 3);
    const Sample fg = testutil::random_sample(rng, n);
    for (const std::size_t n_bg : {std::size_t{1}, std::size_t{5}}) {
      std::vector<Sample> bgs;
      for (std::size_t b = 0; b < n_bg; ++b) bgs.push_back(testutil::random_sample(rng, n));
      for (const auto& config : configs) {
        const auto a = engine::explain(g, fg, bgs, config);
        worst = std::max(worst, local_accuracy_gap(g, fg, bgs, a.phi));
        ++cases;
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu cases, worst |sum(phi) - delta_f| = %.3g", cases, worst);
  detail = buf;
  return worst <= 1e-6;
}

// 2. every rule equals brute force on purely linear graphs
bool criterion_linear_exactness(std::string& detail) {
  Rng rng(1002);
  const engine::RuleConfig configs[3] = {
      engine::rescale_config(),
      engine::reveal_cancel_config(engine::ThresholdMode::Zero),
      engine::reveal_cancel_config(engine::ThresholdMode::Mean),
  };
  double worst = 0.0;
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 2 + rng.next_below(7);
    const ComputeGraph g =
        testutil::random_linear_graph(rng, n, 1 + rng.next_below(3), true);
    const Sample fg = testutil::random_sample(rng, n);
    const Sample bg = testutil::random_sample(rng, n);
    const auto exact = oracle::shapley_single_reference(g, fg, bg);
    for (const auto& config : configs) {
      const auto a = engine::explain_single(g, fg, bg, config);
      worst = std::max(worst, max_abs_diff(a.phi, exact.phi));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "100 graphs, worst |phi - oracle| = %.3g", worst);
  detail = buf;
  return worst <= 1e-9;
}

// 3. averaged single-reference oracle equals direct interventional enumeration
bool criterion_background_identity(std::string& detail) {
  Rng rng(1003);
  double worst = 0.0;
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 2 + rng.next_below(5);  // keep 2^n * |D| cheap
    const ComputeGraph g = testutil::random_mlp(rng, n, 3);
    const Sample fg = testutil::random_sample(rng, n);
    std::vector<Sample> bgs;
    const std::size_t n_bg = 1 + rng.next_below(8);  // <= 8 backgrounds
    for (std::size_t b = 0; b < n_bg; ++b) bgs.push_back(testutil::random_sample(rng, n));
    const auto averaged = oracle::shapley_background(g, fg, bgs);
    const auto direct = oracle::shapley_background_direct(g, fg, bgs);
    worst = std::max(worst, max_abs_diff(averaged.phi, direct.phi));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "100 graphs, worst route disagreement = %.3g", worst);
  detail = buf;
  return worst <= 1e-9;
}

// 4. tree SHAP equals the oracle on 200 random trees; ensembles are additive
bool criterion_treeshap(std::string& detail) {
  Rng rng(1004);
  double worst = 0.0;
  double worst_additivity = 0.0;
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 2 + rng.next_below(7);
    TreeEnsembleSpec ensemble{n, {}};
    const std::size_t n_trees = 1 + rng.next_below(3);
    for (std::size_t t = 0; t < n_trees; ++t) {
      ensemble.trees.push_back(testutil::random_tree(rng, n, 4));
    }
    const Sample fg = testutil::random_sample(rng, n, -2.0, 2.0);
    const Sample bg = testutil::random_sample(rng, n, -2.0, 2.0);
    const auto phi = treeshap::tree_shap_single_reference(ensemble, fg, bg);

    std::vector<Node> nodes{Node{"x", InputSpec{n}}, Node{"t", ensemble}};
    std::vector<Edge> edges{{"x", "t", 0}};
    const ComputeGraph g(std::move(nodes), std::move(edges), "t", n);
    const auto exact = oracle::shapley_single_reference(g, fg, bg);
    worst = std::max(worst, max_abs_diff(phi, exact.phi));

    std::vector<double> summed(n, 0.0);
    for (const Tree& t : ensemble.trees) {
      const auto part = treeshap::tree_shap_single_reference(t, fg, bg, n);
      for (std::size_t i = 0; i < n; ++i) summed[i] += part[i];
    }
    worst_additivity = std::max(worst_additivity, max_abs_diff(phi, summed));
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "200 trees, worst |phi - oracle| = %.3g, additivity gap = %.3g",
                worst, worst_additivity);
  detail = buf;
  return worst <= 1e-9 && worst_additivity == 0.0;
}

// 5. toy threshold study: RevealCancel^Mean < Rescale strictly and <= RevealCancel(0)
bool criterion_toy_study(std::string& detail) {
  bool ok = true;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto result = bench::toy_revealcancel_study(seed);
    const double rescale = result.aggregate_mae[0];
    const double zero = result.aggregate_mae[1];
    const double mean_rule = result.aggregate_mae[2];
    const bool seed_ok = mean_rule < rescale && mean_rule <= zero;
    ok = ok && seed_ok;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s[seed %llu: mean %.2f, zero %.2f, rescale %.2f]",
                  per_seed.empty() ? "" : " ", static_cast<unsigned long long>(seed),
                  mean_rule, zero, rescale);
    per_seed += buf;
  }
  detail = per_seed;
  return ok;
}

// 6. samplers match the oracle at exhaustion and converge with more samples
bool criterion_sampler_convergence(std::string& detail) {
  Rng rng(1006);
  // fixed nonlinear topology so the finite-sample errors are genuinely
  // stochastic (a linear draw would make both estimators exact everywhere)
  std::vector<Node> nodes{Node{"x", InputSpec{6}},
                          Node{"l1", testutil::random_linear(rng, 4, 6)},
                          Node{"a1", ActivationSpec{ActKind::Relu}},
                          Node{"l2", testutil::random_linear(rng, 3, 4)},
                          Node{"a2", ActivationSpec{ActKind::Tanh}},
                          Node{"l3", testutil::random_linear(rng, 1, 3)}};
  std::vector<Edge> edges{
      {"x", "l1", 0}, {"l1", "a1", 0}, {"a1", "l2", 0}, {"l2", "a2", 0}, {"a2", "l3", 0}};
  const ComputeGraph g(std::move(nodes), std::move(edges), "l3", 6);
  const Sample fg = testutil::random_sample(rng, 6);
  std::vector<Sample> bgs;
  for (int b = 0; b < 3; ++b) bgs.push_back(testutil::random_sample(rng, 6));
  const auto exact = oracle::shapley_background(g, fg, bgs).phi;

  samplers::SamplerConfig kernel_full{(std::size_t{1} << 6), 0, samplers::EstimatorKind::Kernel};
  const double kernel_gap =
      max_abs_diff(samplers::kernel_shap(g, fg, bgs, kernel_full).phi, exact);
  samplers::SamplerConfig ime_full{720 * 3, 0, samplers::EstimatorKind::Ime};
  const double ime_gap = max_abs_diff(samplers::ime_shap(g, fg, bgs, ime_full).phi, exact);

  auto mae = [&](const std::vector<double>& phi) {
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) s += std::abs(phi[i] - exact[i]);
    return s / static_cast<double>(phi.size());
  };
  // Per seed the error must not increase across the doubling grid end to
  // end (draws are nested, so larger runs extend smaller ones). Step-by-step
  // chains are reported but not asserted: individual doubling links keep an
  // irreducible ~25% reversal chance even with paired draws.
  const std::size_t grid[4] = {24, 48, 96, 192};
  int kernel_improved = 0, ime_improved = 0;
  std::string chains;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double k_err[4], i_err[4];
    for (int gi = 0; gi < 4; ++gi) {
      samplers::SamplerConfig kc{grid[gi], seed, samplers::EstimatorKind::Kernel};
      samplers::SamplerConfig ic{grid[gi], seed, samplers::EstimatorKind::Ime};
      k_err[gi] = mae(samplers::kernel_shap(g, fg, bgs, kc).phi);
      i_err[gi] = mae(samplers::ime_shap(g, fg, bgs, ic).phi);
    }
    kernel_improved += k_err[3] <= k_err[0] + 1e-12 ? 1 : 0;
    ime_improved += i_err[3] <= i_err[0] + 1e-12 ? 1 : 0;
    char one[96];
    std::snprintf(one, sizeof(one), " [s%llu k %.3f>%.3g i %.3f>%.3f]",
                  static_cast<unsigned long long>(seed), k_err[0], k_err[3], i_err[0],
                  i_err[3]);
    chains += one;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "exhaustive gaps: kernel %.3g, ime %.3g; improved seeds: kernel %d/5, ime %d/5;",
                kernel_gap, ime_gap, kernel_improved, ime_improved);
  detail = buf + chains;
  return kernel_gap <= 1e-6 && ime_gap <= 1e-6 && kernel_improved >= 4 && ime_improved >= 4;
}

// 7. variance probe: deterministic engine at exactly zero, samplers positive
//    and eventually decreasing
bool criterion_variance_probe(std::string& detail) {
  Rng rng(1007);
  const ComputeGraph g = testutil::random_stack(rng, 16, 6, 8, 3);
  ExplainInstance instance;
  instance.foreground = testutil::random_sample(rng, 16);
  for (int b = 0; b < 3; ++b) {
    instance.backgrounds.push_back(testutil::random_sample(rng, 16));
  }
  std::vector<std::uint64_t> seeds(12);
  for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = 40 + r;
  const std::vector<std::size_t> grid{100, 400, 1600, 6400};

  const auto deep = samplers::variance_probe(samplers::ProbeMethod::DeepshapRescale, g,
                                             instance, grid, seeds);
  bool deep_zero = true;
  for (double sd : deep.stddev) deep_zero = deep_zero && sd == 0.0;

  const auto kernel =
      samplers::variance_probe(samplers::ProbeMethod::Kernel, g, instance, grid, seeds);
  const auto ime =
      samplers::variance_probe(samplers::ProbeMethod::Ime, g, instance, grid, seeds);
  bool samplers_positive = true;
  for (double sd : kernel.stddev) samplers_positive = samplers_positive && sd > 0.0;
  for (double sd : ime.stddev) samplers_positive = samplers_positive && sd > 0.0;
  const bool decreasing = kernel.stddev.back() < kernel.stddev.front() &&
                          ime.stddev.back() < ime.stddev.front();

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "deepshap sd all zero: %s; kernel sd %.3g->%.3g; ime sd %.3g->%.3g",
                deep_zero ? "yes" : "no", kernel.stddev.front(), kernel.stddev.back(),
                ime.stddev.front(), ime.stddev.back());
  detail = buf;
  return deep_zero && samplers_positive && decreasing;
}

// 8. corrgroups stack: DeepSHAP's mask curve dominates random, and the
//    true-signal features carry more attribution mass
bool criterion_stack_ablation(std::string& detail) {
  bench::CorrgroupsSpec spec;
  spec.seed = 8;
  const auto data = bench::gen_corrgroups(spec);

  // 750/250 train/test split
  const std::size_t n_train = 750;
  const std::size_t n_test = data.n - n_train;
  const MatrixView x_train{data.x.data(), n_train, data.d};
  const std::vector<double> y_train(data.y.begin(), data.y.begin() + n_train);
  const MatrixView x_test{data.x.data() + n_train * data.d, n_test, data.d};
  const std::vector<double> y_test(data.y.begin() + n_train, data.y.end());

  bench::StackParams params;
  params.seed = 80;
  const ComputeGraph stack = bench::fit_stack_model(x_train, y_train, params);

  const auto backgrounds = bench::kmeans_centers(x_train, 20, 81);
  const auto means = bench::column_means(x_train);

  std::vector<std::vector<double>> deep_attr(n_test);
  for (std::size_t r = 0; r < n_test; ++r) {
    deep_attr[r] =
        engine::explain(stack, x_test.row(r), backgrounds, engine::rescale_config()).phi;
  }
  const auto random_attr = bench::random_attributions(n_test, data.d, 82);

  const auto forward_fn = bench::graph_forward_fn(stack);
  const auto deep_curve =
      bench::keep_absolute_mask(forward_fn, deep_attr, x_test, y_test, means, "rescale");
  const auto random_curve =
      bench::keep_absolute_mask(forward_fn, random_attr, x_test, y_test, means, "random");

  // attribution mass on the beta = 1 features vs the correlated passengers
  double signal_mass = 0.0, passenger_mass = 0.0;
  std::size_t signal_count = 0, passenger_count = 0;
  for (const auto& row : deep_attr) {
    for (std::size_t i = 0; i < data.d; ++i) {
      if (i % 3 == 0) {
        signal_mass += std::abs(row[i]);
        ++signal_count;
      } else {
        passenger_mass += std::abs(row[i]);
        ++passenger_count;
      }
    }
  }
  signal_mass /= static_cast<double>(signal_count);
  passenger_mass /= static_cast<double>(passenger_count);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "AUC deepshap %.3f vs random %.3f; mean|phi| signal %.3f vs passengers %.3f",
                deep_curve.area(), random_curve.area(), signal_mass, passenger_mass);
  detail = buf;
  return deep_curve.area() > random_curve.area() && signal_mass > passenger_mass;
}

// 9. corrgroups correlation structure at n = 1000
bool criterion_corrgroups(std::string& detail) {
  double worst_within_low = 1.0, worst_within_high = 0.0, worst_cross = 0.0;
  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    bench::CorrgroupsSpec spec;
    spec.seed = seed;
    const auto data = bench::gen_corrgroups(spec);

    // column moments
    std::vector<double> mean_c(data.d, 0.0), sd_c(data.d, 0.0);
    for (std::size_t c = 0; c < data.d; ++c) {
      NeumaierSum s;
      for (std::size_t r = 0; r < data.n; ++r) s.add(data.x[r * data.d + c]);
      mean_c[c] = s.value() / static_cast<double>(data.n);
      NeumaierSum s2;
      for (std::size_t r = 0; r < data.n; ++r) {
        const double d = data.x[r * data.d + c] - mean_c[c];
        s2.add(d * d);
      }
      sd_c[c] = std::sqrt(s2.value());
    }
    auto corr = [&](std::size_t a, std::size_t b) {
      NeumaierSum s;
      for (std::size_t r = 0; r < data.n; ++r) {
        s.add((data.x[r * data.d + a] - mean_c[a]) * (data.x[r * data.d + b] - mean_c[b]));
      }
      return s.value() / (sd_c[a] * sd_c[b]);
    };
    for (std::size_t i = 0; i < data.d; ++i) {
      for (std::size_t j = i + 1; j < data.d; ++j) {
        const double c = corr(i, j);
        if (i / 3 == j / 3) {
          worst_within_low = std::min(worst_within_low, c);
          worst_within_high = std::max(worst_within_high, c);
        } else {
          worst_cross = std::max(worst_cross, std::abs(c));
        }
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "within-triple corr in [%.4f, %.4f], max cross |corr| = %.4f",
                worst_within_low, worst_within_high, worst_cross);
  detail = buf;
  return worst_within_low >= 0.97 && worst_within_high <= 1.0 && worst_cross <= 0.1;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "local accuracy, 500 graphs x 3 rules x {1,5} backgrounds (<= 1e-6)",
       criterion_local_accuracy},
      {2, "oracle equivalence of every rule on linear graphs (<= 1e-9)",
       criterion_linear_exactness},
      {3, "background averaging equals interventional enumeration (<= 1e-9)",
       criterion_background_identity},
      {4, "tree SHAP oracle equivalence and exact ensemble additivity", criterion_treeshap},
      {5, "toy threshold study: Mean < Rescale, Mean <= RevealCancel(0), 5 seeds",
       criterion_toy_study},
      {6, "sampler exactness at exhaustion and 4-point convergence (4/5 seeds)",
       criterion_sampler_convergence},
      {7, "variance probe: deterministic engine at 0, samplers positive-decreasing",
       criterion_variance_probe},
      {8, "corrgroups stack ablation beats random; signal features dominate",
       criterion_stack_ablation},
      {9, "corrgroups correlation structure (within >= 0.97, cross <= 0.1)",
       criterion_corrgroups},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", criterion.number,
                criterion.description, detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
