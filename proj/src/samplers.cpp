#include "shapprop/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_map>

#include "shapprop/engine.hpp"
#include "shapprop/numeric.hpp"
#include "shapprop/parallel.hpp"
#include "shapprop/rng.hpp"
#include "shapprop/simd/kernels.hpp"

namespace shapprop::samplers {

namespace {

constexpr std::size_t kMaxMaskFeatures = 63;
constexpr int kMaxRegressionRetries = 3;
constexpr std::size_t kExhaustivePermutationLimit = 8;  // 8! = 40320 draws per background

void check_samples(const ComputeGraph& g, std::span<const double> fg,
                   const std::vector<Sample>& bgs) {
  if (bgs.empty()) throw ValidationError("sampler: background set must not be empty");
  if (fg.size() != g.input_dim()) {
    throw DimensionMismatchError("sampler: foreground length does not match input_dim " +
                                 std::to_string(g.input_dim()));
  }
  if (!all_finite(fg)) throw ValidationError("sampler: foreground must be finite");
  for (const Sample& b : bgs) {
    if (b.size() != g.input_dim()) {
      throw DimensionMismatchError("sampler: background length does not match input_dim " +
                                   std::to_string(g.input_dim()));
    }
    if (!all_finite(b)) throw ValidationError("sampler: backgrounds must be finite");
  }
}

double factorial_or_zero(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

// v(S) = mean_b f(X(fg, b, S)) for each requested mask, parallel over masks.
std::vector<double> coalition_values(const ComputeGraph& g, std::span<const double> fg,
                                     const std::vector<Sample>& bgs,
                                     std::span<const std::uint64_t> masks,
                                     std::size_t output_index) {
  const std::size_t n = g.input_dim();
  std::vector<double> v(masks.size());
  parallel_blocks(masks.size(), [&](std::size_t begin, std::size_t end) {
    Evaluator ev(g);
    Sample hybrid(n);
    for (std::size_t m = begin; m < end; ++m) {
      NeumaierSum acc;
      for (const Sample& bg : bgs) {
        kernels::blend_bits(fg.data(), bg.data(), masks[m], hybrid.data(), n);
        acc.add(ev.output(hybrid, output_index));
      }
      v[m] = acc.value() / static_cast<double>(bgs.size());
    }
  });
  return v;
}

struct CoalitionSet {
  std::vector<std::uint64_t> masks;
  std::vector<double> weights;
};

CoalitionSet enumerate_all_coalitions(std::size_t n) {
  CoalitionSet cs;
  const std::uint64_t total = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t m = 1; m < total; ++m) {
    cs.masks.push_back(m);
    cs.weights.push_back(kernel_shap_weight(static_cast<int>(n),
                                            __builtin_popcountll(m)));
  }
  return cs;
}

CoalitionSet draw_coalitions(std::size_t n, std::size_t n_samples, Rng& rng) {
  // size distribution: kernel weight times subset count, (n-1)/(s(n-s))
  std::vector<double> cdf(n - 1);
  double total = 0.0;
  for (std::size_t s = 1; s < n; ++s) {
    total += 1.0 / (static_cast<double>(s) * static_cast<double>(n - s));
    cdf[s - 1] = total;
  }

  CoalitionSet cs;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::uint32_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = static_cast<std::uint32_t>(i);

  for (std::size_t draw = 0; draw < n_samples; ++draw) {
    const double u = rng.next_unit() * total;
    const std::size_t s =
        1 + static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    // uniform subset of size s via partial Fisher-Yates
    std::uint64_t mask = 0;
    for (std::size_t k = 0; k < s; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.next_below(n - k));
      std::swap(indices[k], indices[j]);
      mask |= std::uint64_t{1} << indices[k];
    }
    auto [it, inserted] = slot.emplace(mask, cs.masks.size());
    if (inserted) {
      cs.masks.push_back(mask);
      cs.weights.push_back(1.0);
    } else {
      cs.weights[it->second] += 1.0;
    }
  }
  return cs;
}

// Weighted least squares for phi with the efficiency constraint eliminated
// through the last feature. Throws SingularSystemError when the normal
// equations degenerate (some feature never varied across draws).
std::vector<double> solve_kernel_regression(const CoalitionSet& cs, std::span<const double> v,
                                            std::size_t n, double v_empty, double v_full) {
  const double delta = v_full - v_empty;
  const std::size_t p = n - 1;
  std::vector<double> a(p * p, 0.0);
  std::vector<double> rhs(p, 0.0);
  std::vector<double> x(p);
  for (std::size_t row = 0; row < cs.masks.size(); ++row) {
    const std::uint64_t mask = cs.masks[row];
    const double z_last = (mask >> (n - 1)) & 1u ? 1.0 : 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      x[i] = (((mask >> i) & 1u) ? 1.0 : 0.0) - z_last;
    }
    const double w = cs.weights[row];
    const double y = v[row] - v_empty - z_last * delta;
    for (std::size_t i = 0; i < p; ++i) {
      if (x[i] == 0.0) continue;
      const double wxi = w * x[i];
      for (std::size_t j = i; j < p; ++j) a[i * p + j] += wxi * x[j];
      rhs[i] += wxi * y;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) a[i * p + j] = a[j * p + i];
  }
  solve_dense(a, rhs, p);

  std::vector<double> phi(n);
  double head = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    phi[i] = rhs[i];
    head += rhs[i];
  }
  phi[n - 1] = delta - head;  // efficiency holds exactly by construction
  return phi;
}

}  // namespace

void SamplerConfig::validate(std::size_t input_dim) const {
  if (estimator == EstimatorKind::Kernel && n_samples < 2 * input_dim + 2) {
    throw ValidationError("kernel sampler: n_samples must be at least 2*input_dim+2 = " +
                          std::to_string(2 * input_dim + 2) + ", got " +
                          std::to_string(n_samples));
  }
  if (n_samples == 0) throw ValidationError("sampler: n_samples must be positive");
}

Attribution kernel_shap(const ComputeGraph& g, std::span<const double> foreground,
                        const std::vector<Sample>& backgrounds, const SamplerConfig& config,
                        std::size_t output_index) {
  const std::size_t n = g.input_dim();
  if (n > kMaxMaskFeatures) {
    throw ValidationError("kernel sampler supports at most " +
                          std::to_string(kMaxMaskFeatures) + " features");
  }
  if (n < 2) throw ValidationError("kernel sampler needs at least 2 features");
  config.validate(n);
  check_samples(g, foreground, backgrounds);

  // v(empty) and v(full)
  std::vector<double> fb(backgrounds.size());
  parallel_for(backgrounds.size(), [&](std::size_t b) {
    Evaluator ev(g);
    fb[b] = ev.output(backgrounds[b], output_index);
  });
  const double v_empty = mean(fb);
  const double v_full = Evaluator(g).output(foreground, output_index);

  const bool enumerable =
      n <= 25 && config.n_samples >= (std::size_t{1} << n) - 2;

  for (int attempt = 0;; ++attempt) {
    CoalitionSet cs;
    if (enumerable) {
      cs = enumerate_all_coalitions(n);
    } else {
      Rng rng(attempt == 0 ? config.seed
                           : mix_seed(config.seed, static_cast<std::uint64_t>(attempt)));
      cs = draw_coalitions(n, config.n_samples, rng);
    }
    const auto v = coalition_values(g, foreground, backgrounds, cs.masks, output_index);
    try {
      Attribution a;
      a.method = Method::KernelShap;
      a.phi = solve_kernel_regression(cs, v, n, v_empty, v_full);
      return a;
    } catch (const SingularSystemError&) {
      if (enumerable || attempt >= kMaxRegressionRetries) {
        throw SingularSystemError(
            "kernel sampler: regression system stayed singular after " +
            std::to_string(attempt + 1) + " draws; increase n_samples");
      }
      // redraw fresh coalitions from a derived seed
      std::fprintf(stderr,
                   "shapprop: kernel sampler regression was singular, redrawing (attempt %d)\n",
                   attempt + 1);
    }
  }
}

Attribution ime_shap(const ComputeGraph& g, std::span<const double> foreground,
                     const std::vector<Sample>& backgrounds, const SamplerConfig& config,
                     std::size_t output_index) {
  const std::size_t n = g.input_dim();
  config.validate(n);
  check_samples(g, foreground, backgrounds);
  const std::size_t n_bg = backgrounds.size();
  if (config.n_samples < n_bg) {
    throw ValidationError("ime sampler: n_samples must cover every background (need >= " +
                          std::to_string(n_bg) + ")");
  }

  // Round-robin background assignment keeps the draw stream a prefix of any
  // longer run with the same seed.
  const std::size_t per_bg_base = config.n_samples / n_bg;
  const bool exhaustive =
      n <= kExhaustivePermutationLimit &&
      per_bg_base >= static_cast<std::size_t>(factorial_or_zero(n));

  struct Draw {
    std::vector<std::uint32_t> order;
    std::size_t background;
  };
  std::vector<Draw> draws;
  if (exhaustive) {
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    do {
      for (std::size_t b = 0; b < n_bg; ++b) draws.push_back(Draw{perm, b});
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    Rng rng(config.seed);
    draws.reserve(config.n_samples);
    for (std::size_t k = 0; k < config.n_samples; ++k) {
      draws.push_back(Draw{rng.permutation(static_cast<std::uint32_t>(n)), k % n_bg});
    }
  }

  std::vector<double> bg_value(n_bg);
  parallel_for(n_bg, [&](std::size_t b) {
    Evaluator ev(g);
    bg_value[b] = ev.output(backgrounds[b], output_index);
  });

  // marginal contributions per draw, evaluated in parallel into slots
  std::vector<std::vector<double>> marginals(draws.size());
  parallel_blocks(draws.size(), [&](std::size_t begin, std::size_t end) {
    Evaluator ev(g);
    Sample cur(n);
    for (std::size_t d = begin; d < end; ++d) {
      const Draw& draw = draws[d];
      const Sample& bg = backgrounds[draw.background];
      std::copy(bg.begin(), bg.end(), cur.begin());
      double prev = bg_value[draw.background];
      auto& m = marginals[d];
      m.assign(n, 0.0);
      for (std::uint32_t feat : draw.order) {
        cur[feat] = foreground[feat];
        const double next = ev.output(cur, output_index);
        m[feat] = next - prev;
        prev = next;
      }
    }
  });

  // per-background means first, then an equally weighted average over
  // backgrounds: efficiency telescopes exactly per background
  std::vector<NeumaierSum> acc(n_bg * n);
  std::vector<std::size_t> count(n_bg, 0);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const std::size_t b = draws[d].background;
    ++count[b];
    for (std::size_t i = 0; i < n; ++i) acc[b * n + i].add(marginals[d][i]);
  }

  Attribution a;
  a.method = Method::Ime;
  a.phi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    NeumaierSum over_bg;
    for (std::size_t b = 0; b < n_bg; ++b) {
      over_bg.add(acc[b * n + i].value() / static_cast<double>(count[b]));
    }
    a.phi[i] = over_bg.value() / static_cast<double>(n_bg);
  }
  return a;
}

VarianceReport variance_probe(ProbeMethod method, const ComputeGraph& g,
                              const ExplainInstance& instance,
                              std::vector<std::size_t> sample_grid,
                              std::span<const std::uint64_t> repeat_seeds) {
  if (repeat_seeds.size() < 2) {
    throw ValidationError("variance probe: need at least 2 repeats");
  }
  if (sample_grid.empty()) throw ValidationError("variance probe: empty sample grid");

  VarianceReport report;
  report.sample_grid = std::move(sample_grid);
  report.stat_rank = std::min<std::size_t>(10, g.input_dim());
  report.rank_truncated = g.input_dim() < 10;

  const std::size_t repeats = repeat_seeds.size();
  for (std::size_t count : report.sample_grid) {
    std::vector<std::vector<double>> runs(repeats);
    std::vector<double> stats(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      Attribution a;
      switch (method) {
        case ProbeMethod::Kernel: {
          SamplerConfig c{count, repeat_seeds[r], EstimatorKind::Kernel};
          a = kernel_shap(g, instance.foreground, instance.backgrounds, c,
                          instance.output_index);
          break;
        }
        case ProbeMethod::Ime: {
          SamplerConfig c{count, repeat_seeds[r], EstimatorKind::Ime};
          a = ime_shap(g, instance.foreground, instance.backgrounds, c,
                       instance.output_index);
          break;
        }
        case ProbeMethod::DeepshapRescale:
          // deterministic: seed and sample count play no role
          a = engine::explain(g, instance.foreground, instance.backgrounds,
                              engine::rescale_config(), instance.output_index);
          break;
      }
      std::vector<double> mag(a.phi.size());
      for (std::size_t i = 0; i < a.phi.size(); ++i) mag[i] = std::abs(a.phi[i]);
      std::sort(mag.begin(), mag.end(), std::greater<>{});
      stats[r] = mag[report.stat_rank - 1];
      runs[r] = std::move(a.phi);
    }
    report.stddev.push_back(sample_stddev(stats));
    report.ranked_stat.push_back(std::move(stats));
    report.attributions.push_back(std::move(runs));
  }
  return report;
}

}  // namespace shapprop::samplers
