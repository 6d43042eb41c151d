#ifndef TBC_EXPERIMENTS_HPP
#define TBC_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tbc/analytic.hpp"
#include "tbc/functionals.hpp"
#include "tbc/sampling.hpp"
#include "tbc/stats.hpp"

namespace tbc {

/// Aggregated replications at one window size.
struct SizeBlock {
  double s = 0.0;
  std::size_t N = 0;
  double window_volume = 0.0;
  std::vector<double> values;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> standardized;
  double ks = 0.0;
  double w1 = 0.0;
  double lag1_autocorrelation = 0.0;
  std::optional<double> expected_value;
  double variance_lower = 0.0;
  double variance_upper = 0.0;
  double rate_bound = 0.0;
  std::size_t indeterminate_replications = 0;
};

struct CltReport {
  FunctionalKind kind = FunctionalKind::Volume;
  ModelParams params;
  std::uint64_t seed = 0;
  std::size_t M = 0;
  std::vector<SizeBlock> sizes;
  /// Least-squares slope of log W1 against log lambda_{d+1}(W_s).
  std::optional<double> w1_slope;
  BoundReport constants;

  std::string model() const { return params.stacked() ? "sTBC" : "TBC"; }
};

struct CampaignOptions {
  std::size_t M = 100000;
  unsigned threads = 0;  // 0: hardware concurrency
  ConstantOptions constants{};
  KwiseOptions kwise{};
};

/// Fills the moment and distance statistics of a block from its raw values.
inline void summarize_block(SizeBlock& b) {
  require(b.values.size() >= 2, "summarize_block: need N >= 2");
  b.N = b.values.size();
  b.mean = mean_of(b.values);
  b.variance = variance_of(b.values);
  const double scale = std::max(1.0, std::abs(b.mean));
  if (!(b.variance > 1e-24 * scale * scale))
    throw DegenerateDistribution("replicated values have zero variance at s = " + std::to_string(b.s));
  b.standardized = standardize(b.values);
  b.ks = ks_distance_to_normal(b.standardized);
  b.w1 = empirical_w1_to_normal(b.standardized);
  b.lag1_autocorrelation = lag1_autocorrelation(b.values);
}

inline void attach_constants(SizeBlock& b, FunctionalKind kind, const BoundReport& c, const ModelParams& p) {
  b.window_volume = p.window_volume();
  if (kind == FunctionalKind::Volume) b.expected_value = expected_covered_volume(p);
  b.variance_lower = c.c1 * b.window_volume;
  b.variance_upper = (1.0 + c.c2) * b.window_volume;
  b.rate_bound = c.wasserstein_c / std::sqrt(b.window_volume);
}

inline double w1_loglog_slope(const std::vector<SizeBlock>& blocks) {
  std::vector<double> x, y;
  for (const SizeBlock& b : blocks) {
    x.push_back(std::log(b.window_volume));
    y.push_back(std::log(std::max(b.w1, 1e-300)));
  }
  return regression_slope(x, y);
}

namespace detail {

/// Runs f(i) for i in [0, n) on a small pool; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Replications of one functional at one window size. The sample and the
/// integration stream of replication j depend only on (seed, j).
inline std::vector<FunctionalResult> replicate(const ModelParams& p, FunctionalKind kind, std::size_t N,
                                               std::uint64_t seed, const CampaignOptions& opt) {
  std::vector<FunctionalResult> out(N);
  detail::parallel_for(N, opt.threads, [&](std::size_t j) {
    const CylinderSample sample = sample_tbc(p, seed, j);
    EstimatorSettings st;
    st.M = opt.M;
    st.mc_seed = seed;
    st.mc_replication = j;
    st.kwise = opt.kwise;
    out[j] = evaluate_functional(kind, sample, st);
  });
  return out;
}

/// Seed of the replications at the i-th window size.
inline std::uint64_t size_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, index); }

inline CltReport run_campaign(const ModelParams& params, FunctionalKind kind, const std::vector<double>& sizes,
                              std::size_t N, std::uint64_t seed, const CampaignOptions& opt = {}) {
  params.validate();
  require(!sizes.empty(), "run_campaign: no window sizes");
  require(N >= 2, "run_campaign: need N >= 2");
  require(std::is_sorted(sizes.begin(), sizes.end()) &&
              std::adjacent_find(sizes.begin(), sizes.end()) == sizes.end(),
          "run_campaign: sizes must be strictly increasing");
  if (kind != FunctionalKind::Volume)
    for (double s : sizes) detail::require_window_hypothesis(params.with_window(s));

  CltReport rep;
  rep.kind = kind;
  rep.params = params.with_window(sizes.back());
  rep.seed = seed;
  rep.M = kind == FunctionalKind::Volume ? opt.M : 0;
  // Constants other than the window volume do not depend on s.
  rep.constants = clt_constants(kind, rep.params, opt.constants);

  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const ModelParams p = params.with_window(sizes[i]);
    const std::vector<FunctionalResult> res = replicate(p, kind, N, size_seed(seed, i), opt);
    SizeBlock b;
    b.s = sizes[i];
    for (const FunctionalResult& f : res) {
      b.values.push_back(f.value);
      if (f.meta.indeterminate) ++b.indeterminate_replications;
    }
    summarize_block(b);
    attach_constants(b, kind, rep.constants, p);
    rep.sizes.push_back(std::move(b));
  }
  if (rep.sizes.size() >= 2) rep.w1_slope = w1_loglog_slope(rep.sizes);
  return rep;
}

/// True for each size whose 99% chi-square interval for the variance meets
/// [c1 lambda, (1 + c2) lambda].
inline std::vector<bool> variance_bracket_check(const CltReport& report, double level = 0.99) {
  std::vector<bool> out;
  for (const SizeBlock& b : report.sizes) {
    const auto [lo, hi] = variance_confidence_interval(b.values, level);
    out.push_back(hi >= b.variance_lower && lo <= b.variance_upper);
  }
  return out;
}

}  // namespace tbc

#endif  // TBC_EXPERIMENTS_HPP
