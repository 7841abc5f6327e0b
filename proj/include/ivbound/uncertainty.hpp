#pragma once

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ivbound/rng.hpp"
#include "ivbound/strata.hpp"

namespace ivbound {

enum class BoundAssumption { A, B, Bprime };

inline const char* assumption_name(BoundAssumption a) {
  switch (a) {
    case BoundAssumption::A: return "A";
    case BoundAssumption::B: return "B";
    case BoundAssumption::Bprime: return "Bprime";
  }
  return "?";
}

// Full-sample bound evaluation: refits propensity, strata cells and (for the
// conditional variant) the working models. Also the per-replicate procedure.
inline BoundPair evaluate_bound(const ObservationalDataset& ds, BoundAssumption which,
                                const AssumptionParams& params) {
  const LogisticFit propensity = fit_propensity(ds);
  const StrataEstimates se = estimate_strata(ds);
  switch (which) {
    case BoundAssumption::A:
      return bounds_A(ds, se, propensity, params);
    case BoundAssumption::B:
      return bounds_B(ds, se, propensity, params);
    case BoundAssumption::Bprime: {
      const ConditionalStrataModel cond = fit_conditional_models(ds);
      return bounds_Bprime(ds, se, propensity, cond, params);
    }
  }
  fail(ErrorCode::InvalidArgument, "evaluate_bound: unknown assumption");
}

struct EndpointPair {
  int replicate = 0;  // 1-based index into the requested stream
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapEnsemble {
  std::vector<EndpointPair> replicates;  // successful replicates only
  std::uint64_t seed = 0;
  int requested = 0;
  int failures = 0;
};

struct BoundBootstrap {
  BootstrapEnsemble ate;
  BootstrapEnsemble tau;
};

// Resample stratified by the instrument: arm sizes are fixed, records drawn
// with replacement within each Z arm. Replicate k uses substream (seed, k),
// so dropped replicates never shift later streams.
inline std::vector<int> resample_indices(const std::vector<int>& z1_rows,
                                         const std::vector<int>& z0_rows,
                                         SplitMix64& rng) {
  std::vector<int> idx;
  idx.reserve(z1_rows.size() + z0_rows.size());
  for (std::size_t i = 0; i < z1_rows.size(); ++i) {
    idx.push_back(z1_rows[rng.next_below(z1_rows.size())]);
  }
  for (std::size_t i = 0; i < z0_rows.size(); ++i) {
    idx.push_back(z0_rows[rng.next_below(z0_rows.size())]);
  }
  return idx;
}

inline BoundBootstrap bootstrap_pairs(
    const ObservationalDataset& ds,
    const std::function<BoundPair(const ObservationalDataset&)>& procedure, int K,
    std::uint64_t seed) {
  if (K < 1) fail(ErrorCode::InvalidArgument, "bootstrap: K must be positive");
  std::vector<int> z1_rows, z0_rows;
  for (int i = 0; i < ds.n(); ++i) {
    (ds.z(i) == 1.0 ? z1_rows : z0_rows).push_back(i);
  }
  if (z1_rows.empty() || z0_rows.empty()) {
    fail(ErrorCode::EmptyArm, "bootstrap: an instrument arm is empty");
  }

  BoundBootstrap out;
  out.ate.seed = out.tau.seed = seed;
  out.ate.requested = out.tau.requested = K;
  int failures = 0;
  for (int k = 1; k <= K; ++k) {
    SplitMix64 rng = SplitMix64::substream(seed, static_cast<std::uint64_t>(k));
    const std::vector<int> idx = resample_indices(z1_rows, z0_rows, rng);
    try {
      const BoundPair bp = procedure(ds.subset(idx));
      out.ate.replicates.push_back({k, bp.ate.lo, bp.ate.hi});
      out.tau.replicates.push_back({k, bp.tau.lo, bp.tau.hi});
    } catch (const Error&) {
      ++failures;
    }
  }
  out.ate.failures = out.tau.failures = failures;
  if (failures * 20 > K) {
    fail(ErrorCode::TooManyFailures,
         "bootstrap: " + std::to_string(failures) + " of " + std::to_string(K) +
             " replicates failed (ceiling 5%)");
  }
  return out;
}

inline BoundBootstrap bootstrap_bounds(const ObservationalDataset& ds,
                                       BoundAssumption which,
                                       const AssumptionParams& params, int K,
                                       std::uint64_t seed) {
  return bootstrap_pairs(
      ds, [&](const ObservationalDataset& rep) { return evaluate_bound(rep, which, params); },
      K, seed);
}

inline double endpoint_sd(const BootstrapEnsemble& ens, bool upper) {
  const std::size_t m = ens.replicates.size();
  if (m < 2) {
    fail(ErrorCode::InsufficientReplicates,
         "endpoint_sd: need at least 2 successful replicates");
  }
  double mean = 0.0;
  for (const auto& r : ens.replicates) mean += upper ? r.hi : r.lo;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (const auto& r : ens.replicates) {
    const double d = (upper ? r.hi : r.lo) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(m - 1));
}

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorCode::InvalidArgument, "normal_quantile: p must be in (0,1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

struct URResult {
  Interval interval;
  IntervalKind kind = IntervalKind::UrPointwiseCan;
  double level = 0.95;
  std::optional<double> se_lo;
  std::optional<double> se_hi;
  bool approximate = false;
};

inline void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    fail(ErrorCode::InvalidArgument, "level must be in (0,1)");
  }
}

// Pointwise region [L - c se(L), U + c se(U)] with c = Phi^-1(level). The
// one-sided critical value is an approximation that degrades when the bound
// is narrow relative to its endpoint noise; such regions are flagged.
inline URResult ur_pointwise_can(Interval bound, double se_lo, double se_hi,
                                 double level) {
  check_level(level);
  if (se_lo < 0.0 || se_hi < 0.0) {
    fail(ErrorCode::InvalidArgument, "standard errors must be nonnegative");
  }
  const double c = normal_quantile(level);
  URResult ur;
  ur.kind = IntervalKind::UrPointwiseCan;
  ur.level = level;
  ur.interval.lo = bound.lo - c * se_lo;
  ur.interval.hi = bound.hi + c * se_hi;
  ur.se_lo = se_lo;
  ur.se_hi = se_hi;
  ur.approximate = bound.width() < 2.0 * std::max(se_lo, se_hi);
  return ur;
}

// Strong region with the two-sided critical value Phi^-1(1 - theta/2).
inline URResult ur_strong_can(Interval bound, double se_lo, double se_hi, double level) {
  check_level(level);
  if (se_lo < 0.0 || se_hi < 0.0) {
    fail(ErrorCode::InvalidArgument, "standard errors must be nonnegative");
  }
  const double c = normal_quantile(1.0 - (1.0 - level) / 2.0);
  URResult ur;
  ur.kind = IntervalKind::UrStrongCan;
  ur.level = level;
  ur.interval.lo = bound.lo - c * se_lo;
  ur.interval.hi = bound.hi + c * se_hi;
  ur.se_lo = se_lo;
  ur.se_hi = se_hi;
  return ur;
}

// Shortest interval covering at least a (1-theta) share of replicate bound
// intervals, ties broken by tail balance and then by the smaller left
// endpoint. Candidates are replicate endpoint values.
inline URResult ur_strong_bootstrap(const BootstrapEnsemble& ens, double level) {
  check_level(level);
  const int m = static_cast<int>(ens.replicates.size());
  const double theta = 1.0 - level;
  const int k_min = static_cast<int>(std::ceil(1.0 / theta - 1e-9));
  if (m < k_min) {
    fail(ErrorCode::InsufficientReplicates,
         "ur_strong_bootstrap: " + std::to_string(m) + " replicates, need at least " +
             std::to_string(k_min) + " for level " + std::to_string(level));
  }
  const int required = static_cast<int>(
      std::ceil(static_cast<double>(m) * (1.0 - theta) - 1e-9));

  std::vector<double> lows, highs;
  lows.reserve(ens.replicates.size());
  highs.reserve(ens.replicates.size());
  for (const auto& r : ens.replicates) {
    lows.push_back(r.lo);
    highs.push_back(r.hi);
  }
  std::vector<double> lo_sorted = lows, hi_sorted = highs;
  std::sort(lo_sorted.begin(), lo_sorted.end());
  std::sort(hi_sorted.begin(), hi_sorted.end());
  std::vector<double> lo_cand = lo_sorted, hi_cand = hi_sorted;
  lo_cand.erase(std::unique(lo_cand.begin(), lo_cand.end()), lo_cand.end());
  hi_cand.erase(std::unique(hi_cand.begin(), hi_cand.end()), hi_cand.end());

  // replicates sorted by low descending; highs_by_low[i] collects the upper
  // endpoints of replicates whose low >= lo_cand[i] in sorted order
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(ens.replicates.size());
  for (const auto& r : ens.replicates) pairs.push_back({r.lo, r.hi});
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  bool found = false;
  double best_lo = 0.0, best_hi = 0.0, best_width = 0.0;
  int best_balance = 0;

  std::vector<double> active;  // highs of replicates with low >= current candidate
  active.reserve(pairs.size());
  std::size_t next_pair = 0;
  for (auto it = lo_cand.rbegin(); it != lo_cand.rend(); ++it) {
    const double cand_lo = *it;
    while (next_pair < pairs.size() && pairs[next_pair].first >= cand_lo) {
      active.insert(std::upper_bound(active.begin(), active.end(),
                                     pairs[next_pair].second),
                    pairs[next_pair].second);
      ++next_pair;
    }
    if (static_cast<int>(active.size()) < required) continue;
    // smallest candidate high with enough covered replicates
    const double need = active[static_cast<std::size_t>(required - 1)];
    const auto hi_it = std::lower_bound(hi_cand.begin(), hi_cand.end(), need);
    if (hi_it == hi_cand.end()) continue;
    const double cand_hi = *hi_it;
    const double width = cand_hi - cand_lo;
    const int n_lo = static_cast<int>(
        lo_sorted.end() -
        std::lower_bound(lo_sorted.begin(), lo_sorted.end(), cand_lo));
    const int n_hi = static_cast<int>(
        std::upper_bound(hi_sorted.begin(), hi_sorted.end(), cand_hi) -
        hi_sorted.begin());
    const int balance = std::abs(n_lo - n_hi);
    const bool better =
        !found || width < best_width ||
        (width == best_width &&
         (balance < best_balance || (balance == best_balance && cand_lo < best_lo)));
    if (better) {
      found = true;
      best_lo = cand_lo;
      best_hi = cand_hi;
      best_width = width;
      best_balance = balance;
    }
  }
  if (!found) {
    fail(ErrorCode::InsufficientReplicates,
         "ur_strong_bootstrap: no candidate interval reaches the coverage target");
  }
  URResult ur;
  ur.kind = IntervalKind::UrStrongBts;
  ur.level = level;
  ur.interval.lo = best_lo;
  ur.interval.hi = best_hi;
  return ur;
}

}  // namespace ivbound
