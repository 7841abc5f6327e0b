#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ivbound/uncertainty.hpp"

namespace ivbound {

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  Interval ate;
  Interval tau;
  Interval ur_ate;  // strong bootstrap region
  Interval ur_tau;
  bool invalid = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

inline std::vector<double> default_xi_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(300.0 + 20.0 * i);
  return g;
}

inline std::vector<double> default_delta00_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(-60.0 + 8.0 * i);
  return g;
}

namespace detail {

// One sweep row. The bootstrap uses the same seed at every grid value, so
// the resample index streams are identical across the grid and only the
// sensitivity parameter moves.
inline SweepRow sweep_row(const ObservationalDataset& ds, BoundAssumption which,
                          const AssumptionParams& params, const std::string& parameter,
                          double value, int K, std::uint64_t seed, double level) {
  SweepRow row;
  row.parameter = parameter;
  row.value = value;

  const LogisticFit propensity = fit_propensity(ds);
  const StrataEstimates se = estimate_strata(ds);
  Interval ate;
  if (which == BoundAssumption::A) {
    validate_params_A(params);
    ate.lo = b_hat(se, params.xi0, 0.0);
    ate.hi = b_hat(se, 0.0, params.xi1);
  } else if (which == BoundAssumption::B) {
    validate_params_B(params);
    ate = detail::bounds_B_ate(se, params);
  } else {
    validate_params_B(params);
    const ConditionalStrataModel cond = fit_conditional_models(ds);
    ate = detail::bounds_Bprime_ate(ds, se, cond, params);
  }
  row.ate = ate;
  row.tau.lo = tau_hat(ds, propensity, ate.hi);
  row.tau.hi = tau_hat(ds, propensity, ate.lo);
  row.invalid = !(ate.lo <= ate.hi);
  if (row.invalid) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.ur_ate = {nan, nan};
    row.ur_tau = {nan, nan};
    return row;
  }
  const BoundBootstrap bb = bootstrap_bounds(ds, which, params, K, seed);
  row.ur_ate = ur_strong_bootstrap(bb.ate, level).interval;
  row.ur_tau = ur_strong_bootstrap(bb.tau, level).interval;
  return row;
}

}  // namespace detail

// Sweep the cap xi0 = xi1 = value for the nonnegative-outcome bound.
inline void check_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) fail(ErrorCode::InvalidArgument, std::string(name) + ": empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      fail(ErrorCode::InvalidArgument,
           std::string(name) + ": grid values must be strictly increasing");
    }
  }
}

inline SweepResult sweep_xi(const ObservationalDataset& ds,
                            const std::vector<double>& grid, int K, std::uint64_t seed,
                            double level, const AssumptionParams& base = {}) {
  check_grid(grid, "sweep_xi");
  check_level(level);
  SweepResult out;
  for (double v : grid) {
    AssumptionParams p = base;
    p.xi0 = v;
    p.xi1 = v;
    out.rows.push_back(
        detail::sweep_row(ds, BoundAssumption::A, p, "xi", v, K, seed, level));
  }
  return out;
}

// Sweep delta00 for the ordered-means bound (marginal or conditional).
inline SweepResult sweep_delta00(const ObservationalDataset& ds,
                                 const std::vector<double>& grid, int K,
                                 std::uint64_t seed, double level, BoundAssumption which,
                                 const AssumptionParams& base = {}) {
  check_grid(grid, "sweep_delta00");
  if (which == BoundAssumption::A) {
    fail(ErrorCode::InvalidArgument, "sweep_delta00: use assumption B or Bprime");
  }
  check_level(level);
  SweepResult out;
  for (double v : grid) {
    AssumptionParams p = base;
    p.delta00 = v;
    out.rows.push_back(detail::sweep_row(ds, which, p, "delta00", v, K, seed, level));
  }
  return out;
}

inline void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
  out << "parameter,value,ate_lo,ate_hi,tau_lo,tau_hi,"
         "ur_ate_lo,ur_ate_hi,ur_tau_lo,ur_tau_hi,invalid_flag\n";
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << ',' << buf;
  };
  for (const auto& r : sweep.rows) {
    out << r.parameter;
    put(r.value);
    put(r.ate.lo);
    put(r.ate.hi);
    put(r.tau.lo);
    put(r.tau.hi);
    put(r.ur_ate.lo);
    put(r.ur_ate.hi);
    put(r.ur_tau.lo);
    put(r.ur_tau.hi);
    out << ',' << (r.invalid ? 1 : 0) << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path);
}

}  // namespace ivbound
