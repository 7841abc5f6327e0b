#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ivbound/estimators.hpp"

namespace ivbound {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

enum class IntervalKind { BoundEstimate, UrPointwiseCan, UrStrongCan, UrStrongBts };

struct BoundPair {
  Interval ate;
  Interval tau;
};

// Sensitivity parameters. xi0/xi1 cap the unobserved cross-stratum means for
// the plain nonnegative-outcome bound; the deltas relax the ordered-means
// bound. delta00 may be negative; the rest must be nonnegative.
struct AssumptionParams {
  double xi0 = 500.0;
  double xi1 = 500.0;
  double delta11 = 0.0;
  double delta00 = 0.0;
  double delta_y0 = 0.0;
  double delta_trt = 0.0;
};

inline void validate_params_A(const AssumptionParams& p) {
  if (!(p.xi0 >= 0.0) || !(p.xi1 >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "xi0 and xi1 must be nonnegative");
  }
}

inline void validate_params_B(const AssumptionParams& p) {
  if (!(p.delta11 >= 0.0) || !(p.delta_y0 >= 0.0) || !(p.delta_trt >= 0.0)) {
    fail(ErrorCode::InvalidArgument,
         "delta11, delta_y0 and delta_trt must be nonnegative");
  }
  if (!std::isfinite(p.delta00)) {
    fail(ErrorCode::InvalidArgument, "delta00 must be finite");
  }
}

// Identified stratum quantities: shares of never-takers (pi00), compliers
// (pi01) and always-takers (pi11), the observable always-taker treated mean
// mu11(1) = E(Y|A=1,Z=0), the never-taker untreated mean mu00(0) = E(Y|A=0,Z=1),
// and the instrument ratio for the complier effect. The instrumented
// no-defier structure makes these cell statistics; the saturated models of
// the identification argument reduce to exactly these cells.
struct StrataEstimates {
  double pi00 = 0.0;
  double pi01 = 0.0;
  double pi11 = 0.0;
  double mu11_1 = 0.0;
  double mu00_0 = 0.0;
  double beta_iv = 0.0;
};

inline StrataEstimates estimate_strata(const ObservationalDataset& ds) {
  int n_a1z0 = 0, n_a0z1 = 0, nz1 = 0, nz0 = 0;
  double y_a1z0 = 0.0, y_a0z1 = 0.0, a_z1 = 0.0, a_z0 = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.z(i) == 1.0) {
      ++nz1;
      a_z1 += ds.a(i);
      if (ds.a(i) == 0.0) {
        ++n_a0z1;
        y_a0z1 += ds.y(i);
      }
    } else {
      ++nz0;
      a_z0 += ds.a(i);
      if (ds.a(i) == 1.0) {
        ++n_a1z0;
        y_a1z0 += ds.y(i);
      }
    }
  }
  if (nz1 == 0) fail(ErrorCode::EmptyArm, "estimate_strata: no records with Z=1");
  if (nz0 == 0) fail(ErrorCode::EmptyArm, "estimate_strata: no records with Z=0");
  if (n_a1z0 == 0) {
    fail(ErrorCode::EmptyCell, "estimate_strata: cell (A=1, Z=0) is empty");
  }
  if (n_a0z1 == 0) {
    fail(ErrorCode::EmptyCell, "estimate_strata: cell (A=0, Z=1) is empty");
  }
  StrataEstimates se;
  se.pi11 = a_z0 / nz0;
  se.pi00 = 1.0 - a_z1 / nz1;
  se.pi01 = 1.0 - se.pi11 - se.pi00;
  se.mu11_1 = y_a1z0 / n_a1z0;
  se.mu00_0 = y_a0z1 / n_a0z1;
  se.beta_iv = iv_estimate(ds).value;
  if (se.pi01 <= 0.0) {
    fail(ErrorCode::WeakInstrument,
         "estimate_strata: complier share is nonpositive (" +
             std::to_string(se.pi01) + ")");
  }
  return se;
}

// Marginal effect as a function of the two unobservable stratum means
// mu11(0) and mu00(1); affine with slopes (-pi11, +pi00).
inline double b_hat(const StrataEstimates& se, double mu11_0, double mu00_1) {
  return se.pi01 * se.beta_iv + se.pi11 * (se.mu11_1 - mu11_0) +
         se.pi00 * (mu00_1 - se.mu00_0);
}

namespace detail {

// tau endpoints pair anti-monotonically with the marginal-effect endpoints
inline BoundPair with_tau(const ObservationalDataset& ds, const LogisticFit& propensity,
                          Interval ate) {
  BoundPair bp;
  bp.ate = ate;
  bp.tau.lo = tau_hat(ds, propensity, ate.hi);
  bp.tau.hi = tau_hat(ds, propensity, ate.lo);
  return bp;
}

}  // namespace detail

// Bounds under nonnegative outcomes capped by xi: mu11(0) in [0, xi0],
// mu00(1) in [0, xi1].
inline BoundPair bounds_A(const ObservationalDataset& ds, const StrataEstimates& se,
                          const LogisticFit& propensity, const AssumptionParams& params) {
  validate_params_A(params);
  Interval ate;
  ate.lo = b_hat(se, params.xi0, 0.0);
  ate.hi = b_hat(se, 0.0, params.xi1);
  return detail::with_tau(ds, propensity, ate);
}

namespace detail {

inline Interval bounds_B_ate(const StrataEstimates& se, const AssumptionParams& p) {
  const double c0 = std::min(se.mu11_1 - p.delta11, se.mu00_0 + p.delta_y0);
  const double c1 = se.mu11_1 + se.mu00_0 - p.delta_trt;
  Interval ate;
  ate.lo = b_hat(se, c0, se.mu00_0 + p.delta00);
  ate.hi = b_hat(se, 0.0, c1);
  return ate;
}

}  // namespace detail

// Bounds under ordered stratum means with delta relaxations.
inline BoundPair bounds_B(const ObservationalDataset& ds, const StrataEstimates& se,
                          const LogisticFit& propensity, const AssumptionParams& params) {
  validate_params_B(params);
  const Interval ate = detail::bounds_B_ate(se, params);
  if (ate.lo > ate.hi) {
    fail(ErrorCode::InvalidBound, "bounds_B: lower endpoint " + std::to_string(ate.lo) +
                                      " exceeds upper endpoint " + std::to_string(ate.hi));
  }
  return detail::with_tau(ds, propensity, ate);
}

// Covariate-conditional working models: logistic A on (1, Z, V) and linear Y
// on (1, Z, A, V), no interactions. Zero-variance covariate columns are
// dropped so a constant V degenerates to the marginal models.
struct ConditionalStrataModel {
  LogisticFit a_model;
  LinearFit y_model;
  std::vector<int> kept_cols;
};

inline ConditionalStrataModel fit_conditional_models(const ObservationalDataset& ds) {
  if (ds.p() < 1) {
    fail(ErrorCode::InvalidArgument,
         "fit_conditional_models: dataset has no covariates");
  }
  ConditionalStrataModel m;
  for (int j = 0; j < ds.p(); ++j) {
    const double first = ds.v(0, j);
    bool constant = true;
    for (int i = 1; i < ds.n(); ++i) {
      if (ds.v(i, j) != first) {
        constant = false;
        break;
      }
    }
    if (!constant) m.kept_cols.push_back(j);
  }
  const int pk = static_cast<int>(m.kept_cols.size());
  Eigen::MatrixXd xa(ds.n(), 2 + pk);
  xa.col(0).setOnes();
  xa.col(1) = ds.z;
  Eigen::MatrixXd xy(ds.n(), 3 + pk);
  xy.col(0).setOnes();
  xy.col(1) = ds.z;
  xy.col(2) = ds.a;
  for (int j = 0; j < pk; ++j) {
    xa.col(2 + j) = ds.v.col(m.kept_cols[static_cast<std::size_t>(j)]);
    xy.col(3 + j) = ds.v.col(m.kept_cols[static_cast<std::size_t>(j)]);
  }
  m.a_model = fit_logistic(xa, ds.a);
  m.y_model = fit_linear(xy, ds.y);
  return m;
}

namespace detail {

inline Interval bounds_Bprime_ate(const ObservationalDataset& ds,
                                  const StrataEstimates& se,
                                  const ConditionalStrataModel& cond,
                                  const AssumptionParams& params) {
  const int pk = static_cast<int>(cond.kept_cols.size());
  Eigen::VectorXd xa(2 + pk), xy(3 + pk);
  double lower_sum = 0.0, upper_sum = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < pk; ++j) {
      const double vj = ds.v(i, cond.kept_cols[static_cast<std::size_t>(j)]);
      xa(2 + j) = vj;
      xy(3 + j) = vj;
    }
    xa(0) = 1.0;
    xy(0) = 1.0;

    xy(1) = 0.0;  // Z=0, A=1: always-taker treated mean given V
    xy(2) = 1.0;
    const double ey1_p11 = xy.dot(cond.y_model.coef);
    xy(1) = 1.0;  // Z=1, A=0: never-taker untreated mean given V
    xy(2) = 0.0;
    const double ey0_p00 = xy.dot(cond.y_model.coef);

    xa(1) = 0.0;
    const double p11 = predict_prob(cond.a_model, xa);
    xa(1) = 1.0;
    const double p00 = 1.0 - predict_prob(cond.a_model, xa);

    const double c0 = std::min(ey1_p11 - params.delta11, ey0_p00 + params.delta_y0);
    const double c1 = ey1_p11 + ey0_p00 - params.delta_trt;
    const double c2 = ey0_p00 + params.delta00;
    lower_sum += (ey1_p11 - c0) * p11 + (c2 - ey0_p00) * p00;
    upper_sum += (ey1_p11 - 0.0) * p11 + (c1 - ey0_p00) * p00;
  }
  Interval ate;
  ate.lo = se.pi01 * se.beta_iv + lower_sum / ds.n();
  ate.hi = se.pi01 * se.beta_iv + upper_sum / ds.n();
  return ate;
}

}  // namespace detail

// Covariate-conditional bounds: the two unobservables are replaced by
// record-level caps built from the working-model predictions, then averaged
// over the empirical covariate distribution.
inline BoundPair bounds_Bprime(const ObservationalDataset& ds, const StrataEstimates& se,
                               const LogisticFit& propensity,
                               const ConditionalStrataModel& cond,
                               const AssumptionParams& params) {
  validate_params_B(params);
  const Interval ate = detail::bounds_Bprime_ate(ds, se, cond, params);
  if (ate.lo > ate.hi) {
    fail(ErrorCode::InvalidBound, "bounds_Bprime: lower endpoint " +
                                      std::to_string(ate.lo) + " exceeds upper endpoint " +
                                      std::to_string(ate.hi));
  }
  return detail::with_tau(ds, propensity, ate);
}

}  // namespace ivbound
