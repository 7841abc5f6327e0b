#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "ivbound/dataset.hpp"
#include "ivbound/glm.hpp"

namespace ivbound {

constexpr double kDenomTol = 1e-12;  // relative singularity threshold

enum class EstimatorKind { AT, IPW, MIPW, IV };

struct PointEstimate {
  EstimatorKind method = EstimatorKind::AT;
  double value = 0.0;
  double intercept = 0.0;
  std::optional<double> se;
};

inline Eigen::MatrixXd propensity_design(const ObservationalDataset& ds) {
  Eigen::MatrixXd x(ds.n(), 1 + ds.p());
  x.col(0).setOnes();
  if (ds.p() > 0) x.rightCols(ds.p()) = ds.v;
  return x;
}

// Pr(A=1 | V), logistic in (1, V)
inline LogisticFit fit_propensity(const ObservationalDataset& ds) {
  return fit_logistic(propensity_design(ds), ds.a);
}

inline Eigen::VectorXd propensity_scores(const ObservationalDataset& ds,
                                         const LogisticFit& fit) {
  return predict_prob(fit, propensity_design(ds));
}

// W1 = A/e + (1-A)/(1-e); each weight is >= 1 because e is clamped
inline Eigen::VectorXd ipw_weights(const ObservationalDataset& ds,
                                   const Eigen::VectorXd& e) {
  if (e.size() != ds.n()) {
    fail(ErrorCode::DimensionMismatch, "ipw_weights: scores length " +
                                           std::to_string(e.size()) + " vs n " +
                                           std::to_string(ds.n()));
  }
  Eigen::VectorXd w(ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    w(i) = ds.a(i) == 1.0 ? 1.0 / e(i) : 1.0 / (1.0 - e(i));
  }
  return w;
}

namespace detail {

struct ArmSums {
  double w1 = 0.0, w0 = 0.0;    // total weight per treatment arm
  double wy1 = 0.0, wy0 = 0.0;  // weighted outcome sums
  int n1 = 0, n0 = 0;
};

inline ArmSums weighted_arm_sums(const ObservationalDataset& ds,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w) {
  ArmSums s;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.a(i) == 1.0) {
      ++s.n1;
      s.w1 += w(i);
      s.wy1 += w(i) * y(i);
    } else {
      ++s.n0;
      s.w0 += w(i);
      s.wy0 += w(i) * y(i);
    }
  }
  return s;
}

}  // namespace detail

// Unadjusted contrast mean(Y | A=1) - mean(Y | A=0), two-sample se.
inline PointEstimate at_estimate(const ObservationalDataset& ds) {
  const Eigen::VectorXd unit = Eigen::VectorXd::Ones(ds.n());
  const detail::ArmSums s = detail::weighted_arm_sums(ds, ds.y, unit);
  if (s.n1 == 0) fail(ErrorCode::EmptyArm, "at_estimate: no treated records");
  if (s.n0 == 0) fail(ErrorCode::EmptyArm, "at_estimate: no untreated records");
  const double m1 = s.wy1 / s.n1;
  const double m0 = s.wy0 / s.n0;
  double ss1 = 0.0, ss0 = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    const double d = ds.y(i) - (ds.a(i) == 1.0 ? m1 : m0);
    (ds.a(i) == 1.0 ? ss1 : ss0) += d * d;
  }
  const double v1 = s.n1 > 1 ? ss1 / (s.n1 - 1) : 0.0;
  const double v0 = s.n0 > 1 ? ss0 / (s.n0 - 1) : 0.0;
  PointEstimate est;
  est.method = EstimatorKind::AT;
  est.value = m1 - m0;
  est.intercept = m0;
  est.se = std::sqrt(v1 / s.n1 + v0 / s.n0);
  return est;
}

namespace detail {

inline PointEstimate weighted_contrast(const ObservationalDataset& ds,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w,
                                       EstimatorKind kind, const char* name) {
  const ArmSums s = weighted_arm_sums(ds, y, w);
  if (s.n1 == 0) fail(ErrorCode::EmptyArm, std::string(name) + ": no treated records");
  if (s.n0 == 0) fail(ErrorCode::EmptyArm, std::string(name) + ": no untreated records");
  if (s.w1 <= 0.0 || s.w0 <= 0.0) {
    fail(ErrorCode::DegenerateWeights,
         std::string(name) + ": all weight mass on one treatment arm");
  }
  PointEstimate est;
  est.method = kind;
  est.intercept = s.wy0 / s.w0;
  est.value = s.wy1 / s.w1 - est.intercept;
  return est;
}

}  // namespace detail

// Solves sum (1,A)' W1 (Y - b1 - A b) = 0; closed form as a weighted contrast.
inline PointEstimate ipw_estimate(const ObservationalDataset& ds,
                                  const LogisticFit& propensity) {
  const Eigen::VectorXd e = propensity_scores(ds, propensity);
  const Eigen::VectorXd w = ipw_weights(ds, e);
  return detail::weighted_contrast(ds, ds.y, w, EstimatorKind::IPW, "ipw_estimate");
}

// Same equations applied to Y* = Y - tau (A - e); reduces to IPW at tau = 0.
inline PointEstimate mipw_estimate(const ObservationalDataset& ds,
                                   const LogisticFit& propensity, double tau) {
  if (!std::isfinite(tau)) fail(ErrorCode::InvalidArgument, "mipw_estimate: non-finite tau");
  const Eigen::VectorXd e = propensity_scores(ds, propensity);
  const Eigen::VectorXd w = ipw_weights(ds, e);
  const Eigen::VectorXd ystar = ds.y - tau * (ds.a - e);
  PointEstimate est =
      detail::weighted_contrast(ds, ystar, w, EstimatorKind::MIPW, "mipw_estimate");
  return est;
}

// Confounding contrast implied by a candidate marginal effect: the value of
// tau that makes the modified weighted equations hold at beta_ate. Affine and
// non-increasing in beta_ate; zero at the plain weighted estimate.
inline double tau_hat(const ObservationalDataset& ds, const LogisticFit& propensity,
                      double beta_ate) {
  if (!std::isfinite(beta_ate)) {
    fail(ErrorCode::InvalidArgument, "tau_hat: non-finite beta_ate");
  }
  const Eigen::VectorXd e = propensity_scores(ds, propensity);
  const Eigen::VectorXd w = ipw_weights(ds, e);
  const int n = ds.n();
  double bw = 0.0, bwa = 0.0, bwr = 0.0, bwar = 0.0, bwd = 0.0, bwad = 0.0;
  for (int i = 0; i < n; ++i) {
    const double resid = ds.y(i) - beta_ate * ds.a(i);
    const double dev = ds.a(i) - e(i);
    bw += w(i);
    bwr += w(i) * resid;
    bwd += w(i) * dev;
    if (ds.a(i) == 1.0) {
      bwa += w(i);
      bwar += w(i) * resid;
      bwad += w(i) * dev;
    }
  }
  bw /= n; bwa /= n; bwr /= n; bwar /= n; bwd /= n; bwad /= n;
  const double num = bwa * bwr - bw * bwar;
  const double den = bwa * bwd - bw * bwad;
  const double den_scale = std::max(std::abs(bwa * bwd), std::abs(bw * bwad));
  if (std::abs(den) <= kDenomTol * std::max(den_scale, 1.0)) {
    fail(ErrorCode::SingularDenominator, "tau_hat: weighted denominator vanishes");
  }
  return num / den;
}

// Instrument ratio {mean(Y|Z=1) - mean(Y|Z=0)} / {mean(A|Z=1) - mean(A|Z=0)},
// se by the delta method with the two Z arms independent.
inline PointEstimate iv_estimate(const ObservationalDataset& ds) {
  int n1 = 0, n0 = 0;
  double sy1 = 0.0, sy0 = 0.0, sa1 = 0.0, sa0 = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.z(i) == 1.0) {
      ++n1;
      sy1 += ds.y(i);
      sa1 += ds.a(i);
    } else {
      ++n0;
      sy0 += ds.y(i);
      sa0 += ds.a(i);
    }
  }
  if (n1 == 0) fail(ErrorCode::EmptyArm, "iv_estimate: no records with Z=1");
  if (n0 == 0) fail(ErrorCode::EmptyArm, "iv_estimate: no records with Z=0");
  const double my1 = sy1 / n1, my0 = sy0 / n0;
  const double ma1 = sa1 / n1, ma0 = sa0 / n0;
  const double den = ma1 - ma0;
  if (std::abs(den) < kDenomTol) {
    fail(ErrorCode::WeakInstrument,
         "iv_estimate: treatment rates coincide across instrument arms");
  }
  PointEstimate est;
  est.method = EstimatorKind::IV;
  est.value = (my1 - my0) / den;

  double vy1 = 0.0, vy0 = 0.0, va1 = 0.0, va0 = 0.0, c1 = 0.0, c0 = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.z(i) == 1.0) {
      vy1 += (ds.y(i) - my1) * (ds.y(i) - my1);
      va1 += (ds.a(i) - ma1) * (ds.a(i) - ma1);
      c1 += (ds.y(i) - my1) * (ds.a(i) - ma1);
    } else {
      vy0 += (ds.y(i) - my0) * (ds.y(i) - my0);
      va0 += (ds.a(i) - ma0) * (ds.a(i) - ma0);
      c0 += (ds.y(i) - my0) * (ds.a(i) - ma0);
    }
  }
  auto norm = [](double ss, int m) { return m > 1 ? ss / (m - 1) : 0.0; };
  const double vnum = norm(vy1, n1) / n1 + norm(vy0, n0) / n0;
  const double vden = norm(va1, n1) / n1 + norm(va0, n0) / n0;
  const double cov = norm(c1, n1) / n1 + norm(c0, n0) / n0;
  const double b = est.value;
  const double var = (vnum + b * b * vden - 2.0 * b * cov) / (den * den);
  est.se = std::sqrt(std::max(var, 0.0));
  const double my = (sy1 + sy0) / ds.n();
  const double ma = (sa1 + sa0) / ds.n();
  est.intercept = my - b * ma;
  return est;
}

}  // namespace ivbound
