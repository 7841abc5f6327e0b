#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ivbound/errors.hpp"

namespace ivbound {

constexpr double kProbClamp = 1e-6;       // applied to predictions only
constexpr double kScoreTol = 1e-10;       // sup-norm of score / n
constexpr int kMaxNewtonIter = 100;
constexpr double kPivotTol = 1e-12;       // relative pivot threshold for rank

namespace detail {

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow
inline double softplus(double t) {
  return (t > 0 ? t : 0.0) + std::log1p(std::exp(-std::abs(t)));
}

inline void check_full_rank(const Eigen::MatrixXd& x, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kPivotTol);
  if (qr.rank() < x.cols()) {
    fail(ErrorCode::RankDeficientDesign,
         std::string(what) + ": design rank " + std::to_string(qr.rank()) +
             " < " + std::to_string(x.cols()) + " columns");
  }
}

}  // namespace detail

struct LogisticFit {
  Eigen::VectorXd coef;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;            // sup-norm of score / n at exit
  std::vector<double> loglik_trace;
};

struct LinearFit {
  Eigen::VectorXd coef;
  double residual_sum_squares = 0.0;
  int rank = 0;
};

// Maximum-likelihood logistic regression, Newton-Raphson with step-halving.
inline LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& ybin) {
  const int n = static_cast<int>(x.rows());
  const int q = static_cast<int>(x.cols());
  if (ybin.size() != n) {
    fail(ErrorCode::DimensionMismatch, "fit_logistic: response length " +
                                           std::to_string(ybin.size()) +
                                           " vs design rows " + std::to_string(n));
  }
  if (n < 1 || q < 1) fail(ErrorCode::InvalidArgument, "fit_logistic: empty problem");
  for (int i = 0; i < n; ++i) {
    if (ybin(i) != 0.0 && ybin(i) != 1.0) {
      fail(ErrorCode::NonBinaryValue, "fit_logistic: response is not 0/1 at row " +
                                          std::to_string(i + 1));
    }
  }
  detail::check_full_rank(x, "fit_logistic");

  // clamp boundary on the linear predictor scale; fitted probabilities pinned
  // past it with a vanishing score mean the optimum is at infinity
  const double eta_limit = std::log((1.0 - kProbClamp) / kProbClamp);

  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prob(n), w(n);

  auto loglik = [&](const Eigen::VectorXd& e) {
    double ll = 0.0;
    for (int i = 0; i < n; ++i) ll += ybin(i) * e(i) - detail::softplus(e(i));
    return ll;
  };

  double ll = loglik(eta);
  fit.loglik_trace.push_back(ll);

  for (int it = 0; it < kMaxNewtonIter; ++it) {
    for (int i = 0; i < n; ++i) {
      prob(i) = detail::sigmoid(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    const Eigen::VectorXd score = x.transpose() * (ybin - prob);
    fit.max_abs_score = score.cwiseAbs().maxCoeff() / n;
    fit.iterations = it;
    if (fit.max_abs_score <= kScoreTol) {
      if (eta.cwiseAbs().maxCoeff() > eta_limit) {
        fail(ErrorCode::SeparationDetected,
             "fit_logistic: fitted probabilities pinned at the clamp limits; "
             "no finite optimum");
      }
      fit.converged = true;
      return fit;
    }

    const Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x;
    Eigen::VectorXd step = hess.ldlt().solve(score);
    if (!step.allFinite()) {
      if (eta.cwiseAbs().maxCoeff() > eta_limit) {
        fail(ErrorCode::SeparationDetected,
             "fit_logistic: fitted probabilities pinned at the clamp limits; "
             "no finite optimum");
      }
      fail(ErrorCode::MaxIterationsExceeded, "fit_logistic: singular Newton step");
    }

    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 50; ++half) {
      const Eigen::VectorXd cand = fit.coef + scale * step;
      const Eigen::VectorXd eta_cand = x * cand;
      const double ll_cand = loglik(eta_cand);
      if (ll_cand >= ll - 1e-13 * std::abs(ll)) {
        fit.coef = cand;
        eta = eta_cand;
        ll = ll_cand;
        fit.loglik_trace.push_back(ll);
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      if (eta.cwiseAbs().maxCoeff() > eta_limit) {
        fail(ErrorCode::SeparationDetected,
             "fit_logistic: fitted probabilities pinned at the clamp limits; "
             "no finite optimum");
      }
      fail(ErrorCode::MaxIterationsExceeded,
           "fit_logistic: step-halving stalled before convergence");
    }
  }

  // score still above tolerance after the iteration budget
  if (eta.cwiseAbs().maxCoeff() > eta_limit) {
    fail(ErrorCode::SeparationDetected,
         "fit_logistic: fitted probabilities pinned at the clamp limits; "
         "no finite optimum");
  }
  fail(ErrorCode::MaxIterationsExceeded,
       "fit_logistic: no convergence in " + std::to_string(kMaxNewtonIter) +
           " iterations");
}

// Least squares via column-pivoted QR.
inline LinearFit fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.rows());
  if (y.size() != n) {
    fail(ErrorCode::DimensionMismatch, "fit_linear: response length " +
                                           std::to_string(y.size()) +
                                           " vs design rows " + std::to_string(n));
  }
  if (n < 1 || x.cols() < 1) fail(ErrorCode::InvalidArgument, "fit_linear: empty problem");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kPivotTol);
  LinearFit fit;
  fit.rank = static_cast<int>(qr.rank());
  if (fit.rank < x.cols()) {
    fail(ErrorCode::RankDeficientDesign,
         "fit_linear: design rank " + std::to_string(fit.rank) + " < " +
             std::to_string(x.cols()) + " columns");
  }
  fit.coef = qr.solve(y);
  fit.residual_sum_squares = (y - x * fit.coef).squaredNorm();
  return fit;
}

inline double clamp_prob(double prob) {
  if (prob < kProbClamp) return kProbClamp;
  if (prob > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return prob;
}

inline double predict_prob(const LogisticFit& fit, const Eigen::VectorXd& xrow) {
  if (xrow.size() != fit.coef.size()) {
    fail(ErrorCode::DimensionMismatch, "predict_prob: row length " +
                                           std::to_string(xrow.size()) +
                                           " vs coef length " +
                                           std::to_string(fit.coef.size()));
  }
  return clamp_prob(detail::sigmoid(xrow.dot(fit.coef)));
}

inline Eigen::VectorXd predict_prob(const LogisticFit& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.coef.size()) {
    fail(ErrorCode::DimensionMismatch, "predict_prob: design cols " +
                                           std::to_string(x.cols()) +
                                           " vs coef length " +
                                           std::to_string(fit.coef.size()));
  }
  Eigen::VectorXd eta = x * fit.coef;
  for (int i = 0; i < eta.size(); ++i) eta(i) = clamp_prob(detail::sigmoid(eta(i)));
  return eta;
}

}  // namespace ivbound
