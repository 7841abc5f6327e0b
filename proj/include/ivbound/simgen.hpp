#pragma once

#include <Eigen/Dense>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ivbound/dataset.hpp"
#include "ivbound/glm.hpp"
#include "ivbound/rng.hpp"
#include "json.hpp"

namespace ivbound {

// Stratum codes used throughout: 0 never-taker, 1 complier, 2 always-taker.
struct StrataDGP {
  int n = 300;
  std::uint64_t seed = 20240101;
  double pz = 0.45;
  std::array<double, 3> pi = {0.70, 0.12, 0.18};  // never, complier, always
  std::array<double, 3> mu_untreated = {210.0, 200.0, 170.0};
  std::array<double, 3> mu_treated = {240.0, 300.0, 230.0};
  Eigen::VectorXd covariate_effect = (Eigen::VectorXd(2) << 0.8, -0.5).finished();
  double sigma_y = 80.0;

  int p() const { return static_cast<int>(covariate_effect.size()); }
};

inline StrataDGP default_strata_dgp() { return StrataDGP{}; }

struct TruthManifest {
  double true_ate = 0.0;
  double true_late = 0.0;
  std::optional<double> true_tau;  // absent when not constant across covariates
  std::array<double, 3> true_pi = {0.0, 0.0, 0.0};
};

struct SimulatedSample {
  ObservationalDataset data;
  TruthManifest truth;
  std::vector<int> stratum;  // per record
  Eigen::VectorXd noise;     // outcome noise before scaling
};

namespace detail {

template <typename F>
double simpson_segment(F&& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson_segment(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_segment(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

template <typename F>
double integrate_adaptive(F&& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_segment(f, a, b, fa, fm, fb, whole, tol, 48);
}

// E[f(S)] for S ~ N(0, sigma^2)
template <typename F>
double gaussian_mean(F&& f, double sigma) {
  if (sigma == 0.0) return f(0.0);
  const double inv = 1.0 / (sigma * 2.5066282746310005024);
  auto g = [&](double s) {
    const double u = s / sigma;
    return f(s) * inv * std::exp(-0.5 * u * u);
  };
  return integrate_adaptive(g, -12.0 * sigma, 12.0 * sigma, 1e-13);
}

// Root of target(t) = goal for target strictly increasing; bisection to 1e-10.
template <typename F>
double solve_offset(F&& target, double goal) {
  double lo = -8.0, hi = 8.0;
  int guard = 0;
  while (target(lo) > goal && guard++ < 60) lo *= 2.0;
  guard = 0;
  while (target(hi) < goal && guard++ < 60) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (target(mid) < goal ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Offsets of the stratum link: never-taker split sigma(t00 - s), then
// always-taker split sigma(t11 + s) among the rest, s = w'V. Sequential
// binary logits keep each marginal-matching search one-dimensional.
struct StratumLink {
  double t00 = 0.0;
  double t11 = 0.0;
  double sigma_s = 0.0;

  double p_never(double s) const { return detail::sigmoid(t00 - s); }
  double p_always(double s) const {
    return (1.0 - p_never(s)) * detail::sigmoid(t11 + s);
  }
};

inline StratumLink solve_stratum_link(const StrataDGP& dgp) {
  for (double prob : dgp.pi) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "stratum probabilities must lie in [0,1]");
    }
  }
  if (std::abs(dgp.pi[0] + dgp.pi[1] + dgp.pi[2] - 1.0) > 1e-12) {
    fail(ErrorCode::InvalidArgument, "stratum probabilities must sum to 1");
  }
  StratumLink link;
  link.sigma_s = dgp.covariate_effect.norm();
  const double inf = std::numeric_limits<double>::infinity();

  const double pi_never = dgp.pi[0];
  const double pi_always = dgp.pi[2];
  if (pi_never <= 0.0) {
    link.t00 = -inf;
  } else if (pi_never >= 1.0) {
    link.t00 = inf;
  } else {
    link.t00 = detail::solve_offset(
        [&](double t) {
          return detail::gaussian_mean(
              [&](double s) { return detail::sigmoid(t - s); }, link.sigma_s);
        },
        pi_never);
  }
  if (pi_always <= 0.0) {
    link.t11 = -inf;
  } else if (pi_never + pi_always >= 1.0) {
    link.t11 = inf;
  } else {
    link.t11 = detail::solve_offset(
        [&](double t) {
          return detail::gaussian_mean(
              [&](double s) {
                return (1.0 - detail::sigmoid(link.t00 - s)) * detail::sigmoid(t + s);
              },
              link.sigma_s);
        },
        pi_always);
  }
  return link;
}

// Principal-stratum data generator. Covariates are standard normal, the
// stratum is drawn from the covariate link with population margins matching
// pi exactly, Z is an independent coin, A follows the stratum rule
// (always-taker 1, never-taker 0, complier Z) and Y is the stratum-by-arm
// mean plus Gaussian noise.
inline SimulatedSample generate_strata(const StrataDGP& dgp) {
  if (dgp.n < 1) fail(ErrorCode::InvalidArgument, "generate_strata: n must be positive");
  if (!(dgp.pz > 0.0 && dgp.pz < 1.0)) {
    fail(ErrorCode::InvalidArgument, "generate_strata: pz must be in (0,1)");
  }
  if (!(dgp.sigma_y >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "generate_strata: sigma_y must be nonnegative");
  }
  const StratumLink link = solve_stratum_link(dgp);
  const int n = dgp.n, p = dgp.p();

  SimulatedSample out;
  out.data.y.resize(n);
  out.data.a.resize(n);
  out.data.z.resize(n);
  out.data.v.resize(n, p);
  out.data.columns.outcome = "y";
  out.data.columns.treatment = "a";
  out.data.columns.instrument = "z";
  for (int j = 0; j < p; ++j) {
    out.data.columns.covariates.push_back("v" + std::to_string(j + 1));
  }
  out.stratum.resize(static_cast<std::size_t>(n));
  out.noise.resize(n);

  SplitMix64 rng(dgp.seed);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < p; ++j) {
      out.data.v(i, j) = rng.next_gauss();
      s += dgp.covariate_effect(j) * out.data.v(i, j);
    }
    const double u = rng.next_unit();
    const double p_never = link.p_never(s);
    const double p_always = link.p_always(s);
    int stratum_i = 1;
    if (u < p_never) {
      stratum_i = 0;
    } else if (u < p_never + p_always) {
      stratum_i = 2;
    }
    out.stratum[static_cast<std::size_t>(i)] = stratum_i;
    out.data.z(i) = rng.next_unit() < dgp.pz ? 1.0 : 0.0;
    double a = 0.0;
    if (stratum_i == 2) {
      a = 1.0;
    } else if (stratum_i == 1) {
      a = out.data.z(i);
    }
    out.data.a(i) = a;
    out.noise(i) = rng.next_gauss();
    const double mean = a == 1.0 ? dgp.mu_treated[static_cast<std::size_t>(stratum_i)]
                                 : dgp.mu_untreated[static_cast<std::size_t>(stratum_i)];
    out.data.y(i) = mean + dgp.sigma_y * out.noise(i);
  }

  out.truth.true_pi = dgp.pi;
  out.truth.true_ate = 0.0;
  for (int srt = 0; srt < 3; ++srt) {
    out.truth.true_ate += dgp.pi[static_cast<std::size_t>(srt)] *
                          (dgp.mu_treated[static_cast<std::size_t>(srt)] -
                           dgp.mu_untreated[static_cast<std::size_t>(srt)]);
  }
  out.truth.true_late = dgp.mu_treated[1] - dgp.mu_untreated[1];
  const bool homogeneous =
      dgp.mu_treated[0] == dgp.mu_treated[1] && dgp.mu_treated[1] == dgp.mu_treated[2] &&
      dgp.mu_untreated[0] == dgp.mu_untreated[1] &&
      dgp.mu_untreated[1] == dgp.mu_untreated[2];
  if (homogeneous) {
    out.truth.true_tau = 0.0;  // no stratum shifts given V: contrast vanishes
  } else {
    out.truth.true_tau.reset();  // varies with V: flagged not constant
  }
  return out;
}

namespace detail {

inline double prevalence_over_cube(double acc, double slope, int levels) {
  if (levels == 0) return sigmoid(acc);
  auto f = [&](double v) { return prevalence_over_cube(acc + slope * v, slope, levels - 1); };
  return boost::math::quadrature::gauss<double, 32>::integrate(f, -1.0, 1.0) / 2.0;
}

}  // namespace detail

// Confounded generator without a usable instrument: Z is an independent coin.
// Y(a) = beta0 + beta_ate a + lambda'V + U + noise where U = h(B - 1/2) and
// the binary B is coupled to A given V so that the confounding contrast
// E{Y(a)|A=1,V} - E{Y(a)|A=0,V} equals tau_target for every V and a.
inline SimulatedSample generate_confounded(int n, std::uint64_t seed, double tau_target,
                                           double beta_ate, int covariate_dim) {
  constexpr double kBeta0 = 200.0;
  constexpr double kLambda = 25.0;
  constexpr double kGammaSlope = 0.5;
  constexpr double kSigmaEps = 50.0;
  constexpr double kShift = 120.0;  // confounder scale h
  const double gamma0 = std::log(0.23 / 0.77);

  if (n < 1) fail(ErrorCode::InvalidArgument, "generate_confounded: n must be positive");
  if (covariate_dim < 1 || covariate_dim > 4) {
    fail(ErrorCode::InvalidArgument,
         "generate_confounded: covariate_dim must be between 1 and 4");
  }
  if (!std::isfinite(tau_target) || !std::isfinite(beta_ate)) {
    fail(ErrorCode::InvalidArgument, "generate_confounded: non-finite parameter");
  }

  // Covariates are Uniform(-1,1), so the propensity range is closed form and
  // the coupling probabilities stay in [0,1] iff
  // |tau| <= h / (2 max(e_max, 1-e_min)).
  const double reach = kGammaSlope * covariate_dim;
  const double e_min = detail::sigmoid(gamma0 - reach);
  const double e_max = detail::sigmoid(gamma0 + reach);
  const double feasible = kShift / (2.0 * std::max(e_max, 1.0 - e_min));
  if (std::abs(tau_target) > feasible) {
    fail(ErrorCode::InfeasibleTau,
         "generate_confounded: |tau_target| = " + std::to_string(std::abs(tau_target)) +
             " exceeds the feasible contrast " + std::to_string(feasible) +
             " for shift scale " + std::to_string(kShift) + " at this prevalence");
  }
  const double delta0 = 2.0 * tau_target / kShift;

  SimulatedSample out;
  out.data.y.resize(n);
  out.data.a.resize(n);
  out.data.z.resize(n);
  out.data.v.resize(n, covariate_dim);
  out.data.columns.outcome = "y";
  out.data.columns.treatment = "a";
  out.data.columns.instrument = "z";
  for (int j = 0; j < covariate_dim; ++j) {
    out.data.columns.covariates.push_back("v" + std::to_string(j + 1));
  }
  out.stratum.assign(static_cast<std::size_t>(n), 0);
  out.noise.resize(n);

  SplitMix64 rng(seed);
  for (int i = 0; i < n; ++i) {
    double vsum = 0.0;
    for (int j = 0; j < covariate_dim; ++j) {
      out.data.v(i, j) = 2.0 * rng.next_unit() - 1.0;
      vsum += out.data.v(i, j);
    }
    const double e = detail::sigmoid(gamma0 + kGammaSlope * vsum);
    const double a = rng.next_unit() < e ? 1.0 : 0.0;
    const double pb = a == 1.0 ? 0.5 + 0.5 * (1.0 - e) * delta0
                               : 0.5 - 0.5 * e * delta0;
    const double b = rng.next_unit() < pb ? 1.0 : 0.0;
    out.data.z(i) = rng.next_unit() < 0.5 ? 1.0 : 0.0;
    out.noise(i) = rng.next_gauss();
    out.data.a(i) = a;
    out.stratum[static_cast<std::size_t>(i)] = a == 1.0 ? 2 : 0;  // Z never moves A
    out.data.y(i) = kBeta0 + beta_ate * a + kLambda * vsum +
                    kShift * (b - 0.5) + kSigmaEps * out.noise(i);
  }

  const double prevalence =
      detail::prevalence_over_cube(gamma0, kGammaSlope, covariate_dim);
  out.truth.true_ate = beta_ate;
  out.truth.true_late = beta_ate;  // effect is homogeneous
  out.truth.true_tau = tau_target;
  out.truth.true_pi = {1.0 - prevalence, 0.0, prevalence};
  return out;
}

inline void write_truth(const TruthManifest& t, const std::string& path) {
  nlohmann::json j;
  j["true_ate"] = t.true_ate;
  j["true_late"] = t.true_late;
  if (t.true_tau.has_value()) {
    j["true_tau"] = *t.true_tau;
  } else {
    j["true_tau"] = nullptr;  // not constant across covariates
  }
  j["true_pi"] = {t.true_pi[0], t.true_pi[1], t.true_pi[2]};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(2) << '\n';
}

inline TruthManifest read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  nlohmann::json j;
  in >> j;
  TruthManifest t;
  t.true_ate = j.at("true_ate").get<double>();
  t.true_late = j.at("true_late").get<double>();
  if (!j.at("true_tau").is_null()) t.true_tau = j.at("true_tau").get<double>();
  for (std::size_t s = 0; s < 3; ++s) t.true_pi[s] = j.at("true_pi").at(s).get<double>();
  return t;
}

inline void write_strata_dgp(const StrataDGP& dgp, const std::string& path) {
  nlohmann::json j;
  j["n"] = dgp.n;
  j["seed"] = dgp.seed;
  j["pz"] = dgp.pz;
  j["pi"] = {dgp.pi[0], dgp.pi[1], dgp.pi[2]};
  j["mu_untreated"] = {dgp.mu_untreated[0], dgp.mu_untreated[1], dgp.mu_untreated[2]};
  j["mu_treated"] = {dgp.mu_treated[0], dgp.mu_treated[1], dgp.mu_treated[2]};
  std::vector<double> w(dgp.covariate_effect.data(),
                        dgp.covariate_effect.data() + dgp.covariate_effect.size());
  j["covariate_effect"] = w;
  j["sigma_y"] = dgp.sigma_y;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(2) << '\n';
}

inline StrataDGP read_strata_dgp(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  nlohmann::json j;
  in >> j;
  StrataDGP dgp;
  dgp.n = j.at("n").get<int>();
  dgp.seed = j.at("seed").get<std::uint64_t>();
  dgp.pz = j.at("pz").get<double>();
  for (std::size_t s = 0; s < 3; ++s) {
    dgp.pi[s] = j.at("pi").at(s).get<double>();
    dgp.mu_untreated[s] = j.at("mu_untreated").at(s).get<double>();
    dgp.mu_treated[s] = j.at("mu_treated").at(s).get<double>();
  }
  const auto w = j.at("covariate_effect").get<std::vector<double>>();
  dgp.covariate_effect.resize(static_cast<int>(w.size()));
  for (std::size_t k = 0; k < w.size(); ++k) {
    dgp.covariate_effect(static_cast<int>(k)) = w[k];
  }
  dgp.sigma_y = j.at("sigma_y").get<double>();
  return dgp;
}

}  // namespace ivbound
