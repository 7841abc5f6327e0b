#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ivbound/ivbound.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_names(const std::string& raw) {
  std::vector<std::string> out;
  if (raw.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = raw.find(',', start);
    out.push_back(raw.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> split_csv_doubles(const std::string& raw) {
  std::vector<double> out;
  for (const std::string& tok : split_csv_names(raw)) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                    "grid: cannot parse '" + tok + "' as a number");
    }
    out.push_back(v);
  }
  return out;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) ivbound::fail(ivbound::ErrorCode::IoFailure, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                  "config " + path + ": " + e.what());
  }
  if (!j.is_object()) {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                  "config " + path + ": top level must be an object");
  }
  return j;
}

// Count that tolerates flags a subcommand does not define.
std::size_t flag_count(const CLI::App* sub, const char* flag) {
  const CLI::Option* opt = sub->get_option_no_throw(flag);
  return opt ? opt->count() : 0;
}

// Flags override the config file: a key applies only when its flag is absent.
template <typename T>
void cfg(const CLI::App* sub, const json& j, const char* flag, const char* key, T& var) {
  if (flag_count(sub, flag) > 0 || !j.contains(key)) return;
  try {
    var = j.at(key).get<T>();
  } catch (const json::exception&) {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                  std::string("config key '") + key + "' has the wrong type");
  }
}

void cfg_names(const CLI::App* sub, const json& j, const char* flag, const char* key,
               std::string& var) {
  if (flag_count(sub, flag) > 0 || !j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_string()) {
    var = v.get<std::string>();
  } else if (v.is_array()) {
    std::string joined;
    for (const auto& item : v) {
      if (!item.is_string()) {
        ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                      std::string("config key '") + key + "' must hold strings");
      }
      if (!joined.empty()) joined += ',';
      joined += item.get<std::string>();
    }
    var = joined;
  } else {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                  std::string("config key '") + key + "' must be a string or array");
  }
}

struct CommonOpts {
  std::string data;
  std::string outcome = "y";
  std::string treatment = "a";
  std::string instrument = "z";
  std::string covariates;  // comma list, possibly empty
  std::string out = ".";
  std::string config;
  int K = 200;
  std::uint64_t seed = 20240101;
  double level = 0.95;
};

void add_data_flags(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--data", o.data, "input dataset CSV");
  sub->add_option("--outcome", o.outcome, "outcome column (default y)");
  sub->add_option("--treatment", o.treatment, "treatment column (default a)");
  sub->add_option("--instrument", o.instrument, "instrument column (default z)");
  sub->add_option("--covariates", o.covariates, "comma-separated covariate columns");
}

void add_run_flags(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--K", o.K, "bootstrap replicate count (default 200)");
  sub->add_option("--seed", o.seed, "RNG seed (default 20240101)");
  sub->add_option("--level", o.level, "confidence level (default 0.95)");
  sub->add_option("--out", o.out, "output directory (default .)");
  sub->add_option("--config", o.config, "JSON config file; flags override it");
}

void apply_common_cfg(const CLI::App* sub, const json& j, CommonOpts& o) {
  cfg(sub, j, "--data", "data", o.data);
  cfg(sub, j, "--outcome", "outcome", o.outcome);
  cfg(sub, j, "--treatment", "treatment", o.treatment);
  cfg(sub, j, "--instrument", "instrument", o.instrument);
  cfg_names(sub, j, "--covariates", "covariates", o.covariates);
  cfg(sub, j, "--K", "K", o.K);
  cfg(sub, j, "--seed", "seed", o.seed);
  cfg(sub, j, "--level", "level", o.level);
  cfg(sub, j, "--out", "out", o.out);
}

void check_run_opts(const CommonOpts& o) {
  if (o.data.empty()) {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument, "--data is required");
  }
  if (o.K < 1) ivbound::fail(ivbound::ErrorCode::InvalidArgument, "--K must be >= 1");
  ivbound::check_level(o.level);
}

ivbound::ObservationalDataset load_input(const CommonOpts& o) {
  ivbound::ColumnSpec cols;
  cols.outcome = o.outcome;
  cols.treatment = o.treatment;
  cols.instrument = o.instrument;
  cols.covariates = split_csv_names(o.covariates);
  return ivbound::load_dataset(o.data, cols);
}

std::string prepare_out_dir(const std::string& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) {
    ivbound::fail(ivbound::ErrorCode::IoFailure,
                  "cannot create output directory " + out + ": " + ec.message());
  }
  return (std::filesystem::path(out) / "").string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) ivbound::fail(ivbound::ErrorCode::IoFailure, "cannot write " + path);
  f << text;
  if (!f) ivbound::fail(ivbound::ErrorCode::IoFailure, "write failed for " + path);
}

json provenance_base(const char* command, const CommonOpts& o) {
  json p;
  p["command"] = command;
  p["data"] = o.data;
  p["outcome"] = o.outcome;
  p["treatment"] = o.treatment;
  p["instrument"] = o.instrument;
  p["covariates"] = split_csv_names(o.covariates);
  p["K"] = o.K;
  p["seed"] = o.seed;
  p["level"] = o.level;
  p["out"] = o.out;
  p["rng"] = "splitmix64";
  return p;
}

json params_json(const ivbound::AssumptionParams& p) {
  return json{{"xi0", p.xi0},         {"xi1", p.xi1},
              {"delta11", p.delta11}, {"delta00", p.delta00},
              {"delta_y0", p.delta_y0}, {"delta_trt", p.delta_trt}};
}

json interval_json(const ivbound::Interval& iv) {
  return json{{"lo", iv.lo}, {"hi", iv.hi}};
}

json ur_json(const ivbound::URResult& ur) {
  json j = interval_json(ur.interval);
  if (ur.se_lo.has_value()) j["se_lo"] = *ur.se_lo;
  if (ur.se_hi.has_value()) j["se_hi"] = *ur.se_hi;
  if (ur.kind == ivbound::IntervalKind::UrPointwiseCan) j["approximate"] = ur.approximate;
  return j;
}

void write_ensemble_csv(const ivbound::BootstrapEnsemble& ens, const std::string& path) {
  std::ofstream f(path);
  if (!f) ivbound::fail(ivbound::ErrorCode::IoFailure, "cannot write " + path);
  f << "replicate,L_star,U_star\n";
  char buf[64];
  for (const auto& r : ens.replicates) {
    f << r.replicate;
    std::snprintf(buf, sizeof(buf), "%.17g", r.lo);
    f << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", r.hi);
    f << ',' << buf << '\n';
  }
  if (!f) ivbound::fail(ivbound::ErrorCode::IoFailure, "write failed for " + path);
}

std::string fmt_interval(const ivbound::Interval& iv) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "[%12.4f, %12.4f]", iv.lo, iv.hi);
  return buf;
}

ivbound::BoundAssumption parse_assumption(const std::string& name) {
  if (name == "A") return ivbound::BoundAssumption::A;
  if (name == "B") return ivbound::BoundAssumption::B;
  if (name == "Bprime") return ivbound::BoundAssumption::Bprime;
  ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                "--assumption must be A, B, or Bprime (got '" + name + "')");
}

// ---------------------------------------------------------------- estimate

struct ScalarBoot {
  double se_at = 0.0;
  double se_ipw = 0.0;
  int failures = 0;
  int used = 0;
};

// Stratified bootstrap se for the AT and IPW contrasts, one shared resample
// stream; same substream discipline and failure ceiling as the bound bootstrap.
ScalarBoot bootstrap_contrast_se(const ivbound::ObservationalDataset& ds, int K,
                                 std::uint64_t seed) {
  std::vector<int> z1_rows, z0_rows;
  for (int i = 0; i < ds.n(); ++i) {
    (ds.z(i) == 1.0 ? z1_rows : z0_rows).push_back(i);
  }
  if (z1_rows.empty() || z0_rows.empty()) {
    ivbound::fail(ivbound::ErrorCode::EmptyArm, "bootstrap: an instrument arm is empty");
  }
  std::vector<double> at_vals, ipw_vals;
  int failures = 0;
  for (int k = 1; k <= K; ++k) {
    ivbound::SplitMix64 rng =
        ivbound::SplitMix64::substream(seed, static_cast<std::uint64_t>(k));
    const std::vector<int> idx = ivbound::resample_indices(z1_rows, z0_rows, rng);
    try {
      const ivbound::ObservationalDataset rep = ds.subset(idx);
      const double at = ivbound::at_estimate(rep).value;
      const ivbound::LogisticFit prop = ivbound::fit_propensity(rep);
      const double ipw = ivbound::ipw_estimate(rep, prop).value;
      at_vals.push_back(at);
      ipw_vals.push_back(ipw);
    } catch (const ivbound::Error&) {
      ++failures;
    }
  }
  if (failures * 20 > K) {
    ivbound::fail(ivbound::ErrorCode::TooManyFailures,
                  "bootstrap: " + std::to_string(failures) + " of " + std::to_string(K) +
                      " replicates failed (ceiling 5%)");
  }
  if (at_vals.size() < 2) {
    ivbound::fail(ivbound::ErrorCode::InsufficientReplicates,
                  "bootstrap: need at least 2 successful replicates");
  }
  auto sd = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
  };
  ScalarBoot out;
  out.se_at = sd(at_vals);
  out.se_ipw = sd(ipw_vals);
  out.failures = failures;
  out.used = static_cast<int>(at_vals.size());
  return out;
}

int cmd_estimate(const CLI::App* sub, CommonOpts& o) {
  apply_common_cfg(sub, load_config(o.config), o);
  check_run_opts(o);
  const ivbound::ObservationalDataset ds = load_input(o);
  const std::string dir = prepare_out_dir(o.out);

  const ivbound::PointEstimate at = ivbound::at_estimate(ds);
  const ivbound::LogisticFit prop = ivbound::fit_propensity(ds);
  const ivbound::PointEstimate ipw = ivbound::ipw_estimate(ds, prop);
  const ivbound::PointEstimate iv = ivbound::iv_estimate(ds);
  const ScalarBoot boot = bootstrap_contrast_se(ds, o.K, o.seed);

  const double z = ivbound::normal_quantile(1.0 - (1.0 - o.level) / 2.0);
  auto entry = [&](const ivbound::PointEstimate& est, double se) {
    return json{{"value", est.value},
                {"se", se},
                {"ci", {est.value - z * se, est.value + z * se}}};
  };
  json report;
  report["estimates"]["at"] = entry(at, boot.se_at);
  report["estimates"]["ipw"] = entry(ipw, boot.se_ipw);
  report["estimates"]["iv"] = entry(iv, iv.se.value());
  report["bootstrap"] = {{"K", o.K}, {"failures", boot.failures}, {"used", boot.used}};
  report["provenance"] = provenance_base("estimate", o);
  write_text(dir + "estimate_report.json", report.dump(2) + "\n");

  std::printf("point estimates (n = %d, level %.2f)\n", ds.n(), o.level);
  std::printf("  %-10s %12s %12s %28s\n", "estimator", "value", "se", "CI");
  auto line = [&](const char* name, const ivbound::PointEstimate& est, double se) {
    std::printf("  %-10s %12.4f %12.4f   [%12.4f, %12.4f]\n", name, est.value, se,
                est.value - z * se, est.value + z * se);
  };
  line("AT", at, boot.se_at);
  line("IPW", ipw, boot.se_ipw);
  line("IV", iv, iv.se.value());
  std::printf("report: %sestimate_report.json\n", dir.c_str());
  return 0;
}

// ------------------------------------------------------------------ bounds

struct BoundOpts {
  std::string assumption = "B";
  ivbound::AssumptionParams params;
};

void add_bound_flags(CLI::App* sub, BoundOpts& b) {
  sub->add_option("--assumption", b.assumption, "bound assumption: A, B, or Bprime");
  sub->add_option("--xi0", b.params.xi0, "outcome cap for the untreated stratum mean");
  sub->add_option("--xi1", b.params.xi1, "outcome cap for the treated stratum mean");
  sub->add_option("--delta11", b.params.delta11, "always-taker treated-minus-untreated slack");
  sub->add_option("--delta00", b.params.delta00, "never-taker treated-minus-untreated slack");
  sub->add_option("--delta-y0", b.params.delta_y0, "untreated-mean ordering slack");
  sub->add_option("--delta-trt", b.params.delta_trt, "treated-mean ordering slack");
}

void apply_bound_cfg(const CLI::App* sub, const json& j, BoundOpts& b) {
  cfg(sub, j, "--assumption", "assumption", b.assumption);
  cfg(sub, j, "--xi0", "xi0", b.params.xi0);
  cfg(sub, j, "--xi1", "xi1", b.params.xi1);
  cfg(sub, j, "--delta11", "delta11", b.params.delta11);
  cfg(sub, j, "--delta00", "delta00", b.params.delta00);
  cfg(sub, j, "--delta-y0", "delta_y0", b.params.delta_y0);
  cfg(sub, j, "--delta-trt", "delta_trt", b.params.delta_trt);
}

int cmd_bounds(const CLI::App* sub, CommonOpts& o, BoundOpts& b) {
  const json jcfg = load_config(o.config);
  apply_common_cfg(sub, jcfg, o);
  apply_bound_cfg(sub, jcfg, b);
  check_run_opts(o);
  const ivbound::BoundAssumption which = parse_assumption(b.assumption);
  const ivbound::ObservationalDataset ds = load_input(o);
  const std::string dir = prepare_out_dir(o.out);

  const ivbound::StrataEstimates strata = ivbound::estimate_strata(ds);
  const ivbound::BoundPair bound = ivbound::evaluate_bound(ds, which, b.params);
  const ivbound::BoundBootstrap boot =
      ivbound::bootstrap_bounds(ds, which, b.params, o.K, o.seed);

  auto region_set = [&](const ivbound::Interval& est,
                        const ivbound::BootstrapEnsemble& ens) {
    const double se_lo = ivbound::endpoint_sd(ens, false);
    const double se_hi = ivbound::endpoint_sd(ens, true);
    struct Rows {
      ivbound::URResult pcan, scan, sbts;
    } r{ivbound::ur_pointwise_can(est, se_lo, se_hi, o.level),
        ivbound::ur_strong_can(est, se_lo, se_hi, o.level),
        ivbound::ur_strong_bootstrap(ens, o.level)};
    return r;
  };
  const auto ate_ur = region_set(bound.ate, boot.ate);
  const auto tau_ur = region_set(bound.tau, boot.tau);

  json report;
  report["strata"] = {{"pi00", strata.pi00},     {"pi01", strata.pi01},
                      {"pi11", strata.pi11},     {"mu11_1", strata.mu11_1},
                      {"mu00_0", strata.mu00_0}, {"beta_iv", strata.beta_iv}};
  report["bound"] = {{"assumption", b.assumption},
                     {"params", params_json(b.params)},
                     {"ate", interval_json(bound.ate)},
                     {"tau", interval_json(bound.tau)}};
  report["ur"]["ate"] = {{"pointwise_can", ur_json(ate_ur.pcan)},
                         {"strong_can", ur_json(ate_ur.scan)},
                         {"strong_bootstrap", ur_json(ate_ur.sbts)}};
  report["ur"]["tau"] = {{"pointwise_can", ur_json(tau_ur.pcan)},
                         {"strong_can", ur_json(tau_ur.scan)},
                         {"strong_bootstrap", ur_json(tau_ur.sbts)}};
  report["bootstrap"] = {{"K", o.K},
                         {"failures", boot.ate.failures},
                         {"used", static_cast<int>(boot.ate.replicates.size())}};
  report["provenance"] = provenance_base("bounds", o);
  write_text(dir + "bounds_report.json", report.dump(2) + "\n");
  write_ensemble_csv(boot.ate, dir + "ensemble_ate.csv");
  write_ensemble_csv(boot.tau, dir + "ensemble_tau.csv");

  std::printf("assumption %s bound (level %.2f, K = %d, seed = %llu)\n",
              b.assumption.c_str(), o.level, o.K,
              static_cast<unsigned long long>(o.seed));
  std::printf("  %-22s %30s %30s\n", "", "ATE", "tau");
  auto line = [&](const char* name, const ivbound::Interval& a,
                  const ivbound::Interval& t) {
    std::printf("  %-22s %30s %30s\n", name, fmt_interval(a).c_str(),
                fmt_interval(t).c_str());
  };
  line("bound estimate", bound.ate, bound.tau);
  line("UR pointwise CAN", ate_ur.pcan.interval, tau_ur.pcan.interval);
  line("UR strong CAN", ate_ur.scan.interval, tau_ur.scan.interval);
  line("UR strong bootstrap", ate_ur.sbts.interval, tau_ur.sbts.interval);
  std::printf("report: %sbounds_report.json\n", dir.c_str());
  return 0;
}

// ------------------------------------------------------------- sensitivity

int cmd_sensitivity(const CLI::App* sub, CommonOpts& o, BoundOpts& b,
                    std::string& parameter, std::string& grid_csv) {
  const json jcfg = load_config(o.config);
  apply_common_cfg(sub, jcfg, o);
  apply_bound_cfg(sub, jcfg, b);
  cfg(sub, jcfg, "--parameter", "parameter", parameter);
  cfg_names(sub, jcfg, "--grid", "grid", grid_csv);
  check_run_opts(o);
  const ivbound::ObservationalDataset ds = load_input(o);
  const std::string dir = prepare_out_dir(o.out);

  std::vector<double> grid;
  const bool grid_given = sub->count("--grid") > 0 || jcfg.contains("grid");
  ivbound::SweepResult sweep;
  std::string csv_name;
  if (parameter == "xi") {
    grid = grid_given ? split_csv_doubles(grid_csv) : ivbound::default_xi_grid();
    sweep = ivbound::sweep_xi(ds, grid, o.K, o.seed, o.level, b.params);
    csv_name = "sweep_xi.csv";
  } else if (parameter == "delta00") {
    grid = grid_given ? split_csv_doubles(grid_csv) : ivbound::default_delta00_grid();
    sweep = ivbound::sweep_delta00(ds, grid, o.K, o.seed, o.level,
                                   parse_assumption(b.assumption), b.params);
    csv_name = "sweep_delta00.csv";
  } else {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                  "--parameter must be xi or delta00 (got '" + parameter + "')");
  }
  ivbound::write_sweep_csv(sweep, dir + csv_name);

  json report;
  report["grid"] = grid;
  report["rows"] = static_cast<int>(sweep.rows.size());
  report["csv"] = csv_name;
  json prov = provenance_base("sensitivity", o);
  prov["assumption"] = b.assumption;
  prov["params"] = params_json(b.params);
  prov["parameter"] = parameter;
  report["provenance"] = prov;
  write_text(dir + "sensitivity_report.json", report.dump(2) + "\n");

  std::printf("sensitivity sweep over %s: %d grid values\n", parameter.c_str(),
              static_cast<int>(sweep.rows.size()));
  std::printf("grid: %s%s\n", dir.c_str(), csv_name.c_str());
  std::printf("report: %ssensitivity_report.json\n", dir.c_str());
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimOpts {
  std::string generator = "strata";
  std::string dgp_file;
  std::string name = "sim";
  int n = 300;
  int p = 2;
  double tau_target = 0.0;
  double beta_ate = 100.0;
};

int cmd_simulate(const CLI::App* sub, CommonOpts& o, SimOpts& s) {
  const json jcfg = load_config(o.config);
  apply_common_cfg(sub, jcfg, o);
  cfg(sub, jcfg, "--generator", "generator", s.generator);
  cfg(sub, jcfg, "--dgp-file", "dgp_file", s.dgp_file);
  cfg(sub, jcfg, "--name", "name", s.name);
  cfg(sub, jcfg, "--n", "n", s.n);
  cfg(sub, jcfg, "--p", "p", s.p);
  cfg(sub, jcfg, "--tau-target", "tau_target", s.tau_target);
  cfg(sub, jcfg, "--beta-ate", "beta_ate", s.beta_ate);
  const bool n_given = sub->count("--n") > 0 || jcfg.contains("n");
  const bool seed_given = sub->count("--seed") > 0 || jcfg.contains("seed");
  const std::string dir = prepare_out_dir(o.out);

  ivbound::SimulatedSample sample;
  json prov = provenance_base("simulate", o);
  prov.erase("data");
  prov.erase("outcome");
  prov.erase("treatment");
  prov.erase("instrument");
  prov.erase("covariates");
  prov.erase("K");
  prov.erase("level");
  prov["generator"] = s.generator;
  prov["name"] = s.name;

  if (s.generator == "strata") {
    ivbound::StrataDGP dgp = s.dgp_file.empty() ? ivbound::default_strata_dgp()
                                                : ivbound::read_strata_dgp(s.dgp_file);
    if (n_given) dgp.n = s.n;
    if (seed_given) dgp.seed = o.seed;
    sample = ivbound::generate_strata(dgp);
    prov["seed"] = dgp.seed;
    json dj;
    dj["n"] = dgp.n;
    dj["pz"] = dgp.pz;
    dj["pi"] = {dgp.pi[0], dgp.pi[1], dgp.pi[2]};
    dj["mu_untreated"] = {dgp.mu_untreated[0], dgp.mu_untreated[1], dgp.mu_untreated[2]};
    dj["mu_treated"] = {dgp.mu_treated[0], dgp.mu_treated[1], dgp.mu_treated[2]};
    std::vector<double> w(dgp.covariate_effect.data(),
                          dgp.covariate_effect.data() + dgp.covariate_effect.size());
    dj["covariate_effect"] = w;
    dj["sigma_y"] = dgp.sigma_y;
    prov["dgp"] = dj;
  } else if (s.generator == "confounded") {
    sample = ivbound::generate_confounded(s.n, o.seed, s.tau_target, s.beta_ate, s.p);
    prov["dgp"] = {{"n", s.n},
                   {"p", s.p},
                   {"tau_target", s.tau_target},
                   {"beta_ate", s.beta_ate}};
  } else {
    ivbound::fail(ivbound::ErrorCode::InvalidArgument,
                  "--generator must be strata or confounded (got '" + s.generator + "')");
  }

  const std::string csv_path = dir + s.name + ".csv";
  const std::string manifest_path = dir + s.name + "_manifest.json";
  const std::string truth_path = dir + s.name + "_truth.json";
  ivbound::write_dataset(sample.data, csv_path);
  ivbound::write_manifest(ivbound::manifest_of(sample.data), manifest_path);
  ivbound::write_truth(sample.truth, truth_path);

  json report;
  report["files"] = {{"dataset", s.name + ".csv"},
                     {"manifest", s.name + "_manifest.json"},
                     {"truth", s.name + "_truth.json"}};
  report["provenance"] = prov;
  write_text(dir + "simulate_report.json", report.dump(2) + "\n");

  const ivbound::DatasetManifest m = ivbound::manifest_of(sample.data);
  std::printf("simulated %d records, %d covariates (%s generator)\n", m.n, m.p,
              s.generator.c_str());
  std::printf("  treat rate by arm: %.4f (Z=0) %.4f (Z=1)\n", m.rate_z0, m.rate_z1);
  std::printf("  mean outcome by arm: %.4f (Z=0) %.4f (Z=1)\n", m.mean_y_z0, m.mean_y_z1);
  std::printf("dataset: %s\n", csv_path.c_str());
  std::printf("report: %ssimulate_report.json\n", dir.c_str());
  return 0;
}

int exit_code_for(ivbound::ErrorCode code) {
  switch (code) {
    case ivbound::ErrorCode::InvalidArgument:
      return 1;
    case ivbound::ErrorCode::IoFailure:
      return 3;
    default:
      return 2;
  }
}

void print_error_json(const std::string& code, const std::string& message) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATE estimation and partial-identification bounds under an IV design"};
  app.require_subcommand(1);

  CommonOpts eo, bo, so, mo;
  BoundOpts eb, sb;
  std::string parameter = "xi", grid_csv;
  SimOpts sim;

  CLI::App* est = app.add_subcommand("estimate", "AT, IPW and IV point estimates");
  add_data_flags(est, eo);
  add_run_flags(est, eo);

  CLI::App* bnd = app.add_subcommand("bounds", "bound estimate plus uncertainty regions");
  add_data_flags(bnd, bo);
  add_run_flags(bnd, bo);
  add_bound_flags(bnd, eb);

  CLI::App* sen = app.add_subcommand("sensitivity", "bound sweep over a sensitivity grid");
  add_data_flags(sen, so);
  add_run_flags(sen, so);
  add_bound_flags(sen, sb);
  sen->add_option("--parameter", parameter, "swept parameter: xi or delta00");
  sen->add_option("--grid", grid_csv, "comma-separated grid values (default grid if absent)");

  CLI::App* simc = app.add_subcommand("simulate", "write a synthetic dataset with truth manifest");
  add_run_flags(simc, mo);
  simc->add_option("--generator", sim.generator, "strata or confounded (default strata)");
  simc->add_option("--dgp-file", sim.dgp_file, "JSON parameter file for the strata generator");
  simc->add_option("--name", sim.name, "output file stem (default sim)");
  simc->add_option("--n", sim.n, "sample size override");
  simc->add_option("--p", sim.p, "covariate count (confounded generator)");
  simc->add_option("--tau-target", sim.tau_target, "confounding contrast (confounded generator)");
  simc->add_option("--beta-ate", sim.beta_ate, "treatment effect (confounded generator)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << '\n';
    print_error_json("InvalidArgument", e.what());
    return 1;
  }

  try {
    if (est->parsed()) return cmd_estimate(est, eo);
    if (bnd->parsed()) return cmd_bounds(bnd, bo, eb);
    if (sen->parsed()) return cmd_sensitivity(sen, so, sb, parameter, grid_csv);
    if (simc->parsed()) return cmd_simulate(simc, mo, sim);
  } catch (const ivbound::Error& e) {
    std::cerr << "error [" << ivbound::error_code_name(e.code()) << "]: " << e.what()
              << '\n';
    print_error_json(ivbound::error_code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    print_error_json("Internal", e.what());
    return 2;
  }
  return 0;
}
