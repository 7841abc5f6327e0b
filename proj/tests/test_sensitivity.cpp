#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "ivbound/sensitivity.hpp"
#include "ivbound/simgen.hpp"
#include "test_util.hpp"

using ivbound::AssumptionParams;
using ivbound::BoundAssumption;
using ivbound::Error;
using ivbound::ErrorCode;
using ivbound::ObservationalDataset;
using ivbound::SweepResult;

namespace {

auto error_code_is(ErrorCode code) {
  return Catch::Matchers::Predicate<Error>(
      [code](const Error& e) { return e.code() == code; });
}

const ObservationalDataset& simulated_sample() {
  static const ObservationalDataset ds =
      ivbound::generate_strata(ivbound::default_strata_dgp()).data;
  return ds;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("default grids") {
  const auto xi = ivbound::default_xi_grid();
  REQUIRE(xi.size() == 11);
  REQUIRE(xi.front() == 300.0);
  REQUIRE(xi.back() == 500.0);
  REQUIRE(xi[1] - xi[0] == 20.0);
  const auto d = ivbound::default_delta00_grid();
  REQUIRE(d.size() == 11);
  REQUIRE(d.front() == -60.0);
  REQUIRE(d.back() == 20.0);
  REQUIRE(d[1] - d[0] == 8.0);
}

TEST_CASE("cap sweep endpoints move with the stratum-share slopes") {
  const auto& ds = simulated_sample();
  const auto se = ivbound::estimate_strata(ds);
  const std::vector<double> grid = {100.0, 150.0, 200.0};
  const auto sweep = ivbound::sweep_xi(ds, grid, 25, 2024, 0.95);
  REQUIRE(sweep.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(sweep.rows[i].parameter == "xi");
    REQUIRE(sweep.rows[i].value == grid[i]);
    REQUIRE_FALSE(sweep.rows[i].invalid);
  }
  for (std::size_t i = 1; i < 3; ++i) {
    const double dv = grid[i] - grid[i - 1];
    REQUIRE(sweep.rows[i].ate.lo - sweep.rows[i - 1].ate.lo ==
            Catch::Approx(-se.pi11 * dv).margin(1e-10));
    REQUIRE(sweep.rows[i].ate.hi - sweep.rows[i - 1].ate.hi ==
            Catch::Approx(se.pi00 * dv).margin(1e-10));
  }
  // anti-monotone confounding endpoints stay affine along the grid
  const double t0 = sweep.rows[0].tau.hi, t1 = sweep.rows[1].tau.hi,
               t2 = sweep.rows[2].tau.hi;
  REQUIRE(t2 - t1 == Catch::Approx(t1 - t0).margin(1e-8));
  REQUIRE(t0 < t1);
  REQUIRE(sweep.rows[0].tau.lo > sweep.rows[1].tau.lo);
}

TEST_CASE("single-point sweep equals the direct pipeline with the same seed") {
  const auto& ds = simulated_sample();
  const int K = 25;
  const std::uint64_t seed = 909;
  const auto sweep = ivbound::sweep_delta00(ds, {4.0}, K, seed, 0.95, BoundAssumption::B);
  REQUIRE(sweep.rows.size() == 1);
  const auto& row = sweep.rows[0];
  REQUIRE(row.parameter == "delta00");

  AssumptionParams p;
  p.delta00 = 4.0;
  const auto direct = ivbound::evaluate_bound(ds, BoundAssumption::B, p);
  REQUIRE(row.ate.lo == direct.ate.lo);
  REQUIRE(row.ate.hi == direct.ate.hi);
  REQUIRE(row.tau.lo == direct.tau.lo);
  REQUIRE(row.tau.hi == direct.tau.hi);

  const auto boot = ivbound::bootstrap_bounds(ds, BoundAssumption::B, p, K, seed);
  REQUIRE(row.ur_ate.lo == ivbound::ur_strong_bootstrap(boot.ate, 0.95).interval.lo);
  REQUIRE(row.ur_ate.hi == ivbound::ur_strong_bootstrap(boot.ate, 0.95).interval.hi);
  REQUIRE(row.ur_tau.lo == ivbound::ur_strong_bootstrap(boot.tau, 0.95).interval.lo);
  REQUIRE(row.ur_tau.hi == ivbound::ur_strong_bootstrap(boot.tau, 0.95).interval.hi);
}

TEST_CASE("relaxation sweep moves only the lower endpoint") {
  const auto& ds = simulated_sample();
  const auto se = ivbound::estimate_strata(ds);
  const std::vector<double> grid = {-8.0, 0.0, 8.0};
  const auto sweep = ivbound::sweep_delta00(ds, grid, 25, 31, 0.95, BoundAssumption::B);
  REQUIRE(sweep.rows.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) {
    REQUIRE(sweep.rows[i].ate.hi == sweep.rows[0].ate.hi);
    REQUIRE(sweep.rows[i].ate.lo - sweep.rows[i - 1].ate.lo ==
            Catch::Approx(se.pi00 * 8.0).margin(1e-10));
    REQUIRE(sweep.rows[i].ate.lo > sweep.rows[i - 1].ate.lo);
  }
}

TEST_CASE("conditional-bound sweep runs and stays ordered") {
  const auto& ds = simulated_sample();
  const auto sweep =
      ivbound::sweep_delta00(ds, {-8.0, 8.0}, 25, 5, 0.95, BoundAssumption::Bprime);
  REQUIRE(sweep.rows.size() == 2);
  for (const auto& row : sweep.rows) {
    REQUIRE_FALSE(row.invalid);
    REQUIRE(row.ate.lo <= row.ate.hi);
    REQUIRE(row.ur_ate.lo <= row.ate.lo);
    REQUIRE(row.ur_ate.hi >= row.ate.hi);
  }
  REQUIRE(sweep.rows[1].ate.lo > sweep.rows[0].ate.lo);
}

TEST_CASE("crossed endpoints mark the row invalid instead of failing the sweep") {
  const auto& ds = simulated_sample();
  const auto sweep =
      ivbound::sweep_delta00(ds, {0.0, 1000.0}, 25, 8, 0.95, BoundAssumption::B);
  REQUIRE_FALSE(sweep.rows[0].invalid);
  REQUIRE(sweep.rows[1].invalid);
  REQUIRE(std::isnan(sweep.rows[1].ur_ate.lo));
  REQUIRE(std::isnan(sweep.rows[1].ur_tau.hi));
  // the invalid row still records the crossed analytic endpoints
  REQUIRE(sweep.rows[1].ate.lo > sweep.rows[1].ate.hi);
}

TEST_CASE("sweeps are deterministic in the seed") {
  const auto& ds = simulated_sample();
  const auto a = ivbound::sweep_xi(ds, {250.0, 350.0}, 25, 77, 0.95);
  const auto b = ivbound::sweep_xi(ds, {250.0, 350.0}, 25, 77, 0.95);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].ur_ate.lo == b.rows[i].ur_ate.lo);
    REQUIRE(a.rows[i].ur_ate.hi == b.rows[i].ur_ate.hi);
    REQUIRE(a.rows[i].ur_tau.lo == b.rows[i].ur_tau.lo);
    REQUIRE(a.rows[i].ur_tau.hi == b.rows[i].ur_tau.hi);
  }
}

TEST_CASE("grid validation") {
  const auto& ds = simulated_sample();
  REQUIRE_THROWS_MATCHES(ivbound::sweep_xi(ds, {}, 25, 1, 0.95), Error,
                         error_code_is(ErrorCode::InvalidArgument));
  REQUIRE_THROWS_MATCHES(ivbound::sweep_xi(ds, {10.0, 10.0}, 25, 1, 0.95), Error,
                         error_code_is(ErrorCode::InvalidArgument));
  REQUIRE_THROWS_MATCHES(ivbound::sweep_xi(ds, {20.0, 10.0}, 25, 1, 0.95), Error,
                         error_code_is(ErrorCode::InvalidArgument));
  REQUIRE_THROWS_MATCHES(ivbound::sweep_xi(ds, {-5.0, 5.0}, 25, 1, 0.95), Error,
                         error_code_is(ErrorCode::InvalidArgument));
  REQUIRE_THROWS_MATCHES(
      ivbound::sweep_delta00(ds, {0.0}, 25, 1, 0.95, BoundAssumption::A), Error,
      error_code_is(ErrorCode::InvalidArgument));
  REQUIRE_THROWS_MATCHES(ivbound::sweep_xi(ds, {100.0}, 25, 1, 1.5), Error,
                         error_code_is(ErrorCode::InvalidArgument));
}

TEST_CASE("sweep table serialization") {
  const auto& ds = simulated_sample();
  const auto sweep =
      ivbound::sweep_delta00(ds, {0.0, 1000.0}, 25, 8, 0.95, BoundAssumption::B);
  const std::string path = testutil::scratch_file("sweep") + ".csv";
  ivbound::write_sweep_csv(sweep, path);
  const auto lines = read_lines(path);
  REQUIRE(lines.size() == 3);
  REQUIRE(lines[0] ==
          "parameter,value,ate_lo,ate_hi,tau_lo,tau_hi,"
          "ur_ate_lo,ur_ate_hi,ur_tau_lo,ur_tau_hi,invalid_flag");
  REQUIRE(lines[1].rfind("delta00,0,", 0) == 0);
  REQUIRE(lines[1].back() == '0');
  REQUIRE(lines[2].rfind("delta00,1000,", 0) == 0);
  REQUIRE(lines[2].back() == '1');
  REQUIRE(lines[2].find("nan") != std::string::npos);

  // round-trip one numeric field at full precision
  std::stringstream row(lines[1]);
  std::string field;
  std::getline(row, field, ',');  // parameter
  std::getline(row, field, ',');  // value
  std::getline(row, field, ',');  // ate_lo
  REQUIRE(std::stod(field) == sweep.rows[0].ate.lo);

  REQUIRE_THROWS_MATCHES(
      ivbound::write_sweep_csv(sweep, "/nonexistent_dir_zz/sweep.csv"), Error,
      error_code_is(ErrorCode::IoFailure));
}
