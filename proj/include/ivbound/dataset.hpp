#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ivbound/errors.hpp"
#include "json.hpp"

namespace ivbound {

struct ColumnSpec {
  std::string outcome = "y";
  std::string treatment = "a";
  std::string instrument = "z";
  std::vector<std::string> covariates;
};

// One record per row: continuous outcome Y, binary treatment received A,
// binary instrument Z (study site / assignment), covariates V. Treated as
// immutable after construction.
struct ObservationalDataset {
  Eigen::VectorXd y;
  Eigen::VectorXd a;
  Eigen::VectorXd z;
  Eigen::MatrixXd v;  // n x p
  ColumnSpec columns;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(v.cols()); }

  ObservationalDataset subset(const std::vector<int>& rows) const {
    ObservationalDataset out;
    const int m = static_cast<int>(rows.size());
    out.y.resize(m);
    out.a.resize(m);
    out.z.resize(m);
    out.v.resize(m, v.cols());
    for (int i = 0; i < m; ++i) {
      out.y(i) = y(rows[i]);
      out.a(i) = a(rows[i]);
      out.z(i) = z(rows[i]);
      out.v.row(i) = v.row(rows[i]);
    }
    out.columns = columns;
    return out;
  }
};

namespace detail {

inline double parse_cell(const std::string& tok, int row, const std::string& col) {
  double val = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, val);
  if (res.ec != std::errc() || res.ptr != last) {
    fail(ErrorCode::BadCsv, "row " + std::to_string(row) + ", column " + col +
                                ": cannot parse '" + tok + "' as a number");
  }
  if (!std::isfinite(val)) {
    fail(ErrorCode::NonFiniteValue,
         "row " + std::to_string(row) + ", column " + col + ": non-finite value");
  }
  return val;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline void check_binary(Eigen::VectorXd& col, const std::string& name) {
  for (int i = 0; i < col.size(); ++i) {
    if (col(i) != 0.0 && col(i) != 1.0) {
      fail(ErrorCode::NonBinaryValue, "row " + std::to_string(i + 1) + ", column " +
                                          name + ": value is not a 0/1 literal");
    }
  }
}

}  // namespace detail

inline void validate_dataset(const ObservationalDataset& ds) {
  if (ds.n() < 1) fail(ErrorCode::BadCsv, "dataset has no records");
  for (int i = 0; i < ds.n(); ++i) {
    if (!std::isfinite(ds.y(i))) {
      fail(ErrorCode::NonFiniteValue,
           "row " + std::to_string(i + 1) + ", column " + ds.columns.outcome +
               ": non-finite value");
    }
    for (int j = 0; j < ds.p(); ++j) {
      if (!std::isfinite(ds.v(i, j))) {
        fail(ErrorCode::NonFiniteValue,
             "row " + std::to_string(i + 1) + ", column " +
                 ds.columns.covariates[static_cast<std::size_t>(j)] +
                 ": non-finite value");
      }
    }
  }
  Eigen::VectorXd a = ds.a, z = ds.z;
  detail::check_binary(a, ds.columns.treatment);
  detail::check_binary(z, ds.columns.instrument);
  const double nz1 = ds.z.sum();
  if (nz1 == 0.0 || nz1 == static_cast<double>(ds.n())) {
    fail(ErrorCode::EmptyInstrumentCell,
         nz1 == 0.0 ? "no records with Z=1" : "no records with Z=0");
  }
}

inline ObservationalDataset load_dataset(const std::string& path, const ColumnSpec& cols) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::BadCsv, path + ": empty file");
  const std::vector<std::string> header = detail::split_line(line);

  auto col_index = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<int>(j);
    }
    fail(ErrorCode::MissingColumn, path + ": missing column '" + name + "'");
  };

  const int iy = col_index(cols.outcome);
  const int ia = col_index(cols.treatment);
  const int iz = col_index(cols.instrument);
  std::vector<int> iv;
  for (const auto& name : cols.covariates) iv.push_back(col_index(name));

  std::vector<std::vector<std::string>> rows;
  int rownum = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rownum;
    auto fields = detail::split_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorCode::BadCsv, "row " + std::to_string(rownum) + ": expected " +
                                  std::to_string(header.size()) + " cells, found " +
                                  std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) {
        fail(ErrorCode::BadCsv, "row " + std::to_string(rownum) + ": missing cell");
      }
    }
    rows.push_back(std::move(fields));
  }

  ObservationalDataset ds;
  ds.columns = cols;
  const int n = static_cast<int>(rows.size());
  if (n < 1) fail(ErrorCode::BadCsv, path + ": no data rows");
  ds.y.resize(n);
  ds.a.resize(n);
  ds.z.resize(n);
  ds.v.resize(n, static_cast<int>(iv.size()));
  for (int i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    ds.y(i) = detail::parse_cell(r[static_cast<std::size_t>(iy)], i + 1, cols.outcome);
    ds.a(i) = detail::parse_cell(r[static_cast<std::size_t>(ia)], i + 1, cols.treatment);
    ds.z(i) = detail::parse_cell(r[static_cast<std::size_t>(iz)], i + 1, cols.instrument);
    for (std::size_t j = 0; j < iv.size(); ++j) {
      ds.v(i, static_cast<int>(j)) =
          detail::parse_cell(r[static_cast<std::size_t>(iv[j])], i + 1,
                             cols.covariates[j]);
    }
  }
  validate_dataset(ds);
  return ds;
}

inline void write_dataset(const ObservationalDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
  out << ds.columns.outcome << ',' << ds.columns.treatment << ','
      << ds.columns.instrument;
  for (const auto& name : ds.columns.covariates) out << ',' << name;
  out << '\n';
  char buf[64];
  auto put = [&](double x, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf << sep;
  };
  for (int i = 0; i < ds.n(); ++i) {
    put(ds.y(i), ',');
    put(ds.a(i), ',');
    put(ds.z(i), ds.p() > 0 ? ',' : '\n');
    for (int j = 0; j < ds.p(); ++j) put(ds.v(i, j), j + 1 < ds.p() ? ',' : '\n');
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path);
}

struct ArmStats {
  int n = 0;
  double mean_y = 0.0;
  double se_y = 0.0;  // sd / sqrt(n)
};

struct SummaryTable {
  int n = 0;
  int p = 0;
  ArmStats by_a[2];
  ArmStats by_z[2];
  double treat_rate[2] = {0.0, 0.0};     // per Z arm
  double treat_rate_se[2] = {0.0, 0.0};
  double z_mean_by_a = 0.0;  // two-sample z for mean Y, A=1 vs A=0
  double z_mean_by_z = 0.0;  // same across Z arms
  double z_rate_by_z = 0.0;  // treatment rate comparison across Z arms
};

namespace detail {

inline ArmStats arm_stats(const Eigen::VectorXd& y, const Eigen::VectorXd& sel) {
  ArmStats s;
  double sum = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    if (sel(i) == 1.0) {
      ++s.n;
      sum += y(i);
    }
  }
  if (s.n == 0) return s;
  s.mean_y = sum / s.n;
  double ss = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    if (sel(i) == 1.0) ss += (y(i) - s.mean_y) * (y(i) - s.mean_y);
  }
  const double var = s.n > 1 ? ss / (s.n - 1) : 0.0;
  s.se_y = std::sqrt(var / s.n);
  return s;
}

inline double two_sample_z(double m1, double se1, double m0, double se0) {
  const double num = m1 - m0;
  const double den = std::sqrt(se1 * se1 + se0 * se0);
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    return num > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  }
  return num / den;
}

}  // namespace detail

inline SummaryTable summarize(const ObservationalDataset& ds) {
  SummaryTable t;
  t.n = ds.n();
  t.p = ds.p();
  Eigen::VectorXd not_a = Eigen::VectorXd::Ones(ds.n()) - ds.a;
  Eigen::VectorXd not_z = Eigen::VectorXd::Ones(ds.n()) - ds.z;
  t.by_a[1] = detail::arm_stats(ds.y, ds.a);
  t.by_a[0] = detail::arm_stats(ds.y, not_a);
  t.by_z[1] = detail::arm_stats(ds.y, ds.z);
  t.by_z[0] = detail::arm_stats(ds.y, not_z);
  for (int arm = 0; arm < 2; ++arm) {
    const ArmStats rate = detail::arm_stats(ds.a, arm == 1 ? ds.z : not_z);
    t.treat_rate[arm] = rate.mean_y;
    t.treat_rate_se[arm] = rate.se_y;
  }
  t.z_mean_by_a = detail::two_sample_z(t.by_a[1].mean_y, t.by_a[1].se_y,
                                       t.by_a[0].mean_y, t.by_a[0].se_y);
  t.z_mean_by_z = detail::two_sample_z(t.by_z[1].mean_y, t.by_z[1].se_y,
                                       t.by_z[0].mean_y, t.by_z[0].se_y);
  t.z_rate_by_z = detail::two_sample_z(t.treat_rate[1], t.treat_rate_se[1],
                                       t.treat_rate[0], t.treat_rate_se[0]);
  return t;
}

// Committed summary fixture for a dataset file.
struct DatasetManifest {
  int n = 0;
  int p = 0;
  double rate_z0 = 0.0;
  double rate_z1 = 0.0;
  double mean_y_z0 = 0.0;
  double mean_y_z1 = 0.0;
};

inline DatasetManifest manifest_of(const ObservationalDataset& ds) {
  const SummaryTable t = summarize(ds);
  DatasetManifest m;
  m.n = t.n;
  m.p = t.p;
  m.rate_z0 = t.treat_rate[0];
  m.rate_z1 = t.treat_rate[1];
  m.mean_y_z0 = t.by_z[0].mean_y;
  m.mean_y_z1 = t.by_z[1].mean_y;
  return m;
}

inline void write_manifest(const DatasetManifest& m, const std::string& path) {
  nlohmann::json j;
  j["n"] = m.n;
  j["p"] = m.p;
  j["rate_z0"] = m.rate_z0;
  j["rate_z1"] = m.rate_z1;
  j["mean_y_z0"] = m.mean_y_z0;
  j["mean_y_z1"] = m.mean_y_z1;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(2) << '\n';
}

inline DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  nlohmann::json j;
  in >> j;
  DatasetManifest m;
  m.n = j.at("n").get<int>();
  m.p = j.at("p").get<int>();
  m.rate_z0 = j.at("rate_z0").get<double>();
  m.rate_z1 = j.at("rate_z1").get<double>();
  m.mean_y_z0 = j.at("mean_y_z0").get<double>();
  m.mean_y_z1 = j.at("mean_y_z1").get<double>();
  return m;
}

}  // namespace ivbound
