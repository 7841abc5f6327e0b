#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ivbound/dataset.hpp"

namespace testutil {

inline ivbound::ObservationalDataset make_dataset(
    const std::vector<double>& y, const std::vector<double>& a,
    const std::vector<double>& z,
    const std::vector<std::vector<double>>& v_cols = {}) {
  ivbound::ObservationalDataset ds;
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(v_cols.size());
  ds.y.resize(n);
  ds.a.resize(n);
  ds.z.resize(n);
  ds.v.resize(n, p);
  for (int i = 0; i < n; ++i) {
    ds.y(i) = y[static_cast<std::size_t>(i)];
    ds.a(i) = a[static_cast<std::size_t>(i)];
    ds.z(i) = z[static_cast<std::size_t>(i)];
    for (int j = 0; j < p; ++j) {
      ds.v(i, j) = v_cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
  }
  for (int j = 0; j < p; ++j) {
    ds.columns.covariates.push_back("v" + std::to_string(j + 1));
  }
  return ds;
}

// Two instrument arms with constant outcome per arm and a fixed number of
// treated records: arm Z=1 has n1 rows (k1 treated, outcome y1), arm Z=0 has
// n0 rows (k0 treated, outcome y0).
inline ivbound::ObservationalDataset constant_arm_dataset(int n1, int k1, double y1,
                                                          int n0, int k0, double y0) {
  std::vector<double> y, a, z;
  for (int i = 0; i < n1; ++i) {
    y.push_back(y1);
    a.push_back(i < k1 ? 1.0 : 0.0);
    z.push_back(1.0);
  }
  for (int i = 0; i < n0; ++i) {
    y.push_back(y0);
    a.push_back(i < k0 ? 1.0 : 0.0);
    z.push_back(0.0);
  }
  return make_dataset(y, a, z);
}

// Eight records whose (A,Z) cell means are exactly additive in A and Z
// (mean = 200 + 30 A + 12 Z) with integer outcomes, so a no-interaction
// linear model reproduces the cell means without rounding error.
inline ivbound::ObservationalDataset additive_cell_dataset(double constant_v = 3.0) {
  const std::vector<double> y = {196, 200, 204, 230, 208, 216, 240, 244};
  const std::vector<double> a = {0, 0, 0, 1, 0, 0, 1, 1};
  const std::vector<double> z = {0, 0, 0, 0, 1, 1, 1, 1};
  std::vector<double> v(y.size(), constant_v);
  return make_dataset(y, a, z, {v});
}

inline std::string fixture_path(const std::string& name) {
  return std::string(IVBOUND_DATA_DIR) + "/" + name;
}

inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("ivbound_scratch_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

inline std::string scratch_file(const std::string& stem) {
  static std::atomic<int> counter{0};
  return (scratch_dir() / (stem + "_" + std::to_string(counter++))).string();
}

inline std::string write_scratch(const std::string& stem, const std::string& content) {
  const std::string path = scratch_file(stem);
  std::ofstream f(path);
  f << content;
  return path;
}

}  // namespace testutil
