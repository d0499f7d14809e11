#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tsimpute/dataset.hpp"
#include "tsimpute/rng.hpp"

namespace test_support {

inline std::filesystem::path scratch_dir(const std::string& leaf) {
  const auto dir =
      std::filesystem::temp_directory_path() / "tsimpute_tests" / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& dir,
                                        const std::string& name,
                                        const std::string& content) {
  const auto path = dir / name;
  std::ofstream out(path);
  out << content;
  return path;
}

/// Dataset from column vectors; NaN entries become missing cells.
inline tsimpute::TimeSeriesDataset make_dataset(
    const std::vector<std::vector<double>>& columns) {
  tsimpute::TimeSeriesDataset ds;
  const auto n = static_cast<Eigen::Index>(columns.front().size());
  const auto p = static_cast<Eigen::Index>(columns.size());
  ds.values.resize(n, p);
  ds.mask.flags = tsimpute::BoolMatrix::Constant(n, p, false);
  for (Eigen::Index j = 0; j < p; ++j) {
    ds.names.push_back("v" + std::to_string(j + 1));
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = columns[static_cast<std::size_t>(j)]
                              [static_cast<std::size_t>(t)];
      ds.values(t, j) = v;
      if (std::isnan(v)) ds.mask.flags(t, j) = true;
    }
  }
  return ds;
}

inline tsimpute::TimeSeriesDataset ar1_series(std::uint64_t seed, int n,
                                              double phi,
                                              double innovation_sd = 1.0) {
  tsimpute::Rng rng(tsimpute::mix_seed(seed, 0xa51));
  tsimpute::TimeSeriesDataset ds;
  ds.values.resize(n, 1);
  ds.mask.flags = tsimpute::BoolMatrix::Constant(n, 1, false);
  ds.names = {"x"};
  double x = rng.normal() * innovation_sd / std::sqrt(1.0 - phi * phi);
  for (int t = 0; t < n; ++t) {
    ds.values(t, 0) = x;
    x = phi * x + innovation_sd * rng.normal();
  }
  return ds;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace test_support
