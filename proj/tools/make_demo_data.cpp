// Generates the bundled demo dataset: an hourly air-quality-style panel of
// six correlated sensor channels driven by a shared pollution process with
// daily cycles plus per-channel autocorrelated drift. Values are rounded to
// instrument-style precision and every row is complete. Deterministic.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tsimpute/csv.hpp"
#include "tsimpute/rng.hpp"

namespace {

constexpr int kRows = 863;
constexpr double kTwoPi = 6.283185307179586;

std::string hourly_stamp(int hour_offset) {
  // Start at 2004-03-10 18:00, stepping one hour per row.
  const int total_hours = 18 + hour_offset;
  const int day = 10 + total_hours / 24;
  const int hour = total_hours % 24;
  // March 2004 has 31 days; roll into April/May as needed.
  int d = day, month = 3;
  while (true) {
    const int len = month == 3 ? 31 : month == 4 ? 30 : 31;
    if (d <= len) break;
    d -= len;
    ++month;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "2004-%02d-%02d %02d:00:00", month, d, hour);
  return buf;
}

double ar1_step(double prev, double phi, double innovation_sd,
                tsimpute::Rng& rng) {
  return phi * prev + innovation_sd * rng.normal();
}

std::string fmt(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : "data";
  tsimpute::Rng rng(20040310);

  // Shared pollution level and a temperature driver, both with daily
  // structure; six channels load on them with autocorrelated
  // channel-specific drift.
  std::vector<double> f(kRows), g(kRows);
  std::vector<std::vector<double>> idio(6, std::vector<double>(kRows));
  double f_ar = 0.0, g_ar = 0.0;
  std::vector<double> e(6, 0.0);
  for (int t = 0; t < kRows; ++t) {
    const double hour = static_cast<double>((18 + t) % 24);
    const double day_phase = kTwoPi * hour / 24.0;
    const double traffic = 0.85 * std::sin(day_phase - 1.1) +
                           0.45 * std::sin(2.0 * day_phase + 0.6);
    f_ar = ar1_step(f_ar, 0.97, 0.22, rng);
    g_ar = ar1_step(g_ar, 0.97, 0.18, rng);
    f[t] = traffic + f_ar;
    g[t] = 0.9 * std::sin(day_phase - 2.3) + g_ar;
    for (int c = 0; c < 6; ++c) {
      e[static_cast<std::size_t>(c)] =
          ar1_step(e[static_cast<std::size_t>(c)], 0.96, 0.10, rng);
      idio[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] =
          e[static_cast<std::size_t>(c)];
    }
  }

  std::ostringstream out;
  out << "Date_Time,CO(GT),PT08.S1(CO),NMHC(GT),C6H6(GT),PT08.S2(NMHC),T\n";
  for (int t = 0; t < kRows; ++t) {
    const double co = 2.10 + 1.15 * f[t] + 0.85 * idio[0][t];
    const double s1 = 1095.0 + 175.0 * f[t] + 28.0 * g[t] + 290.0 * idio[1][t];
    const double nmhc = 218.0 + 160.0 * f[t] + 85.0 * idio[2][t];
    const double c6h6 = 10.4 + 6.1 * f[t] + 3.3 * idio[3][t];
    const double s2 = 936.0 + 215.0 * f[t] + 330.0 * idio[4][t];
    const double temp = 17.8 + 6.9 * g[t] + 1.9 * idio[5][t];
    out << hourly_stamp(t) << ',' << fmt(co, 1) << ',' << fmt(s1, 0) << ','
        << fmt(nmhc, 0) << ',' << fmt(c6h6, 1) << ',' << fmt(s2, 0) << ','
        << fmt(temp, 1) << '\n';
  }

  const auto path = out_dir / "airquality_like.csv";
  tsimpute::csv::write_text_atomic(path, out.str());
  std::cout << "wrote " << path.string() << " (" << kRows << " rows)\n";
  return 0;
}
