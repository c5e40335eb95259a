#include "dynasto/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dynasto::stats {

namespace {

double u_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  return u;
}

// Exact two-sided p: the fraction of group assignments whose U deviates
// from nm/2 at least as much as the observed one.
double exact_p(const std::vector<double>& pooled, int n, double u_obs) {
  const int total = static_cast<int>(pooled.size());
  const double mid = 0.5 * n * (total - n);
  const double dev = std::abs(u_obs - mid) - 1e-12;

  std::vector<int> comb(n);
  for (int i = 0; i < n; ++i) comb[i] = i;
  long count = 0, hits = 0;
  while (true) {
    ++count;
    std::vector<char> in_a(total, 0);
    for (int i : comb) in_a[i] = 1;
    double u = 0.0;
    for (int i = 0; i < total; ++i) {
      if (!in_a[i]) continue;
      for (int j = 0; j < total; ++j) {
        if (in_a[j]) continue;
        if (pooled[i] > pooled[j]) u += 1.0;
        else if (pooled[i] == pooled[j]) u += 0.5;
      }
    }
    if (std::abs(u - mid) >= dev) ++hits;

    // next combination
    int k = n - 1;
    while (k >= 0 && comb[k] == total - n + k) --k;
    if (k < 0) break;
    ++comb[k];
    for (int j = k + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
  }
  return static_cast<double>(hits) / static_cast<double>(count);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

MannWhitneyResult mann_whitney_u(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("mann_whitney_u: empty sample");
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  MannWhitneyResult res;
  res.u = u_statistic(a, b);

  if (n < 8 && m < 8) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    res.p = exact_p(pooled, n, res.u);
    res.exact = true;
    return res;
  }

  const double nm = static_cast<double>(n) * m;
  const double total = n + m;
  std::map<double, int> ties;
  for (double x : a) ++ties[x];
  for (double x : b) ++ties[x];
  double tie_term = 0.0;
  for (const auto& [v, t] : ties)
    tie_term += static_cast<double>(t) * t * t - t;
  const double var =
      nm / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;
    return res;
  }
  const double diff = res.u - nm / 2.0;
  const double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);
  const double z = (diff + cc) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
  return res;
}

double cliffs_delta(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("cliffs_delta: empty sample");
  long greater = 0, less = 0;
  for (double x : a)
    for (double y : b) {
      if (x > y) ++greater;
      else if (x < y) ++less;
    }
  return static_cast<double>(greater - less) /
         (static_cast<double>(a.size()) * b.size());
}

std::string effect_size_band(double delta) {
  const double d = std::abs(delta);
  if (d < 0.147) return "negligible";
  if (d < 0.33) return "small";
  if (d < 0.474) return "medium";
  return "large";
}

std::string significance_stars(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string effect_dots(double delta) {
  const std::string band = effect_size_band(delta);
  if (band == "large") return "..";
  if (band == "medium") return ".";
  return "";
}

}  // namespace dynasto::stats
