#pragma once
// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <vector>

namespace oracle {

/// Central finite-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double old = x[i];
    x[i] = old + h;
    const double fp = f(x);
    x[i] = old - h;
    const double fm = f(x);
    x[i] = old;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

/// ||a - b|| / (||a|| + ||b||): the usual gradient-check statistic. Element-wise
/// ratios are dominated by finite-difference roundoff on near-zero entries.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

/// max_i |a_i - b_i| / max(|a_i| + |b_i|, floor)
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-7) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(a[i]) + std::abs(b[i]), floor));
  return worst;
}

/// Naive triple-loop product of row-major matrices.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t n,
                                  std::size_t k, std::size_t m) {
  std::vector<double> c(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < k; ++l) c[i * m + j] += a[i * k + l] * b[l * m + j];
  return c;
}

inline double choose2(double n) { return n * (n - 1) / 2; }

/// Adjusted Rand index from the contingency table.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> nij;
  std::map<int, double> ai, bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : nij) index += choose2(v);
  for (const auto& [k, v] : ai) sa += choose2(v);
  for (const auto& [k, v] : bj) sb += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

/// Mean silhouette coefficient (Euclidean).
inline double silhouette(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels) {
  auto dist = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0;
    for (std::size_t d = 0; d < x.size(); ++d) s += (x[d] - y[d]) * (x[d] - y[d]);
    return std::sqrt(s);
  };
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) {
        acc[labels[j]].first += dist(pts[i], pts[j]);
        acc[labels[j]].second += 1;
      }
    const auto own = acc[labels[i]];
    if (own.second == 0) continue;  // singleton: s = 0
    const double a = own.first / own.second;
    double b = INFINITY;
    for (const auto& [l, v] : acc)
      if (l != labels[i] && v.second) b = std::min(b, v.first / v.second);
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(pts.size());
}

}  // namespace oracle
