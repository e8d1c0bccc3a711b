#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "seps/errors.hpp"
#include "seps/rng.hpp"

namespace seps::partition {

using Point = std::vector<double>;
using Points = std::vector<Point>;

/// The map from agent index to cluster (policy) index.
struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // agent -> cluster in [0, k)
  Points centroids;
  double inertia = 0.0;  // within-cluster sum of squared distances

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t c : assignment) ++sizes[c];
    return sizes;
  }

  /// Every cluster non-empty and every label in range.
  bool valid() const {
    if (k == 0 || centroids.size() != k) return false;
    for (std::size_t c : assignment)
      if (c >= k) return false;
    const auto sizes = cluster_sizes();
    return std::none_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 0; });
  }
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

inline void check_points(const Points& points) {
  if (points.empty()) throw ContractViolation("clustering: no points");
  const std::size_t m = points.front().size();
  for (const auto& p : points)
    if (p.size() != m) throw DimensionError("clustering: points have different dimensions");
}

/// Indices sorted lexicographically by coordinates; ties by index.
inline std::vector<std::size_t> canonical_order(const Points& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  return order;
}

inline std::size_t nearest(const Point& p, const Points& centroids, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

inline Points plus_plus_seeds(const Points& pts, std::size_t k, Rng& rng) {
  Points centroids{pts[uniform_index(rng, pts.size())]};
  std::vector<double> d2(pts.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      nearest(pts[i], centroids, &d2[i]);
      total += d2[i];
    }
    std::size_t pick = uniform_index(rng, pts.size());
    if (total > 0.0) {
      const double u = uniform01(rng) * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        cum += d2[i];
        if (u < cum) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(pts[pick]);
  }
  return centroids;
}

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster.
inline void repair_empty(const Points& pts, std::vector<std::size_t>& labels, Points& centroids) {
  const std::size_t k = centroids.size();
  for (;;) {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t c : labels) ++sizes[c];
    const auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
    if (empty == sizes.end()) return;
    std::size_t far = pts.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (sizes[labels[i]] < 2) continue;
      const double d = squared_distance(pts[i], centroids[labels[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const auto c = static_cast<std::size_t>(empty - sizes.begin());
    labels[far] = c;
    centroids[c] = pts[far];
  }
}

inline void update_centroids(const Points& pts, const std::vector<std::size_t>& labels, Points& centroids) {
  const std::size_t m = pts.front().size();
  std::vector<std::size_t> sizes(centroids.size(), 0);
  for (auto& c : centroids) c.assign(m, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ++sizes[labels[i]];
    for (std::size_t d = 0; d < m; ++d) centroids[labels[i]][d] += pts[i][d];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c)
    for (double& v : centroids[c]) v /= static_cast<double>(sizes[c]);
}

inline ClusterAssignment lloyd(const Points& pts, std::size_t k, Rng& rng, std::size_t max_iterations) {
  Points centroids = plus_plus_seeds(pts, k, rng);
  std::vector<std::size_t> labels(pts.size(), 0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::vector<std::size_t> next(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) next[i] = nearest(pts[i], centroids);
    repair_empty(pts, next, centroids);
    const bool changed = next != labels || it == 0;
    labels = std::move(next);
    update_centroids(pts, labels, centroids);
    if (!changed) break;
  }
  ClusterAssignment out{k, std::move(labels), std::move(centroids), 0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) out.inertia += squared_distance(pts[i], out.centroids[out.assignment[i]]);
  return out;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding, keeping the restart with the
/// lowest inertia (earliest restart on ties).
///
/// Points are processed in a canonical (sorted) order and clusters are
/// labelled by first appearance in that order, so permuting the input only
/// permutes the returned assignment.
inline ClusterAssignment kmeans(const Points& points, std::size_t k, Rng& rng, KMeansOptions opts = {}) {
  detail::check_points(points);
  if (k < 1 || k > points.size()) throw ContractViolation("kmeans: need 1 <= k <= number of points");
  const auto order = detail::canonical_order(points);
  Points pts;
  pts.reserve(points.size());
  for (std::size_t i : order) pts.push_back(points[i]);

  std::vector<std::uint64_t> seeds(std::max<std::size_t>(opts.restarts, 1));
  for (auto& s : seeds) s = rng();

  ClusterAssignment best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::uint64_t s : seeds) {
    Rng restart_rng(s);
    ClusterAssignment cand = detail::lloyd(pts, k, restart_rng, opts.max_iterations);
    if (cand.inertia < best.inertia) best = std::move(cand);
  }

  // Relabel by first appearance in canonical order, then undo the sort.
  std::vector<std::size_t> relabel(k, k);
  std::size_t next = 0;
  for (std::size_t c : best.assignment)
    if (relabel[c] == k) relabel[c] = next++;
  ClusterAssignment out;
  out.k = k;
  out.inertia = best.inertia;
  out.centroids.resize(k);
  for (std::size_t c = 0; c < k; ++c) out.centroids[relabel[c]] = best.centroids[c];
  out.assignment.resize(points.size());
  for (std::size_t r = 0; r < order.size(); ++r) out.assignment[order[r]] = relabel[best.assignment[r]];
  return out;
}

/// Mean of each cluster; clusters must be non-empty.
inline Points cluster_centroids(const Points& points, std::span<const std::size_t> labels, std::size_t k) {
  Points centroids(k);
  std::vector<std::size_t> labels_vec(labels.begin(), labels.end());
  for (std::size_t c : labels_vec)
    if (c >= k) throw ContractViolation("cluster label out of range");
  detail::update_centroids(points, labels_vec, centroids);
  return centroids;
}

/// Davies-Bouldin index: (1/K) sum_i max_{j!=i} (s_i + s_j) / d(c_i, c_j),
/// with s_i the mean distance of cluster i's points to its centroid.
inline double davies_bouldin(const Points& points, std::span<const std::size_t> labels) {
  detail::check_points(points);
  if (labels.size() != points.size()) throw DimensionError("davies_bouldin: one label per point required");
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) throw ContractViolation("davies_bouldin: index undefined for fewer than two clusters");
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t c : labels) ++sizes[c];
  if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end())
    throw ContractViolation("davies_bouldin: empty cluster");

  const Points centroids = cluster_centroids(points, labels, k);
  std::vector<double> scatter(k, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i)
    scatter[labels[i]] += std::sqrt(detail::squared_distance(points[i], centroids[labels[i]]));
  for (std::size_t c = 0; c < k; ++c) scatter[c] /= static_cast<double>(sizes[c]);

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = std::sqrt(detail::squared_distance(centroids[i], centroids[j]));
      const double num = scatter[i] + scatter[j];
      const double ratio = d > 0.0 ? num / d : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      worst = std::max(worst, ratio);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

}  // namespace seps::partition
