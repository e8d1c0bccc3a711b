#pragma once

#include <fstream>
#include <map>
#include <string>

#include "json.hpp"

#include "seps/partition/kmeans.hpp"

namespace seps::partition {

struct PartitionResult {
  ClusterAssignment clusters;
  std::map<std::size_t, double> db_scores;  // K -> Davies-Bouldin index
  bool degenerate = false;                  // all points identical; K=2 split by index
};

inline bool all_identical(const Points& points) {
  return std::all_of(points.begin(), points.end(), [&](const Point& p) { return p == points.front(); });
}

/// Runs kmeans for K = 2..k_max and keeps the K with the lowest
/// Davies-Bouldin index (smaller K on ties). The all-singletons partition
/// (K = N) scores zero by construction and is skipped when N > 2.
inline PartitionResult select_partition(const Points& points, std::size_t k_max, Rng& rng, KMeansOptions opts = {}) {
  detail::check_points(points);
  const std::size_t n = points.size();
  if (k_max < 2 || k_max > n) throw ContractViolation("select_partition: need 2 <= k_max <= number of points");

  PartitionResult out;
  if (all_identical(points)) {
    out.degenerate = true;
    out.clusters.k = 2;
    out.clusters.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.clusters.assignment[i] = std::min<std::size_t>(1, (2 * i) / n);
    out.clusters.centroids.assign(2, points.front());
    return out;
  }

  const std::size_t k_hi = n > 2 ? std::min(k_max, n - 1) : 2;
  const std::uint64_t base = rng();
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t k = 2; k <= k_hi; ++k) {
    Rng k_rng(derive_seed(base, k));
    ClusterAssignment c = kmeans(points, k, k_rng, opts);
    const double score = davies_bouldin(points, c.assignment);
    out.db_scores[k] = score;
    if (score < best_score) {
      best_score = score;
      out.clusters = std::move(c);
    }
  }
  return out;
}

/// kmeans at exactly k; k = 1 puts every agent in cluster 0.
inline ClusterAssignment forced_partition(const Points& points, std::size_t k, Rng& rng, KMeansOptions opts = {}) {
  detail::check_points(points);
  if (k < 1 || k > points.size()) throw ContractViolation("forced_partition: need 1 <= k <= number of points");
  if (k == 1) {
    ClusterAssignment c;
    c.k = 1;
    c.assignment.assign(points.size(), 0);
    c.centroids = cluster_centroids(points, c.assignment, 1);
    for (const auto& p : points) c.inertia += detail::squared_distance(p, c.centroids[0]);
    return c;
  }
  return kmeans(points, k, rng, opts);
}

inline std::size_t default_k_max(std::size_t n_agents) { return std::min<std::size_t>(n_agents, 10); }

// ---------------------------------------------------------------- JSON

inline constexpr int kPartitionFormatVersion = 1;

inline nlohmann::json partition_to_json(const PartitionResult& p, const std::string& config_hash) {
  nlohmann::json j;
  j["format_version"] = kPartitionFormatVersion;
  j["config_hash"] = config_hash;
  j["k"] = p.clusters.k;
  j["assignment"] = p.clusters.assignment;
  j["centroids"] = p.clusters.centroids;
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [k, s] : p.db_scores) scores[std::to_string(k)] = std::isfinite(s) ? nlohmann::json(s) : nlohmann::json(nullptr);
  j["db_scores"] = scores;
  j["degenerate"] = p.degenerate;
  return j;
}

inline PartitionResult partition_from_json(const nlohmann::json& j) {
  PartitionResult p;
  try {
    if (j.at("format_version").get<int>() != kPartitionFormatVersion) throw ParseError("partition: unsupported format version");
    p.clusters.k = j.at("k").get<std::size_t>();
    p.clusters.assignment = j.at("assignment").get<std::vector<std::size_t>>();
    p.clusters.centroids = j.at("centroids").get<Points>();
    for (const auto& [key, value] : j.at("db_scores").items())
      p.db_scores[std::stoul(key)] = value.is_null() ? std::numeric_limits<double>::infinity() : value.get<double>();
    p.degenerate = j.value("degenerate", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("partition: ") + e.what());
  }
  if (!p.clusters.valid()) throw ParseError("partition: assignment leaves a cluster empty or uses an out-of-range label");
  return p;
}

inline void save_partition(const std::string& path, const PartitionResult& p, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << partition_to_json(p, config_hash).dump(2) << '\n';
}

inline PartitionResult load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("partition: ") + e.what());
  }
  return partition_from_json(j);
}

}  // namespace seps::partition
