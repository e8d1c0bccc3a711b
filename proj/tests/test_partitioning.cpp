#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "seps/partition/select.hpp"
#include "support.hpp"

using namespace seps;
using namespace seps::partition;

namespace {

Points blobs(const Points& centres, std::size_t per_blob, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Points pts;
  for (const auto& c : centres)
    for (std::size_t k = 0; k < per_blob; ++k) {
      Point p = c;
      for (double& x : p) x += spread * (2.0 * uniform01(rng) - 1.0);
      pts.push_back(p);
    }
  return pts;
}

std::vector<int> as_int(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::vector<int> blob_labels(std::size_t blobs, std::size_t per_blob) {
  std::vector<int> out;
  for (std::size_t b = 0; b < blobs; ++b) out.insert(out.end(), per_blob, static_cast<int>(b));
  return out;
}

/// Direct evaluation of the Davies-Bouldin definition.
double brute_db(const Points& pts, const std::vector<std::size_t>& labels) {
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1, m = pts[0].size();
  Points c(k, Point(m, 0.0));
  std::vector<double> n(k, 0.0), s(k, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    n[labels[i]] += 1;
    for (std::size_t d = 0; d < m; ++d) c[labels[i]][d] += pts[i][d];
  }
  for (std::size_t a = 0; a < k; ++a)
    for (double& x : c[a]) x /= n[a];
  auto dist = [&](const Point& x, const Point& y) {
    double t = 0;
    for (std::size_t d = 0; d < m; ++d) t += (x[d] - y[d]) * (x[d] - y[d]);
    return std::sqrt(t);
  };
  for (std::size_t i = 0; i < pts.size(); ++i) s[labels[i]] += dist(pts[i], c[labels[i]]) / n[labels[i]];
  double total = 0;
  for (std::size_t a = 0; a < k; ++a) {
    double worst = 0;
    for (std::size_t b = 0; b < k; ++b)
      if (a != b) worst = std::max(worst, (s[a] + s[b]) / dist(c[a], c[b]));
    total += worst;
  }
  return total / static_cast<double>(k);
}

}  // namespace

TEST(KMeans, KEqualsNGivesSingletons) {
  const Points pts = blobs({{0, 0}, {5, 5}}, 3, 1.0, 1);
  Rng rng(0);
  const auto c = kmeans(pts, pts.size(), rng);
  EXPECT_TRUE(c.valid());
  EXPECT_NEAR(c.inertia, 0.0, 1e-12);
  auto sorted = c.assignment;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
}

TEST(KMeans, RecoversSeparatedGroups) {
  const Points pts = blobs({{0, 0}, {100, 0}}, 6, 0.1, 2);
  Rng rng(1);
  const auto c = kmeans(pts, 2, rng);
  EXPECT_DOUBLE_EQ(oracle::adjusted_rand_index(as_int(c.assignment), blob_labels(2, 6)), 1.0);
}

TEST(KMeans, BeatsRandomAssignments) {
  Rng data(3);
  Points pts(12, Point(5));
  for (auto& p : pts)
    for (double& x : p) x = standard_normal(data);
  Rng rng(4);
  const auto c = kmeans(pts, 3, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> labels(12);
    for (std::size_t i = 0; i < 12; ++i) labels[i] = i < 3 ? i : uniform_index(data, 3);  // every cluster used
    const Points cent = cluster_centroids(pts, labels, 3);
    double inertia = 0;
    for (std::size_t i = 0; i < 12; ++i) inertia += detail::squared_distance(pts[i], cent[labels[i]]);
    EXPECT_LE(c.inertia, inertia + 1e-9);
  }
}

TEST(KMeans, Errors) {
  Rng rng(0);
  EXPECT_THROW(kmeans({{0.0}, {1.0}}, 3, rng), ContractViolation);
  EXPECT_THROW(kmeans({{0.0}, {1.0}}, 0, rng), ContractViolation);
  EXPECT_THROW(kmeans({}, 1, rng), ContractViolation);
  EXPECT_THROW(kmeans({{0.0, 1.0}, {1.0}}, 1, rng), DimensionError);
}

TEST(KMeans, DeterministicAndPermutationEquivariant) {
  const Points pts = blobs({{0, 0, 0}, {3, 0, 1}, {0, 4, 2}}, 5, 1.5, 5);
  Rng a(7), b(7);
  const auto ca = kmeans(pts, 3, a);
  EXPECT_EQ(ca.assignment, kmeans(pts, 3, b).assignment);

  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffle(8);
  std::shuffle(perm.begin(), perm.end(), shuffle);
  Points permuted;
  for (std::size_t i : perm) permuted.push_back(pts[i]);
  Rng c(7);
  const auto cp = kmeans(permuted, 3, c);
  for (std::size_t r = 0; r < perm.size(); ++r) EXPECT_EQ(cp.assignment[r], ca.assignment[perm[r]]);
}

TEST(KMeans, ScaleInvariant) {
  const Points pts = blobs({{0, 0}, {2, 1}, {1, 3}}, 4, 1.0, 9);
  Points scaled = pts;
  for (auto& p : scaled)
    for (double& x : p) x *= 37.5;
  Rng a(1), b(1);
  EXPECT_EQ(kmeans(pts, 3, a).assignment, kmeans(scaled, 3, b).assignment);
  Rng c(2), d(2);
  EXPECT_EQ(select_partition(pts, 6, c).clusters.k, select_partition(scaled, 6, d).clusters.k);
}

TEST(DaviesBouldin, HandValues) {
  const Points pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  EXPECT_NEAR(davies_bouldin(pts, labels), 0.1, 1e-12);
  const std::vector<std::size_t> singles{0, 1};
  EXPECT_DOUBLE_EQ(davies_bouldin({{0, 0}, {3, 4}}, singles), 0.0);
  const std::vector<std::size_t> one{0, 0};
  EXPECT_THROW(davies_bouldin({{0, 0}, {3, 4}}, one), ContractViolation);
}

TEST(DaviesBouldin, MatchesDefinition) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 6 + uniform_index(rng, 10), k = 2 + uniform_index(rng, 3);
    Points pts(n, Point(3));
    for (auto& p : pts)
      for (double& x : p) x = standard_normal(rng);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i < k ? i : uniform_index(rng, k);
    EXPECT_NEAR(davies_bouldin(pts, labels), brute_db(pts, labels), 1e-10);
  }
}

TEST(SelectPartition, FindsBlobCount) {
  const Points pts = blobs({{0, 0, 0}, {10, 0, 0}, {0, 10, 0}}, 6, 0.5, 12);
  Rng rng(13);
  const auto p = select_partition(pts, 8, rng);
  EXPECT_EQ(p.clusters.k, 3u);
  EXPECT_TRUE(p.clusters.valid());
  EXPECT_DOUBLE_EQ(oracle::adjusted_rand_index(as_int(p.clusters.assignment), blob_labels(3, 6)), 1.0);
  EXPECT_EQ(p.db_scores.size(), 7u);  // K = 2..8
  EXPECT_FALSE(p.degenerate);
}

TEST(SelectPartition, KMaxTwo) {
  const Points pts = blobs({{0, 0}, {20, 20}}, 5, 0.5, 14);
  Rng rng(15);
  EXPECT_EQ(select_partition(pts, 2, rng).clusters.k, 2u);
}

TEST(SelectPartition, AlwaysValidOnRandomInputs) {
  Rng rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + uniform_index(rng, 20);
    Points pts(n, Point(2));
    for (auto& p : pts)
      for (double& x : p) x = std::round(3 * standard_normal(rng));  // duplicates are likely
    if (all_identical(pts)) continue;
    const auto p = select_partition(pts, std::min<std::size_t>(n, 10), rng);
    EXPECT_TRUE(p.clusters.valid());
    EXPECT_GE(p.clusters.k, 2u);
    EXPECT_LT(p.clusters.k, n);
  }
}

TEST(SelectPartition, IdenticalPointsAreFlagged) {
  const Points pts(6, Point{1.0, 2.0});
  Rng rng(0);
  const auto p = select_partition(pts, 4, rng);
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.clusters.k, 2u);
  EXPECT_TRUE(p.clusters.valid());
}

TEST(SelectPartition, Errors) {
  Rng rng(0);
  EXPECT_THROW(select_partition({{0.0}, {1.0}}, 1, rng), ContractViolation);
  EXPECT_THROW(select_partition({{0.0}, {1.0}}, 3, rng), ContractViolation);
}

TEST(ForcedPartition, ExtremeK) {
  const Points pts = blobs({{0, 0}, {4, 4}, {8, 0}}, 3, 1.0, 17);
  Rng rng(18);
  const auto one = forced_partition(pts, 1, rng);
  EXPECT_EQ(one.k, 1u);
  EXPECT_EQ(one.assignment, std::vector<std::size_t>(9, 0));
  const auto all = forced_partition(pts, 9, rng);
  EXPECT_TRUE(all.valid());
  EXPECT_NEAR(all.inertia, 0.0, 1e-12);
  for (std::size_t k : {2u, 3u, 6u}) EXPECT_EQ(forced_partition(pts, k, rng).cluster_sizes().size(), k);
  EXPECT_THROW(forced_partition(pts, 10, rng), ContractViolation);
}

TEST(PartitionJson, RoundTrip) {
  const Points pts = blobs({{0, 0}, {9, 9}}, 4, 0.3, 19);
  Rng rng(20);
  const auto p = select_partition(pts, 5, rng);
  const auto path = std::filesystem::temp_directory_path() / "seps_partition_roundtrip.json";
  save_partition(path.string(), p, "cafe");
  const auto q = load_partition(path.string());
  EXPECT_EQ(q.clusters.k, p.clusters.k);
  EXPECT_EQ(q.clusters.assignment, p.clusters.assignment);
  EXPECT_EQ(q.clusters.centroids, p.clusters.centroids);
  EXPECT_EQ(q.db_scores, p.db_scores);
  std::filesystem::remove(path);
}

TEST(PartitionJson, RejectsMalformedInput) {
  const auto path = std::filesystem::temp_directory_path() / "seps_partition_bad.json";
  {
    std::ofstream(path) << "{\"format_version\": 1, \"k\": ";
  }
  EXPECT_THROW(load_partition(path.string()), ParseError);
  nlohmann::json j = {{"format_version", 1}, {"k", 3}, {"assignment", {0, 1, 1}},
                      {"centroids", {{0.0}, {1.0}, {2.0}}}, {"db_scores", nlohmann::json::object()}};
  EXPECT_THROW(partition_from_json(j), ParseError);  // cluster 2 empty
  j["format_version"] = 2;
  EXPECT_THROW(partition_from_json(j), ParseError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_partition(path.string()), std::runtime_error);
}
