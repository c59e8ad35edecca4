#include "pmd/item_metric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pmd {

const char* metric_mode_name(MetricMode mode) {
  return mode == MetricMode::kArccos ? "arccos" : "one-minus";
}

double cosine_of_vectors(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DegenerateVector("vector dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVector("zero feature vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

template <typename DistFn>
bool sample_triples(int n, int sample_triples, double tol, std::uint64_t seed,
                    DistFn&& dist) {
  if (n < 3) return true;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int t = 0; t < sample_triples; ++t) {
    const int i = pick(rng), j = pick(rng), k = pick(rng);
    if (dist(i, k) > dist(i, j) + dist(j, k) + tol) return false;
  }
  return true;
}

}  // namespace

bool sampled_triangle_check(const ItemMetric& metric, int sample_triples_count,
                            double tol, std::uint64_t seed) {
  return sample_triples(metric.num_items(), sample_triples_count, tol, seed,
                        [&](int i, int j) { return metric.distance(i, j); });
}

bool sampled_triangle_check(int num_items, std::span<const double> lower_tri,
                            int sample_triples_count, double tol,
                            std::uint64_t seed) {
  return sample_triples(num_items, sample_triples_count, tol, seed,
                        [&](int i, int j) {
                          if (i == j) return 0.0;
                          if (i < j) std::swap(i, j);
                          return static_cast<double>(
                              lower_tri[static_cast<std::size_t>(i) * (i - 1) / 2 + j]);
                        });
}

namespace {

std::size_t tri_index(ItemId i, ItemId j) {
  // caller guarantees i > j
  return static_cast<std::size_t>(i) * (i - 1) / 2 + j;
}

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

double sim_to_distance(double sim, MetricMode mode) {
  return mode == MetricMode::kArccos ? std::acos(clamp_unit(sim)) : 1.0 - sim;
}

double distance_to_sim(double d, MetricMode mode) {
  return mode == MetricMode::kArccos ? std::cos(d) : 1.0 - d;
}

}  // namespace

DenseItemMetric::DenseItemMetric(int num_items, MetricMode mode,
                                 std::vector<double> distances,
                                 double max_distance, bool is_metric)
    : num_items_(num_items),
      mode_(mode),
      distances_(std::move(distances)),
      max_distance_(max_distance),
      is_metric_(is_metric) {
  const std::size_t expected =
      static_cast<std::size_t>(num_items) * (num_items - 1) / 2;
  if (distances_.size() != expected)
    throw InvalidSimilarity("distance table size mismatch");
}

double DenseItemMetric::distance(ItemId i, ItemId j) const {
  if (i == j) return 0.0;
  if (i < j) std::swap(i, j);
  return distances_[tri_index(i, j)];
}

double DenseItemMetric::similarity(ItemId i, ItemId j) const {
  return distance_to_sim(distance(i, j), mode_);
}

LazyVectorMetric::LazyVectorMetric(std::vector<std::vector<float>> vectors,
                                   std::vector<bool> present, MetricMode mode)
    : vectors_(std::move(vectors)), present_(std::move(present)), mode_(mode) {
  if (vectors_.size() != present_.size())
    throw InvalidSimilarity("vector/presence size mismatch");
  norms_.resize(vectors_.size(), 0.0);
  missing_count_ = 0;
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    if (!present_[i]) {
      ++missing_count_;
      continue;
    }
    double sq = 0.0;
    for (float v : vectors_[i]) sq += static_cast<double>(v) * v;
    if (sq == 0.0) {  // an all-zero genome row carries no information
      present_[i] = false;
      ++missing_count_;
      continue;
    }
    norms_[i] = std::sqrt(sq);
  }
  // Feature vectors are nonnegative, so cosines live in [0, 1] and arccos
  // distances in [0, pi/2]. The isolation distance for items without a
  // vector doubles as the overall bound, and cos(pi/2) = 0 keeps their
  // similarity neutral.
  max_distance_ = mode_ == MetricMode::kArccos ? std::acos(0.0) : 1.0;
}

double LazyVectorMetric::similarity(ItemId i, ItemId j) const {
  if (i == j) return 1.0;
  if (!present_[i] || !present_[j])
    return distance_to_sim(max_distance_, mode_);
  const auto& a = vectors_[i];
  const auto& b = vectors_[j];
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    dot += static_cast<double>(a[k]) * b[k];
  return clamp_unit(dot / (norms_[i] * norms_[j]));
}

double LazyVectorMetric::distance(ItemId i, ItemId j) const {
  if (i == j) return 0.0;
  if (!present_[i] || !present_[j]) return max_distance_;
  return sim_to_distance(similarity(i, j), mode_);
}

std::unique_ptr<DenseItemMetric> item_metric_from_similarity(
    const std::vector<std::vector<double>>& sim, MetricMode mode) {
  const int n = static_cast<int>(sim.size());
  double min_sim = 1.0;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sim[i].size()) != n)
      throw InvalidSimilarity("similarity table is not square");
    if (std::abs(sim[i][i] - 1.0) > 1e-12)
      throw InvalidSimilarity("self-similarity must be 1");
    for (int j = 0; j < n; ++j) {
      if (!(sim[i][j] >= -1.0 && sim[i][j] <= 1.0))
        throw InvalidSimilarity("similarity outside [-1, 1]");
      if (std::abs(sim[i][j] - sim[j][i]) > 1e-12)
        throw InvalidSimilarity("similarity table is asymmetric");
      min_sim = std::min(min_sim, sim[i][j]);
    }
  }
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j)
      distances.push_back(sim_to_distance(sim[i][j], mode));
  const double d_max =
      mode == MetricMode::kArccos ? std::acos(-1.0) : 1.0 - min_sim;
  const bool verified = sampled_triangle_check(n, distances);
  return std::make_unique<DenseItemMetric>(n, mode, std::move(distances), d_max,
                                           verified);
}

}  // namespace pmd
