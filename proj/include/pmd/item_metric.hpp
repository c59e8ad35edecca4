#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pmd/ratings.hpp"

namespace pmd {

enum class MetricMode : std::uint8_t { kArccos = 0, kOneMinus = 1 };

const char* metric_mode_name(MetricMode mode);

/// Pairwise item ground distances. Implementations may materialize the
/// full table or compute distances on demand from feature vectors; both
/// sides of the interface are interchangeable.
class ItemMetric {
 public:
  virtual ~ItemMetric() = default;

  virtual int num_items() const = 0;
  virtual double distance(ItemId i, ItemId j) const = 0;
  /// The similarity the distance was derived from (cos(d) in arccos mode,
  /// 1 - d in one-minus mode).
  virtual double similarity(ItemId i, ItemId j) const = 0;
  virtual double max_distance() const = 0;
  virtual bool is_metric() const = 0;
  virtual MetricMode mode() const = 0;
};

/// Samples random triples (i, j, k) and checks
/// d(i,k) <= d(i,j) + d(j,k) + tol. Sampling, not a proof.
bool sampled_triangle_check(const ItemMetric& metric, int sample_triples = 10000,
                            double tol = 1e-9, std::uint64_t seed = 20240801);

/// Same check over a raw lower-triangular distance table.
bool sampled_triangle_check(int num_items, std::span<const double> lower_tri,
                            int sample_triples = 10000, double tol = 1e-9,
                            std::uint64_t seed = 20240801);

double cosine_of_vectors(std::span<const double> a, std::span<const double> b);

/// Materialized metric over a lower-triangular distance table.
class DenseItemMetric final : public ItemMetric {
 public:
  /// distances: lower triangle without diagonal, row-major
  /// (d(1,0), d(2,0), d(2,1), d(3,0), ...).
  DenseItemMetric(int num_items, MetricMode mode, std::vector<double> distances,
                  double max_distance, bool is_metric);

  int num_items() const override { return num_items_; }
  double distance(ItemId i, ItemId j) const override;
  double similarity(ItemId i, ItemId j) const override;
  double max_distance() const override { return max_distance_; }
  bool is_metric() const override { return is_metric_; }
  MetricMode mode() const override { return mode_; }

  std::span<const double> raw_distances() const { return distances_; }

 private:
  int num_items_;
  MetricMode mode_;
  std::vector<double> distances_;
  double max_distance_;
  bool is_metric_;
};

/// Lazy metric over per-item feature vectors: distance is derived from the
/// cosine of the two vectors on demand. Items without a feature vector are
/// isolated at max_distance from everything but themselves.
class LazyVectorMetric final : public ItemMetric {
 public:
  LazyVectorMetric(std::vector<std::vector<float>> vectors,
                   std::vector<bool> present, MetricMode mode);

  int num_items() const override { return static_cast<int>(present_.size()); }
  double distance(ItemId i, ItemId j) const override;
  double similarity(ItemId i, ItemId j) const override;
  double max_distance() const override { return max_distance_; }
  bool is_metric() const override { return mode_ == MetricMode::kArccos; }
  MetricMode mode() const override { return mode_; }

  bool has_vector(ItemId i) const { return present_[i]; }
  int missing_count() const { return missing_count_; }

 private:
  std::vector<std::vector<float>> vectors_;
  std::vector<double> norms_;
  std::vector<bool> present_;
  MetricMode mode_;
  double max_distance_;
  int missing_count_;
};

/// Builds a materialized metric from a square similarity table.
/// Requires sim(i,i) = 1, symmetry, and all values in [-1, 1]; violations
/// raise InvalidSimilarity. is_metric is set by sampled_triangle_check.
std::unique_ptr<DenseItemMetric> item_metric_from_similarity(
    const std::vector<std::vector<double>>& sim, MetricMode mode);

}  // namespace pmd
