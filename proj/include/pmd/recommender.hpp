#pragma once

#include <vector>

#include "pmd/measures.hpp"
#include "pmd/ratings.hpp"

namespace pmd {

struct NeighborEntry {
  UserId user;
  double weight;  // > 0
};

/// Ranked neighbors of a target user: weight descending, ties broken by
/// ascending user id, at most k entries.
struct NeighborList {
  UserId target = -1;
  int k_requested = 0;
  std::vector<NeighborEntry> entries;
};

enum class Fallback { kNone, kUserMean, kGlobalMean };

const char* fallback_name(Fallback f);

struct Prediction {
  UserId user = -1;
  ItemId item = -1;
  double value = 0.0;
  Fallback fallback = Fallback::kNone;
};

/// 1 - d / d_max, strictly decreasing on [0, d_max].
double distance_to_weight(double d, double d_max);

/// Weight of a measure score: distances through distance_to_weight,
/// similarities used directly with negatives clamped to zero.
/// Uncomputable results get weight 0.
double measure_weight(const MeasureResult& result, double d_max);

/// Keeps the top k candidates by weight (descending, ties by ascending user
/// id); candidates with weight <= 0 are dropped first.
NeighborList select_top_k(UserId target, int k,
                          std::vector<NeighborEntry> candidates);

/// Neighbors of `target` for predicting `item`: users who rated the item,
/// scored with the given measure. May return fewer than k entries.
NeighborList top_k_neighbors(UserId target, ItemId item, int k,
                             const MeasureInfo& measure,
                             const MeasureContext& ctx);

/// Mean-centered prediction,
///   r_hat = mean(u) + sum_v w * (r_vi - mean(v)) / sum_v |w|,
/// clamped to the rating scale. Empty neighbor lists fall back to the user's
/// training mean, users without training ratings to the global mean.
Prediction predict(UserId target, ItemId item, const NeighborList& neighbors,
                   const SparseRatings& ratings);

}  // namespace pmd
