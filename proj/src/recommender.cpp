#include "pmd/recommender.hpp"

#include <algorithm>
#include <cmath>

namespace pmd {

const char* fallback_name(Fallback f) {
  switch (f) {
    case Fallback::kNone: return "none";
    case Fallback::kUserMean: return "user-mean";
    case Fallback::kGlobalMean: return "global-mean";
  }
  return "?";
}

double distance_to_weight(double d, double d_max) {
  if (!(d_max > 0.0) || !(d >= 0.0) || d > d_max)
    throw InvalidDistance("distance " + std::to_string(d) +
                          " outside [0, " + std::to_string(d_max) + "]");
  return 1.0 - d / d_max;
}

double measure_weight(const MeasureResult& result, double d_max) {
  if (!result.computable) return 0.0;
  if (result.kind == MeasureKind::kDistance)
    return distance_to_weight(std::min(result.value, d_max), d_max);
  return std::max(result.value, 0.0);
}

NeighborList select_top_k(UserId target, int k,
                          std::vector<NeighborEntry> candidates) {
  NeighborList out;
  out.target = target;
  out.k_requested = k;
  std::erase_if(candidates, [](const NeighborEntry& e) { return e.weight <= 0.0; });
  const auto better = [](const NeighborEntry& a, const NeighborEntry& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.user < b.user;
  };
  const std::size_t keep = std::min<std::size_t>(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + keep,
                    candidates.end(), better);
  candidates.resize(keep);
  out.entries = std::move(candidates);
  return out;
}

NeighborList top_k_neighbors(UserId target, ItemId item, int k,
                             const MeasureInfo& measure,
                             const MeasureContext& ctx) {
  const double d_max = measure_max_distance(measure, ctx);
  std::vector<NeighborEntry> candidates;
  for (const UserId v : ctx.ratings.raters_of(item)) {
    if (v == target) continue;
    const MeasureResult r = measure.fn(target, v, ctx);
    const double w = measure_weight(r, d_max);
    if (w > 0.0) candidates.push_back({v, w});
  }
  return select_top_k(target, k, std::move(candidates));
}

Prediction predict(UserId target, ItemId item, const NeighborList& neighbors,
                   const SparseRatings& ratings) {
  Prediction p;
  p.user = target;
  p.item = item;
  const RatingScale& scale = ratings.scale();
  const auto clamp = [&](double v) {
    return std::min(scale.max_rating, std::max(scale.min_rating, v));
  };

  if (ratings.items_of(target).empty()) {
    p.fallback = Fallback::kGlobalMean;
    p.value = clamp(ratings.global_mean());
    return p;
  }
  const double target_mean = ratings.user_mean(target);
  double num = 0.0, den = 0.0;
  for (const NeighborEntry& e : neighbors.entries) {
    if (!ratings.has_rating(e.user, item)) continue;
    num += e.weight * (ratings.rating(e.user, item) - ratings.user_mean(e.user));
    den += std::abs(e.weight);
  }
  if (den <= 0.0) {
    p.fallback = Fallback::kUserMean;
    p.value = clamp(target_mean);
    return p;
  }
  p.fallback = Fallback::kNone;
  p.value = clamp(target_mean + num / den);
  return p;
}

}  // namespace pmd
