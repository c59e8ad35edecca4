#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmd/errors.hpp"

namespace pmd {

using UserId = std::int32_t;
using ItemId = std::int32_t;

struct RatingScale {
  double min_rating = 1.0;
  double max_rating = 5.0;
  double range() const { return max_rating - min_rating; }
};

struct RatingEntry {
  UserId user;
  ItemId item;
  double value;
};

/// Immutable sparse user-item rating matrix in CSR layout, with a
/// user-per-item reverse index and per-user statistics precomputed at
/// construction. User and item ids are dense indices in
/// [0, num_users) x [0, num_items).
class SparseRatings {
 public:
  /// Duplicate (user, item) entries keep the last occurrence;
  /// duplicates_dropped() reports how many were discarded.
  SparseRatings(int num_users, int num_items, std::vector<RatingEntry> entries,
                RatingScale scale = {});

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  std::size_t num_entries() const { return items_.size(); }
  const RatingScale& scale() const { return scale_; }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  /// Rated items of a user, ascending by item id.
  std::span<const ItemId> items_of(UserId u) const;
  /// Ratings parallel to items_of(u).
  std::span<const double> values_of(UserId u) const;
  /// Users who rated an item, ascending by user id.
  std::span<const UserId> raters_of(ItemId i) const;

  bool has_rating(UserId u, ItemId i) const;
  /// Stored rating, or 0 when absent.
  double rating(UserId u, ItemId i) const;

  double user_sum(UserId u) const { return check_user(u), user_sum_[u]; }
  double user_mean(UserId u) const { return check_user(u), user_mean_[u]; }
  /// Population standard deviation of the user's ratings.
  double user_stddev(UserId u) const { return check_user(u), user_std_[u]; }
  double global_mean() const { return global_mean_; }

  std::vector<RatingEntry> entries() const;

 private:
  void check_user(UserId u) const;
  void check_item(ItemId i) const;

  int num_users_ = 0;
  int num_items_ = 0;
  RatingScale scale_;
  std::size_t duplicates_dropped_ = 0;

  std::vector<std::size_t> user_offsets_;  // num_users_ + 1
  std::vector<ItemId> items_;
  std::vector<double> values_;

  std::vector<std::size_t> item_offsets_;  // num_items_ + 1
  std::vector<UserId> raters_;

  std::vector<double> user_sum_;
  std::vector<double> user_mean_;
  std::vector<double> user_std_;
  double global_mean_ = 0.0;
};

}  // namespace pmd
