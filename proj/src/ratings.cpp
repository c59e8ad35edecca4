#include "pmd/ratings.hpp"

#include <algorithm>
#include <cmath>

namespace pmd {

SparseRatings::SparseRatings(int num_users, int num_items,
                             std::vector<RatingEntry> entries,
                             RatingScale scale)
    : num_users_(num_users), num_items_(num_items), scale_(scale) {
  if (num_users < 0 || num_items < 0)
    throw InvalidRating("negative matrix dimensions");
  if (scale.min_rating < 0.0 || scale.max_rating < scale.min_rating)
    throw InvalidRating("rating scale must satisfy 0 <= min <= max");

  for (const auto& e : entries) {
    if (e.user < 0 || e.user >= num_users || e.item < 0 || e.item >= num_items)
      throw InvalidRating("rating entry outside matrix dimensions");
    if (!(e.value >= scale.min_rating && e.value <= scale.max_rating))
      throw InvalidRating("rating " + std::to_string(e.value) +
                          " outside scale [" +
                          std::to_string(scale.min_rating) + ", " +
                          std::to_string(scale.max_rating) + "]");
  }

  // Stable sort so that for duplicate (user, item) pairs the last input
  // occurrence wins.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const RatingEntry& a, const RatingEntry& b) {
                     return a.user != b.user ? a.user < b.user : a.item < b.item;
                   });
  std::size_t kept = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i + 1 < entries.size() && entries[i + 1].user == entries[i].user &&
        entries[i + 1].item == entries[i].item) {
      ++duplicates_dropped_;
      continue;
    }
    entries[kept++] = entries[i];
  }
  entries.resize(kept);

  user_offsets_.assign(static_cast<std::size_t>(num_users_) + 1, 0);
  items_.resize(entries.size());
  values_.resize(entries.size());
  for (const auto& e : entries) ++user_offsets_[e.user + 1];
  for (int u = 0; u < num_users_; ++u) user_offsets_[u + 1] += user_offsets_[u];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    items_[i] = entries[i].item;
    values_[i] = entries[i].value;
  }

  item_offsets_.assign(static_cast<std::size_t>(num_items_) + 1, 0);
  for (const auto& e : entries) ++item_offsets_[e.item + 1];
  for (int i = 0; i < num_items_; ++i) item_offsets_[i + 1] += item_offsets_[i];
  raters_.resize(entries.size());
  {
    std::vector<std::size_t> cursor(item_offsets_.begin(),
                                    item_offsets_.end() - 1);
    for (const auto& e : entries) raters_[cursor[e.item]++] = e.user;
  }

  user_sum_.assign(num_users_, 0.0);
  user_mean_.assign(num_users_, 0.0);
  user_std_.assign(num_users_, 0.0);
  double total = 0.0;
  for (int u = 0; u < num_users_; ++u) {
    const auto vals = values_of(u);
    if (vals.empty()) continue;
    double sum = 0.0;
    for (double v : vals) sum += v;
    user_sum_[u] = sum;
    total += sum;
    const double mean = sum / static_cast<double>(vals.size());
    user_mean_[u] = mean;
    double sq = 0.0;
    for (double v : vals) sq += (v - mean) * (v - mean);
    user_std_[u] = std::sqrt(sq / static_cast<double>(vals.size()));
  }
  global_mean_ = entries.empty() ? 0.0 : total / static_cast<double>(entries.size());
}

void SparseRatings::check_user(UserId u) const {
  if (u < 0 || u >= num_users_)
    throw NotFound("user " + std::to_string(u) + " out of range");
}

void SparseRatings::check_item(ItemId i) const {
  if (i < 0 || i >= num_items_)
    throw NotFound("item " + std::to_string(i) + " out of range");
}

std::span<const ItemId> SparseRatings::items_of(UserId u) const {
  check_user(u);
  return {items_.data() + user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]};
}

std::span<const double> SparseRatings::values_of(UserId u) const {
  check_user(u);
  return {values_.data() + user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]};
}

std::span<const UserId> SparseRatings::raters_of(ItemId i) const {
  check_item(i);
  return {raters_.data() + item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]};
}

bool SparseRatings::has_rating(UserId u, ItemId i) const {
  const auto items = items_of(u);
  return std::binary_search(items.begin(), items.end(), i);
}

double SparseRatings::rating(UserId u, ItemId i) const {
  const auto items = items_of(u);
  const auto it = std::lower_bound(items.begin(), items.end(), i);
  if (it == items.end() || *it != i) return 0.0;
  return values_of(u)[static_cast<std::size_t>(it - items.begin())];
}

std::vector<RatingEntry> SparseRatings::entries() const {
  std::vector<RatingEntry> out;
  out.reserve(num_entries());
  for (int u = 0; u < num_users_; ++u) {
    const auto items = items_of(u);
    const auto vals = values_of(u);
    for (std::size_t k = 0; k < items.size(); ++k)
      out.push_back({u, items[k], vals[k]});
  }
  return out;
}

}  // namespace pmd
