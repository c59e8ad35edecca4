#pragma once

#include <span>
#include <vector>

#include "pmd/ratings.hpp"

namespace pmd {

/// A user preference: a probability distribution over the user's rated
/// items. Masses are nonnegative and sum to 1 within 1e-12; the support is
/// duplicate-free and nonempty.
class Preference {
 public:
  Preference(std::vector<ItemId> support, std::vector<double> mass);

  int size() const { return static_cast<int>(support_.size()); }
  std::span<const ItemId> support() const { return support_; }
  std::span<const double> mass() const { return mass_; }
  ItemId item(int k) const { return support_[k]; }
  double mass_at(int k) const { return mass_[k]; }

  static constexpr double kSimplexTol = 1e-12;

 private:
  std::vector<ItemId> support_;
  std::vector<double> mass_;
};

/// Normalizes a user's ratings into a preference distribution:
/// mass(i) = R(u,i) / sum_j R(u,j), support ordered as items_of(u).
Preference build_preference(const SparseRatings& ratings, UserId user);

/// Keeps the top_t largest masses (ties broken toward lower item id) and
/// renormalizes. top_t <= 0 or >= size returns the input unchanged.
Preference truncate_preference(const Preference& p, int top_t);

}  // namespace pmd
