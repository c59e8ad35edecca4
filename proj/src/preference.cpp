#include "pmd/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmd {

Preference::Preference(std::vector<ItemId> support, std::vector<double> mass)
    : support_(std::move(support)), mass_(std::move(mass)) {
  if (support_.empty()) throw DegenerateUser("preference support is empty");
  if (support_.size() != mass_.size())
    throw DegenerateUser("support/mass size mismatch");
  double sum = 0.0;
  for (double m : mass_) {
    if (!(m >= 0.0 && m <= 1.0))
      throw DegenerateUser("preference mass outside [0, 1]");
    sum += m;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw DegenerateUser("preference masses sum to " + std::to_string(sum));
  std::vector<ItemId> sorted = support_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DegenerateUser("duplicate item in preference support");
}

Preference build_preference(const SparseRatings& ratings, UserId user) {
  const auto items = ratings.items_of(user);
  const auto values = ratings.values_of(user);
  if (items.empty())
    throw DegenerateUser("user " + std::to_string(user) + " has no ratings");
  const double sum = ratings.user_sum(user);
  if (sum <= 0.0)
    throw DegenerateUser("user " + std::to_string(user) +
                         " has an all-zero rating sum");
  std::vector<double> mass(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) mass[k] = values[k] / sum;
  // Guard against accumulated rounding: renormalize so the sum is exact.
  double check = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= check;
  return Preference(std::vector<ItemId>(items.begin(), items.end()),
                    std::move(mass));
}

Preference truncate_preference(const Preference& p, int top_t) {
  if (top_t <= 0 || top_t >= p.size()) return p;
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (p.mass_at(a) != p.mass_at(b)) return p.mass_at(a) > p.mass_at(b);
    return p.item(a) < p.item(b);
  });
  order.resize(top_t);
  std::sort(order.begin(), order.end());  // keep original support order
  std::vector<ItemId> support(top_t);
  std::vector<double> mass(top_t);
  double sum = 0.0;
  for (int k = 0; k < top_t; ++k) {
    support[k] = p.item(order[k]);
    mass[k] = p.mass_at(order[k]);
    sum += mass[k];
  }
  for (double& m : mass) m /= sum;
  return Preference(std::move(support), std::move(mass));
}

}  // namespace pmd
