#pragma once

#include <vector>

#include "pmd/preference.hpp"

namespace pmd {

/// A joint distribution over the item pairs of two preference supports.
/// Row marginals follow the supply preference, column marginals the demand.
struct Coupling {
  std::vector<ItemId> row_items;
  std::vector<ItemId> col_items;
  std::vector<double> weights;  // row-major |row_items| x |col_items|

  int rows() const { return static_cast<int>(row_items.size()); }
  int cols() const { return static_cast<int>(col_items.size()); }
  double at(int r, int c) const { return weights[static_cast<std::size_t>(r) * col_items.size() + c]; }
};

struct CouplingAudit {
  double max_row_error = 0.0;  // |row sum - supply mass|, worst row
  double max_col_error = 0.0;
  double min_weight = 0.0;
  double max_weight = 0.0;
  double total_mass = 0.0;

  bool feasible(double tol = 1e-9) const {
    return max_row_error <= tol && max_col_error <= tol &&
           min_weight >= -tol && total_mass >= 1.0 - tol &&
           total_mass <= 1.0 + tol;
  }
};

CouplingAudit audit_coupling(const Coupling& coupling, const Preference& supply,
                             const Preference& demand);

}  // namespace pmd
