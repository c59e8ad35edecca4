#include "pmd/coupling.hpp"

#include <cmath>

namespace pmd {

CouplingAudit audit_coupling(const Coupling& coupling, const Preference& supply,
                             const Preference& demand) {
  const int m = coupling.rows();
  const int n = coupling.cols();
  CouplingAudit audit;
  if (m == 0 || n == 0) return audit;
  audit.min_weight = coupling.weights[0];
  audit.max_weight = coupling.weights[0];

  std::vector<double> col_sum(n, 0.0);
  for (int r = 0; r < m; ++r) {
    double row_sum = 0.0;
    for (int c = 0; c < n; ++c) {
      const double w = coupling.at(r, c);
      row_sum += w;
      col_sum[c] += w;
      audit.min_weight = std::min(audit.min_weight, w);
      audit.max_weight = std::max(audit.max_weight, w);
      audit.total_mass += w;
    }
    audit.max_row_error =
        std::max(audit.max_row_error, std::abs(row_sum - supply.mass_at(r)));
  }
  for (int c = 0; c < n; ++c)
    audit.max_col_error =
        std::max(audit.max_col_error, std::abs(col_sum[c] - demand.mass_at(c)));
  return audit;
}

}  // namespace pmd
