#pragma once

#include <vector>

#include "pmd/coupling.hpp"
#include "pmd/item_metric.hpp"
#include "pmd/preference.hpp"

namespace pmd {

/// A balanced transportation problem: move the supply distribution onto the
/// demand distribution at minimum total cost.
struct TransportProblem {
  Preference supply;
  Preference demand;
  std::vector<double> cost;  // row-major |supply| x |demand|, nonnegative

  double cost_at(int r, int c) const {
    return cost[static_cast<std::size_t>(r) * demand.size() + c];
  }

  /// Builds the problem for two preferences with the metric restricted to
  /// their supports.
  static TransportProblem between(const Preference& supply,
                                  const Preference& demand,
                                  const ItemMetric& metric);
};

enum class SolverTag { kExact, kEntropic, kOracle };

struct TransportSolution {
  double optimal_cost = 0.0;
  Coupling coupling;
  int iterations = 0;
  SolverTag solver = SolverTag::kExact;
};

/// Marginal sums within this tolerance of 1 are renormalized; beyond it the
/// problem is rejected as infeasible.
inline constexpr double kMarginalTol = 1e-9;

/// Exact minimizer via the transportation simplex. Deterministic; the
/// returned coupling is a basic optimal solution with marginals accurate to
/// ~1e-12.
TransportSolution solve_exact(const TransportProblem& problem);

/// Entropy-regularized approximation (log-domain Sinkhorn, followed by a
/// rounding step that restores exact marginals). The returned cost
/// upper-bounds the exact optimum and approaches it as epsilon -> 0.
TransportSolution solve_entropic(const TransportProblem& problem,
                                 double epsilon, int max_iter = 20000);

}  // namespace pmd
