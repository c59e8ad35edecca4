#include "pmd/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pmd {

TransportProblem TransportProblem::between(const Preference& supply,
                                           const Preference& demand,
                                           const ItemMetric& metric) {
  TransportProblem p{supply, demand, {}};
  p.cost.resize(static_cast<std::size_t>(supply.size()) * demand.size());
  std::size_t k = 0;
  for (int r = 0; r < supply.size(); ++r)
    for (int c = 0; c < demand.size(); ++c)
      p.cost[k++] = metric.distance(supply.item(r), demand.item(c));
  return p;
}

namespace {

constexpr double kReducedCostTol = 1e-11;
constexpr double kPerturbation = 1e-12;

inline std::size_t cell_index(int i, int j, int n) {
  return static_cast<std::size_t>(i) * n + j;
}

struct Marginals {
  std::vector<double> supply;
  std::vector<double> demand;
};

// Validates the problem and returns renormalized marginals.
Marginals checked_marginals(const TransportProblem& p) {
  const int m = p.supply.size();
  const int n = p.demand.size();
  if (p.cost.size() != static_cast<std::size_t>(m) * n)
    throw InvalidCost("cost matrix does not match support sizes");
  for (double c : p.cost)
    if (!std::isfinite(c) || c < 0.0)
      throw InvalidCost("cost entries must be finite and nonnegative");

  Marginals mg;
  mg.supply.assign(p.supply.mass().begin(), p.supply.mass().end());
  mg.demand.assign(p.demand.mass().begin(), p.demand.mass().end());
  for (auto* side : {&mg.supply, &mg.demand}) {
    const double sum = std::accumulate(side->begin(), side->end(), 0.0);
    if (std::abs(sum - 1.0) > kMarginalTol)
      throw InfeasibleProblem("marginal sums to " + std::to_string(sum));
    for (double& x : *side) x /= sum;
  }
  return mg;
}

// Primal transportation simplex over the bipartite row/column tree basis.
// Nodes 0..m-1 are rows, m..m+n-1 are columns; a basic cell (i, j) is the
// tree edge between node i and node m+j. The basis tree is kept rooted at
// node 0 with parent/depth arrays, so cycles come from an LCA walk and a
// pivot only touches the detached subtree.
class TransportSimplex {
 public:
  TransportSimplex(int m, int n, const std::vector<double>& cost)
      : m_(m), n_(n), cost_(cost) {}

  // Runs to optimality on supplies/demands perturbed by delta*(index+1)
  // (rebalanced on the last demand), then recomputes the basic flows for the
  // unperturbed marginals on the optimal tree.
  void solve(const Marginals& mg, double delta) {
    std::vector<double> a = mg.supply;
    std::vector<double> b = mg.demand;
    if (delta > 0.0) {
      double added = 0.0;
      for (int i = 0; i < m_; ++i) {
        a[i] += delta * (i + 1);
        added += delta * (i + 1);
      }
      b[n_ - 1] += added;
    }

    basic_.assign(static_cast<std::size_t>(m_) * n_, 0);
    flow_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
    adj_.assign(m_ + n_, {});
    northwest_corner(a, b);

    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    rebuild_tree();
    pivots_ = 0;
    cursor_ = 0;
    const long max_pivots = 256L * (m_ + n_) + 4096;
    int degenerate_streak = 0;
    bool bland = false;
    while (true) {
      const long entering = find_entering(bland);
      if (entering < 0) break;
      if (++pivots_ > max_pivots)
        throw Error("transportation simplex exceeded its pivot budget");
      const double theta = pivot(entering);
      if (theta <= 0.0) {
        // Bland's rule escapes degenerate stalls; Dantzig resumes after the
        // next improving pivot.
        if (++degenerate_streak > 2 * (m_ + n_) + 16) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }
    }

    strip_flows(mg.supply, mg.demand);
  }

  double worst_negative_flow() const { return worst_negative_; }
  int pivots() const { return static_cast<int>(pivots_); }

  double objective() const {
    double total = 0.0;
    for (std::size_t e = 0; e < basic_.size(); ++e)
      if (basic_[e]) total += std::max(flow_[e], 0.0) * cost_[e];
    return total;
  }

  void fill_weights(std::vector<double>& weights) const {
    weights.assign(flow_.size(), 0.0);
    for (std::size_t e = 0; e < basic_.size(); ++e)
      if (basic_[e]) weights[e] = std::min(std::max(flow_[e], 0.0), 1.0);
  }

 private:
  long cell(int i, int j) const { return static_cast<long>(i) * n_ + j; }
  double dual(int node) const { return node < m_ ? u_[node] : v_[node - m_]; }

  void add_edge(long e) {
    basic_[e] = 1;
    adj_[e / n_].push_back(e);
    adj_[m_ + e % n_].push_back(e);
  }

  void remove_edge(long e) {
    basic_[e] = 0;
    auto& ra = adj_[e / n_];
    ra.erase(std::find(ra.begin(), ra.end(), e));
    auto& ca = adj_[m_ + e % n_];
    ca.erase(std::find(ca.begin(), ca.end(), e));
  }

  void northwest_corner(std::vector<double> a, std::vector<double> b) {
    int i = 0, j = 0;
    while (true) {
      const double f = std::min(a[i], b[j]);
      flow_[cell(i, j)] = f;
      add_edge(cell(i, j));
      a[i] -= f;
      b[j] -= f;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) ++j;
      else if (j == n_ - 1) ++i;
      else if (a[i] <= b[j]) ++i;
      else ++j;
    }
  }

  // Parent/depth arrays and duals for the whole tree, rooted at row 0.
  void rebuild_tree() {
    parent_.assign(m_ + n_, -1);
    pedge_.assign(m_ + n_, -1);
    depth_.assign(m_ + n_, 0);
    stack_.clear();
    stack_.push_back(0);
    u_[0] = 0.0;
    std::vector<std::uint8_t> seen(m_ + n_, 0);
    seen[0] = 1;
    while (!stack_.empty()) {
      const int node = stack_.back();
      stack_.pop_back();
      for (const long e : adj_[node]) {
        const int i = static_cast<int>(e / n_);
        const int jn = m_ + static_cast<int>(e % n_);
        const int next = (node == i) ? jn : i;
        if (seen[next]) continue;
        seen[next] = 1;
        parent_[next] = node;
        pedge_[next] = e;
        depth_[next] = depth_[node] + 1;
        if (next == jn) v_[jn - m_] = cost_[e] - u_[i];
        else u_[i] = cost_[e] - v_[jn - m_];
        stack_.push_back(next);
      }
    }
  }

  // Entering cell. Under Bland's rule: the first cell (by index) with a
  // negative reduced cost, scanning from 0. Otherwise block pricing: walk a
  // rotating window of ~sqrt(mn) cells and take the most negative one in the
  // first improving block.
  long find_entering(bool bland) {
    const long cells = static_cast<long>(m_) * n_;
    if (bland) {
      long e = 0;
      for (int i = 0; i < m_; ++i) {
        const double ui = u_[i];
        for (int j = 0; j < n_; ++j, ++e)
          if (!basic_[e] && cost_[e] - ui - v_[j] < -kReducedCostTol) return e;
      }
      return -1;
    }
    const long block = std::max<long>(
        64, static_cast<long>(std::sqrt(static_cast<double>(cells))));
    long best = -1;
    double best_red = -kReducedCostTol;
    long e = cursor_ % cells;
    int i = static_cast<int>(e / n_);
    int j = static_cast<int>(e % n_);
    long in_block = 0;
    for (long scanned = 0; scanned < cells; ++scanned) {
      if (!basic_[e]) {
        const double red = cost_[e] - u_[i] - v_[j];
        if (red < best_red) {
          best_red = red;
          best = e;
        }
      }
      ++e, ++j;
      if (j == n_) {
        j = 0;
        if (++i == m_) {
          i = 0;
          e = 0;
        }
      }
      if (++in_block == block) {
        if (best >= 0) break;
        in_block = 0;
      }
    }
    cursor_ = e;
    return best;
  }

  // The unique cycle closed by the entering edge, found by walking both
  // endpoints up to their lowest common ancestor. The returned edges run
  // from the entering cell's column endpoint around to its row endpoint, so
  // even positions carry -theta and odd ones +theta.
  void collect_cycle(long entering) {
    const int row_end = static_cast<int>(entering / n_);
    const int col_end = m_ + static_cast<int>(entering % n_);
    cycle_.clear();
    up_a_.clear();
    int a = col_end, b = row_end;
    while (a != b) {
      if (depth_[a] >= depth_[b]) {
        cycle_.push_back(pedge_[a]);
        a = parent_[a];
      } else {
        up_a_.push_back(pedge_[b]);
        b = parent_[b];
      }
    }
    cycle_.insert(cycle_.end(), up_a_.rbegin(), up_a_.rend());
  }

  double pivot(long entering) {
    collect_cycle(entering);

    double theta = std::numeric_limits<double>::infinity();
    long leaving = -1;
    std::size_t leaving_pos = 0;
    for (std::size_t k = 0; k < cycle_.size(); k += 2) {  // minus positions
      const long e = cycle_[k];
      if (flow_[e] < theta || (flow_[e] == theta && e < leaving)) {
        theta = flow_[e];
        leaving = e;
        leaving_pos = k;
      }
    }

    flow_[entering] = theta;
    for (std::size_t k = 0; k < cycle_.size(); ++k) {
      const long e = cycle_[k];
      if (k % 2 == 0) flow_[e] -= theta;
      else flow_[e] += theta;
    }
    flow_[leaving] = 0.0;

    // The leaving edge detaches the subtree below it; cycle positions before
    // up_start_position() sit on the column endpoint's upward path, so the
    // detached side holds the column endpoint exactly in that case.
    const int row_end = static_cast<int>(entering / n_);
    const int col_end = m_ + static_cast<int>(entering % n_);
    const bool detached_has_col_end = leaving_pos < up_start_position();
    const int q = detached_has_col_end ? col_end : row_end;
    const int p = detached_has_col_end ? row_end : col_end;

    remove_edge(leaving);
    add_edge(entering);
    rehang_subtree(q, p, entering);
    return theta;
  }

  // Index of the first cycle position whose edge came from the row-endpoint
  // walk; set by collect_cycle.
  std::size_t up_start_position() const { return cycle_.size() - up_a_.size(); }

  // Re-roots the detached subtree at q, hangs it under p via the entering
  // edge, and shifts its duals by the entering edge's reduced cost.
  void rehang_subtree(int q, int p, long entering) {
    const double red = cost_[entering] - u_[entering / n_] - v_[entering % n_];
    // Row duals of the subtree shift by +red when q is a row (column duals
    // by -red), and the other way around when q is a column.
    const double row_shift = q < m_ ? red : -red;
    parent_[q] = p;
    pedge_[q] = entering;
    depth_[q] = depth_[p] + 1;
    stack_.clear();
    stack_.push_back(q);
    while (!stack_.empty()) {
      const int node = stack_.back();
      stack_.pop_back();
      if (node < m_) u_[node] += row_shift;
      else v_[node - m_] -= row_shift;
      for (const long e : adj_[node]) {
        const int i = static_cast<int>(e / n_);
        const int jn = m_ + static_cast<int>(e % n_);
        const int next = (node == i) ? jn : i;
        if (next == parent_[node] && pedge_[node] == e) continue;
        parent_[next] = node;
        pedge_[next] = e;
        depth_[next] = depth_[node] + 1;
        stack_.push_back(next);
      }
    }
  }

  // Exact basic flows for the given marginals via leaf stripping. The tree
  // determines them uniquely; negatives can only appear at degenerate bases
  // and are reported, not clamped, here.
  void strip_flows(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> residual(m_ + n_);
    for (int i = 0; i < m_; ++i) residual[i] = a[i];
    for (int j = 0; j < n_; ++j) residual[m_ + j] = b[j];
    std::vector<int> degree(m_ + n_);
    std::vector<std::size_t> cursor(m_ + n_, 0);
    used_.assign(flow_.size(), 0);
    stack_.clear();
    for (int node = 0; node < m_ + n_; ++node) {
      degree[node] = static_cast<int>(adj_[node].size());
      if (degree[node] == 1) stack_.push_back(node);
    }
    worst_negative_ = 0.0;
    int processed = 0;
    while (!stack_.empty()) {
      const int node = stack_.back();
      stack_.pop_back();
      if (degree[node] != 1) continue;
      long e = -1;
      auto& edges = adj_[node];
      while (cursor[node] < edges.size()) {
        const long cand = edges[cursor[node]];
        if (!used_[cand]) {
          e = cand;
          break;
        }
        ++cursor[node];
      }
      if (e < 0) continue;
      used_[e] = 1;
      ++processed;
      const int i = static_cast<int>(e / n_);
      const int jn = m_ + static_cast<int>(e % n_);
      const int other = (node == i) ? jn : i;
      const double f = residual[node];
      flow_[e] = f;
      worst_negative_ = std::min(worst_negative_, f);
      residual[node] = 0.0;
      residual[other] -= f;
      degree[node] = 0;
      if (--degree[other] == 1) stack_.push_back(other);
    }
    if (processed != m_ + n_ - 1)
      throw Error("transportation basis is not a spanning tree");
  }

  const int m_, n_;
  const std::vector<double>& cost_;
  std::vector<double> flow_;
  std::vector<std::uint8_t> basic_;
  std::vector<std::vector<long>> adj_;
  std::vector<double> u_, v_;
  std::vector<int> parent_;
  std::vector<long> pedge_;
  std::vector<int> depth_;
  std::vector<std::uint8_t> used_;
  std::vector<int> stack_;
  std::vector<long> cycle_;
  std::vector<long> up_a_;
  double worst_negative_ = 0.0;
  long pivots_ = 0;
  long cursor_ = 0;
};

Coupling make_coupling(const TransportProblem& p, std::vector<double> weights) {
  Coupling c;
  c.row_items.assign(p.supply.support().begin(), p.supply.support().end());
  c.col_items.assign(p.demand.support().begin(), p.demand.support().end());
  c.weights = std::move(weights);
  return c;
}

}  // namespace

TransportSolution solve_exact(const TransportProblem& problem) {
  const Marginals mg = checked_marginals(problem);
  const int m = problem.supply.size();
  const int n = problem.demand.size();

  TransportSimplex simplex(m, n, problem.cost);
  simplex.solve(mg, kPerturbation);
  if (simplex.worst_negative_flow() < -1e-10) {
    // The perturbed optimal basis was infeasible for the unperturbed data;
    // re-solve without perturbation (Bland's rule still prevents cycling).
    simplex.solve(mg, 0.0);
  }

  TransportSolution sol;
  sol.solver = SolverTag::kExact;
  sol.iterations = simplex.pivots();
  sol.optimal_cost = simplex.objective();
  std::vector<double> weights;
  simplex.fill_weights(weights);
  sol.coupling = make_coupling(problem, std::move(weights));
  return sol;
}

namespace {

double log_sum_exp(const double* x, int n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) hi = std::max(hi, x[k]);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(x[k] - hi);
  return hi + std::log(s);
}

}  // namespace

TransportSolution solve_entropic(const TransportProblem& problem,
                                 double epsilon, int max_iter) {
  if (!(epsilon > 0.0)) throw ConfigError("entropic epsilon must be > 0");
  const Marginals mg = checked_marginals(problem);
  const int m = problem.supply.size();
  const int n = problem.demand.size();
  const auto& cost = problem.cost;

  std::vector<double> log_a(m), log_b(n), f(m, 0.0), g(n, 0.0);
  for (int i = 0; i < m; ++i) log_a[i] = std::log(mg.supply[i]);
  for (int j = 0; j < n; ++j) log_b[j] = std::log(mg.demand[j]);

  std::vector<double> scratch(std::max(m, n));
  std::vector<double> plan(static_cast<std::size_t>(m) * n);

  const auto row_marginal_error = [&](double eps) {
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j)
        sum += std::exp((f[i] + g[j] - cost[cell_index(i, j, n)]) / eps);
      worst = std::max(worst, std::abs(sum - mg.supply[i]));
    }
    return worst;
  };

  constexpr double kConvergedTol = 1e-9;
  int iterations = 0;
  double err = std::numeric_limits<double>::infinity();

  // Epsilon scaling: anneal from a coarse regularizer down to the requested
  // one, warm-starting the potentials at every stage.
  double eps_stage = std::max(epsilon, 1.0);
  while (true) {
    const bool final_stage = eps_stage <= epsilon * (1.0 + 1e-12);
    const double stage_tol = final_stage ? kConvergedTol : 1e-4;
    while (iterations < max_iter) {
      ++iterations;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j)
          scratch[j] = (g[j] - cost[cell_index(i, j, n)]) / eps_stage;
        f[i] = eps_stage * (log_a[i] - log_sum_exp(scratch.data(), n));
      }
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i)
          scratch[i] = (f[i] - cost[cell_index(i, j, n)]) / eps_stage;
        g[j] = eps_stage * (log_b[j] - log_sum_exp(scratch.data(), m));
      }
      if (iterations % 4 == 0 || iterations == max_iter) {
        err = row_marginal_error(eps_stage);
        if (err < stage_tol) break;
      }
    }
    if (final_stage) break;
    eps_stage = std::max(epsilon, eps_stage * 0.5);
  }

  err = row_marginal_error(epsilon);
  if (err > 1e-6)
    throw ConvergenceFailure("sinkhorn did not converge; marginal error " +
                                 std::to_string(err),
                             err);

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      plan[cell_index(i, j, n)] =
          std::exp((f[i] + g[j] - cost[cell_index(i, j, n)]) / epsilon);

  // Round onto the coupling polytope: shrink overfull rows/columns, then
  // spread the residual mass as a rank-one correction.
  std::vector<double> row_sum(m, 0.0), col_sum(n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) row_sum[i] += plan[cell_index(i, j, n)];
  for (int i = 0; i < m; ++i) {
    const double s = row_sum[i] > mg.supply[i] ? mg.supply[i] / row_sum[i] : 1.0;
    if (s < 1.0)
      for (int j = 0; j < n; ++j) plan[cell_index(i, j, n)] *= s;
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) col_sum[j] += plan[cell_index(i, j, n)];
  for (int j = 0; j < n; ++j) {
    const double s = col_sum[j] > mg.demand[j] ? mg.demand[j] / col_sum[j] : 1.0;
    if (s < 1.0)
      for (int i = 0; i < m; ++i) plan[cell_index(i, j, n)] *= s;
  }
  std::fill(row_sum.begin(), row_sum.end(), 0.0);
  std::fill(col_sum.begin(), col_sum.end(), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      row_sum[i] += plan[cell_index(i, j, n)];
      col_sum[j] += plan[cell_index(i, j, n)];
    }
  double deficit = 0.0;
  for (int i = 0; i < m; ++i) deficit += mg.supply[i] - row_sum[i];
  if (deficit > 0.0) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        plan[cell_index(i, j, n)] += (mg.supply[i] - row_sum[i]) *
                                     (mg.demand[j] - col_sum[j]) / deficit;
  }

  TransportSolution sol;
  sol.solver = SolverTag::kEntropic;
  sol.iterations = iterations;
  double total = 0.0;
  for (std::size_t e = 0; e < plan.size(); ++e) total += plan[e] * cost[e];
  sol.optimal_cost = total;
  sol.coupling = make_coupling(problem, std::move(plan));
  return sol;
}

}  // namespace pmd
