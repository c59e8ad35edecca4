#include "pmd/measures.hpp"

#include <algorithm>
#include <cmath>

#include "pmd/preference.hpp"

namespace pmd {

namespace {

constexpr MeasureResult uncomputable(MeasureKind kind) {
  return {0.0, kind, false};
}

// Applies fn(r_ui, r_vi) to every co-rated item; returns |I_u ∩ I_v|.
template <typename Fn>
int for_each_corated(const SparseRatings& ratings, UserId u, UserId v, Fn&& fn) {
  const auto iu = ratings.items_of(u);
  const auto iv = ratings.items_of(v);
  const auto ru = ratings.values_of(u);
  const auto rv = ratings.values_of(v);
  int count = 0;
  std::size_t a = 0, b = 0;
  while (a < iu.size() && b < iv.size()) {
    if (iu[a] < iv[b]) ++a;
    else if (iu[a] > iv[b]) ++b;
    else {
      fn(iu[a], ru[a], rv[b]);
      ++count, ++a, ++b;
    }
  }
  return count;
}

int union_size(const SparseRatings& ratings, UserId u, UserId v) {
  const auto iu = ratings.items_of(u);
  const auto iv = ratings.items_of(v);
  int common = 0;
  std::size_t a = 0, b = 0;
  while (a < iu.size() && b < iv.size()) {
    if (iu[a] < iv[b]) ++a;
    else if (iu[a] > iv[b]) ++b;
    else ++common, ++a, ++b;
  }
  return static_cast<int>(iu.size() + iv.size()) - common;
}

double normalized_msd(const SparseRatings& ratings, UserId u, UserId v,
                      int* corated) {
  const double range = ratings.scale().range();
  double sq = 0.0;
  *corated = for_each_corated(ratings, u, v, [&](ItemId, double r1, double r2) {
    const double d = (r1 - r2) / range;
    sq += d * d;
  });
  return *corated > 0 ? sq / *corated : 0.0;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

MeasureResult cos_sim(UserId u, UserId v, const SparseRatings& ratings) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  const int corated = for_each_corated(
      ratings, u, v, [&](ItemId, double r1, double r2) {
        dot += r1 * r2;
        nu += r1 * r1;
        nv += r2 * r2;
      });
  if (corated == 0 || nu == 0.0 || nv == 0.0)
    return uncomputable(MeasureKind::kSimilarity);
  return {dot / (std::sqrt(nu) * std::sqrt(nv)), MeasureKind::kSimilarity, true};
}

MeasureResult pcc_sim(UserId u, UserId v, const SparseRatings& ratings) {
  double su = 0.0, sv = 0.0;
  std::vector<std::pair<double, double>> pairs;
  for_each_corated(ratings, u, v, [&](ItemId, double r1, double r2) {
    pairs.emplace_back(r1, r2);
    su += r1;
    sv += r2;
  });
  if (pairs.empty()) return uncomputable(MeasureKind::kSimilarity);
  const double mu = su / pairs.size();
  const double mv = sv / pairs.size();
  double num = 0.0, du = 0.0, dv = 0.0;
  for (const auto& [r1, r2] : pairs) {
    num += (r1 - mu) * (r2 - mv);
    du += (r1 - mu) * (r1 - mu);
    dv += (r2 - mv) * (r2 - mv);
  }
  if (du == 0.0 || dv == 0.0) return uncomputable(MeasureKind::kSimilarity);
  return {num / (std::sqrt(du) * std::sqrt(dv)), MeasureKind::kSimilarity, true};
}

MeasureResult msd_dist(UserId u, UserId v, const SparseRatings& ratings) {
  int corated = 0;
  const double msd = normalized_msd(ratings, u, v, &corated);
  if (corated == 0) return uncomputable(MeasureKind::kDistance);
  return {msd, MeasureKind::kDistance, true};
}

MeasureResult jaccard_sim(UserId u, UserId v, const SparseRatings& ratings) {
  const int uni = union_size(ratings, u, v);
  if (uni == 0) return {0.0, MeasureKind::kSimilarity, true};
  const int corated = static_cast<int>(ratings.items_of(u).size() +
                                       ratings.items_of(v).size()) -
                      uni;
  return {static_cast<double>(corated) / uni, MeasureKind::kSimilarity, true};
}

MeasureResult urp_sim(UserId u, UserId v, const SparseRatings& ratings) {
  if (ratings.items_of(u).empty() || ratings.items_of(v).empty())
    return uncomputable(MeasureKind::kSimilarity);
  const double dmu = std::abs(ratings.user_mean(u) - ratings.user_mean(v));
  const double dsd = std::abs(ratings.user_stddev(u) - ratings.user_stddev(v));
  return {1.0 - sigmoid(dmu * dsd), MeasureKind::kSimilarity, true};
}

MeasureResult jmsd_sim(UserId u, UserId v, const SparseRatings& ratings) {
  int corated = 0;
  const double msd = normalized_msd(ratings, u, v, &corated);
  if (corated == 0) return uncomputable(MeasureKind::kSimilarity);
  const MeasureResult jac = jaccard_sim(u, v, ratings);
  return {jac.value * (1.0 - msd), MeasureKind::kSimilarity, true};
}

MeasureResult nhsm_sim(UserId u, UserId v, const SparseRatings& ratings) {
  const RatingScale& scale = ratings.scale();
  const double median = (scale.min_rating + scale.max_rating) / 2.0;
  double pss_sum = 0.0;
  const int corated =
      for_each_corated(ratings, u, v, [&](ItemId, double r1, double r2) {
        const double proximity = 1.0 - sigmoid(std::abs(r1 - r2));
        const double significance =
            sigmoid(std::abs(r1 - median) * std::abs(r2 - median));
        const double singularity = 1.0 - sigmoid(std::abs((r1 + r2) / 2.0 - median));
        pss_sum += proximity * significance * singularity;
      });
  if (corated == 0) return uncomputable(MeasureKind::kSimilarity);
  const double nu = static_cast<double>(ratings.items_of(u).size());
  const double nv = static_cast<double>(ratings.items_of(v).size());
  const double jpss = pss_sum * corated / (nu * nv);
  const MeasureResult urp = urp_sim(u, v, ratings);
  return {jpss * urp.value, MeasureKind::kSimilarity, true};
}

MeasureResult bcf_family_sim(UserId u, UserId v, const SparseRatings& ratings,
                             const ItemMetric& item_sim,
                             const RatingKernel& kernel, bool normalized) {
  const auto iu = ratings.items_of(u);
  const auto iv = ratings.items_of(v);
  const auto ru = ratings.values_of(u);
  const auto rv = ratings.values_of(v);
  if (iu.empty() || iv.empty()) return uncomputable(MeasureKind::kSimilarity);
  const KernelContext ctx{ratings.scale()};
  double total = 0.0;
  for (std::size_t a = 0; a < iu.size(); ++a)
    for (std::size_t b = 0; b < iv.size(); ++b)
      total += kernel.eval(ru[a], rv[b], ctx) * item_sim.similarity(iu[a], iv[b]);
  if (normalized) total /= static_cast<double>(iu.size()) * iv.size();
  return {total, MeasureKind::kSimilarity, true};
}

MeasureResult pmd_distance(UserId u, UserId v, const SparseRatings& ratings,
                  const ItemMetric& metric, const PmdOptions& options) {
  Preference pu = build_preference(ratings, u);
  Preference pv = build_preference(ratings, v);
  if (options.truncate_support > 0) {
    pu = truncate_preference(pu, options.truncate_support);
    pv = truncate_preference(pv, options.truncate_support);
  }
  const TransportProblem problem = TransportProblem::between(pu, pv, metric);
  const TransportSolution sol =
      options.solver == SolverTag::kEntropic
          ? solve_entropic(problem, options.entropic_epsilon,
                           options.entropic_max_iter)
          : solve_exact(problem);
  return {sol.optimal_cost, MeasureKind::kDistance, true};
}

const RatingKernel& agreement_kernel() {
  static const RatingKernel kernel{
      "agreement", [](double r1, double r2, const KernelContext& ctx) {
        return 1.0 - std::abs(r1 - r2) / ctx.scale.range();
      }};
  return kernel;
}

const RatingKernel& sigmoid_agreement_kernel() {
  static const RatingKernel kernel{
      "sigmoid-agreement", [](double r1, double r2, const KernelContext& ctx) {
        return 2.0 / (1.0 + std::exp(std::abs(r1 - r2) / ctx.scale.range()));
      }};
  return kernel;
}

namespace {

MeasureInfo plain(std::string key, MeasureKind kind,
                  MeasureResult (*fn)(UserId, UserId, const SparseRatings&)) {
  return {std::move(key), kind, false,
          [fn](UserId u, UserId v, const MeasureContext& ctx) {
            return fn(u, v, ctx.ratings);
          }};
}

MeasureInfo bcf_entry(std::string key, const RatingKernel& kernel,
                      bool normalized) {
  return {std::move(key), MeasureKind::kSimilarity, true,
          [&kernel, normalized](UserId u, UserId v, const MeasureContext& ctx) {
            return bcf_family_sim(u, v, ctx.ratings, *ctx.metric, kernel,
                                  normalized);
          }};
}

}  // namespace

const std::vector<MeasureInfo>& measure_catalog() {
  static const std::vector<MeasureInfo> catalog = [] {
    std::vector<MeasureInfo> c;
    c.push_back(plain("cos", MeasureKind::kSimilarity, cos_sim));
    c.push_back(plain("pcc", MeasureKind::kSimilarity, pcc_sim));
    c.push_back(plain("msd", MeasureKind::kDistance, msd_dist));
    c.push_back(plain("jaccard", MeasureKind::kSimilarity, jaccard_sim));
    c.push_back(plain("urp", MeasureKind::kSimilarity, urp_sim));
    c.push_back(plain("jmsd", MeasureKind::kSimilarity, jmsd_sim));
    c.push_back(plain("nhsm", MeasureKind::kSimilarity, nhsm_sim));
    c.push_back(bcf_entry("bcf", agreement_kernel(), false));
    c.push_back(bcf_entry("n-bcf", agreement_kernel(), true));
    c.push_back(bcf_entry("husm", sigmoid_agreement_kernel(), false));
    c.push_back(bcf_entry("n-husm", sigmoid_agreement_kernel(), true));
    c.push_back({"pmd", MeasureKind::kDistance, true,
                 [](UserId u, UserId v, const MeasureContext& ctx) {
                   return pmd_distance(u, v, ctx.ratings, *ctx.metric, ctx.pmd_options);
                 }});
    return c;
  }();
  return catalog;
}

const MeasureInfo* find_measure(std::string_view key) {
  for (const auto& info : measure_catalog())
    if (info.key == key) return &info;
  return nullptr;
}

double measure_max_distance(const MeasureInfo& info, const MeasureContext& ctx) {
  if (info.kind != MeasureKind::kDistance) return 1.0;
  if (info.key == "pmd") return ctx.metric ? ctx.metric->max_distance() : 1.0;
  return 1.0;  // msd is already normalized to [0, 1]
}

}  // namespace pmd
