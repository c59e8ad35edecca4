#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pmd/item_metric.hpp"
#include "pmd/ratings.hpp"
#include "pmd/transport.hpp"

namespace pmd {

enum class MeasureKind { kSimilarity, kDistance };

/// A pairwise user score. When computable is false the value is meaningless
/// and the pair must not enter neighbor ranking; this is distinct from a
/// genuine similarity of zero.
struct MeasureResult {
  double value = 0.0;
  MeasureKind kind = MeasureKind::kSimilarity;
  bool computable = true;
};

struct KernelContext {
  RatingScale scale;
};

/// Rating-pair similarity in [0, 1], symmetric in its arguments.
struct RatingKernel {
  std::string name;
  std::function<double(double, double, const KernelContext&)> eval;
};

/// 1 - |r1 - r2| / range; equals 1 at agreement.
const RatingKernel& agreement_kernel();
/// 2 / (1 + exp(|r1 - r2| / range)); a smooth variant used for the HUSM
/// family, also 1 at agreement.
const RatingKernel& sigmoid_agreement_kernel();

// Classic co-rated measures.
MeasureResult cos_sim(UserId u, UserId v, const SparseRatings& ratings);
MeasureResult pcc_sim(UserId u, UserId v, const SparseRatings& ratings);
MeasureResult msd_dist(UserId u, UserId v, const SparseRatings& ratings);
MeasureResult jaccard_sim(UserId u, UserId v, const SparseRatings& ratings);
MeasureResult urp_sim(UserId u, UserId v, const SparseRatings& ratings);
MeasureResult jmsd_sim(UserId u, UserId v, const SparseRatings& ratings);
MeasureResult nhsm_sim(UserId u, UserId v, const SparseRatings& ratings);

/// All-pairs rating-similarity sum weighted by item similarity:
/// sum over I_u x I_v of kernel(r_ui, r_vj) * sim(i, j), divided by
/// |I_u| * |I_v| when normalized.
MeasureResult bcf_family_sim(UserId u, UserId v, const SparseRatings& ratings,
                             const ItemMetric& item_sim,
                             const RatingKernel& kernel, bool normalized);

struct PmdOptions {
  SolverTag solver = SolverTag::kExact;
  double entropic_epsilon = 1e-3;
  int entropic_max_iter = 20000;
  int truncate_support = 0;  // 0 = off
};

/// The preference mover's distance: the exact minimum-cost coupling of the
/// two users' preference distributions under the item metric. Needs no
/// co-rated items.
MeasureResult pmd_distance(UserId u, UserId v, const SparseRatings& ratings,
                  const ItemMetric& metric, const PmdOptions& options = {});

/// Shared evaluation context for catalog-driven measures. The metric doubles
/// as the item-similarity source for the BCF/HUSM family.
struct MeasureContext {
  const SparseRatings& ratings;
  const ItemMetric* metric = nullptr;
  PmdOptions pmd_options;
};

struct MeasureInfo {
  std::string key;
  MeasureKind kind;
  bool needs_metric;
  std::function<MeasureResult(UserId, UserId, const MeasureContext&)> fn;
};

/// The twelve registered measures, in catalog order:
/// cos, pcc, msd, jaccard, urp, jmsd, nhsm, bcf, n-bcf, husm, n-husm, pmd.
const std::vector<MeasureInfo>& measure_catalog();

/// nullptr when the key is unknown.
const MeasureInfo* find_measure(std::string_view key);

/// Upper bound used to map a distance measure onto [0, 1] weights.
double measure_max_distance(const MeasureInfo& info, const MeasureContext& ctx);

}  // namespace pmd
