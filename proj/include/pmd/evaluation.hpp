#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmd/measures.hpp"
#include "pmd/ratings.hpp"
#include "pmd/recommender.hpp"

namespace pmd {

struct SplitSpec {
  double train_fraction = 0.8;  // 0.8 = 4:1, 0.1 = 1:9
  int repetitions = 5;
  std::uint64_t seed = 42;
};

struct TestEntry {
  UserId user;
  ItemId item;
  double rating;
};

struct TrainTest {
  SparseRatings train;
  std::vector<TestEntry> test;
};

/// Uniform random partition of the rating entries, deterministic in
/// (seed, repetition). The test side gets floor((1 - fraction) * N) entries;
/// the remainder stays in training.
TrainTest split(const SparseRatings& ratings, const SplitSpec& spec,
                int repetition);

/// Mean absolute error over aligned prediction/truth lists; every entry
/// counts, fallback predictions included. Throws EmptyTestSet when empty.
double mae(std::span<const double> predicted, std::span<const double> truth);

struct ReportRow {
  std::string measure;
  double fraction;
  int k;
  int rep;
  double mae;
  double coverage;     // fraction of test ratings predicted without fallback
  double wall_time_s;  // prediction time plus this cell's share of scoring
};

struct EvalReport {
  std::vector<ReportRow> rows;
  // config echo for provenance
  std::uint64_t seed = 0;
  std::vector<std::string> measures;
  std::vector<double> fractions;
  std::vector<int> ks;
  int repetitions = 0;
  bool approximate = false;  // set when preference truncation was active
  int truncate_support = 0;
  std::size_t failed_pairs = 0;  // per-pair scoring failures, sweep continued
};

struct SweepProgress {
  std::string measure;
  double fraction = 0.0;
  int rep = 0;
  std::size_t pairs_done = 0;
  std::size_t pairs_total = 0;
  double pairs_per_second = 0.0;
  bool finished = false;
};

struct SweepConfig {
  std::vector<std::string> measures;
  std::vector<double> fractions;
  std::vector<int> ks;
  SplitSpec split;
  int threads = 0;  // 0 = all cores
  PmdOptions pmd_options;
  bool user_mean_baseline = true;
  std::optional<std::filesystem::path> score_cache_dir;
  std::function<void(const SweepProgress&)> progress;
};

/// Full factorial sweep over measure x fraction x K x repetition. Pairwise
/// user scores are computed once per (measure, split) and reused across Ks;
/// when a cache directory is configured they are persisted to disk.
/// `metric` may be null if no listed measure needs one.
EvalReport run_sweep(const SparseRatings& ratings, const ItemMetric* metric,
                     const SweepConfig& config);

/// measure,fraction,k,rep,mae,coverage,wall_time_s
void write_report_csv(const std::filesystem::path& path,
                      const EvalReport& report);
void write_report_json(const std::filesystem::path& path,
                       const EvalReport& report);
/// Plot-ready tables: MAE against fraction (at ks.front()) and against K
/// (at fractions.front()), one series per measure, averaged over reps.
void write_sparsity_fig_csv(const std::filesystem::path& path,
                            const EvalReport& report);
void write_ksweep_fig_csv(const std::filesystem::path& path,
                          const EvalReport& report);

/// Pairwise score cache: magic "PMSC", format version u32, a reserved byte,
/// user count u32, then the lower-triangular float32 scores (NaN marks an
/// uncomputable pair, +inf a pair that was never needed).
inline constexpr char kScoreCacheMagic[4] = {'P', 'M', 'S', 'C'};

}  // namespace pmd
