#include "pmd/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pmd/parallel.hpp"

namespace pmd {

namespace {

constexpr float kNotComputed = std::numeric_limits<float>::infinity();
constexpr std::uint32_t kScoreCacheVersion = 1;

std::size_t tri_size(int n) {
  return static_cast<std::size_t>(n) * (n > 0 ? n - 1 : 0) / 2;
}

std::size_t tri_index(UserId a, UserId b) {
  // a != b; normalized so the larger id picks the row
  if (a < b) std::swap(a, b);
  return static_cast<std::size_t>(a) * (a - 1) / 2 + b;
}

std::pair<UserId, UserId> tri_decode(std::size_t k) {
  const auto a = static_cast<UserId>(
      (1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k))) / 2.0);
  // fix up floating point at the row boundaries
  UserId row = a;
  while (static_cast<std::size_t>(row) * (row - 1) / 2 > k) --row;
  while (static_cast<std::size_t>(row + 1) * row / 2 <= k) ++row;
  const auto col = static_cast<UserId>(k - static_cast<std::size_t>(row) * (row - 1) / 2);
  return {row, col};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

TrainTest split(const SparseRatings& ratings, const SplitSpec& spec,
                int repetition) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("train_fraction must be in (0, 1)");
  if (repetition < 0 || spec.repetitions < 1)
    throw ConfigError("bad repetition index");

  std::vector<RatingEntry> entries = ratings.entries();
  const std::size_t n = entries.size();

  // Own Fisher-Yates so the partition is stable across standard libraries.
  std::mt19937_64 rng(spec.seed ^
                      (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(repetition + 1)));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(entries[i - 1], entries[j]);
  }

  const auto test_count = static_cast<std::size_t>(
      std::floor((1.0 - spec.train_fraction) * static_cast<double>(n) + 1e-9));
  const std::size_t train_count = n - test_count;

  std::vector<RatingEntry> train_entries(entries.begin(),
                                         entries.begin() + train_count);
  TrainTest tt{SparseRatings(ratings.num_users(), ratings.num_items(),
                             std::move(train_entries), ratings.scale()),
               {}};
  tt.test.reserve(test_count);
  for (std::size_t i = train_count; i < n; ++i)
    tt.test.push_back({entries[i].user, entries[i].item, entries[i].value});
  std::sort(tt.test.begin(), tt.test.end(), [](const TestEntry& a, const TestEntry& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  return tt;
}

double mae(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size())
    throw ConfigError("prediction/truth length mismatch");
  if (predicted.empty()) throw EmptyTestSet("empty test set");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    sum += std::abs(predicted[i] - truth[i]);
  return sum / static_cast<double>(predicted.size());
}

namespace {

// Lower-triangular pairwise score table over all users. NaN marks an
// uncomputable pair, +inf a pair that was never requested.
struct ScoreTable {
  int num_users = 0;
  std::vector<float> values;

  explicit ScoreTable(int users)
      : num_users(users), values(tri_size(users), kNotComputed) {}
};

std::filesystem::path score_cache_path(const std::filesystem::path& dir,
                                       const std::string& measure,
                                       double fraction, int rep,
                                       const SweepConfig& config) {
  std::ostringstream name;
  name << "scores-" << measure << "-f" << fraction << "-r" << rep << "-s"
       << config.split.seed;
  if (config.pmd_options.truncate_support > 0)
    name << "-t" << config.pmd_options.truncate_support;
  if (config.pmd_options.solver == SolverTag::kEntropic)
    name << "-entropic" << config.pmd_options.entropic_epsilon;
  name << ".bin";
  return dir / name.str();
}

bool load_score_cache(const std::filesystem::path& path, ScoreTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kScoreCacheMagic, 4) != 0) return false;
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != kScoreCacheVersion) return false;
  char reserved = 0;
  in.read(&reserved, 1);
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in || count != static_cast<std::uint32_t>(table.num_users)) return false;
  in.read(reinterpret_cast<char*>(table.values.data()),
          static_cast<std::streamsize>(table.values.size() * sizeof(float)));
  return in.gcount() ==
         static_cast<std::streamsize>(table.values.size() * sizeof(float));
}

void save_score_cache(const std::filesystem::path& path,
                      const ScoreTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return;  // cache write failures are not fatal
  out.write(kScoreCacheMagic, 4);
  const std::uint32_t version = kScoreCacheVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const char reserved = 0;
  out.write(&reserved, 1);
  const auto count = static_cast<std::uint32_t>(table.num_users);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(table.values.data()),
            static_cast<std::streamsize>(table.values.size() * sizeof(float)));
}

// Unique (user, user) pairs the test set will ask for, as sorted triangle
// indices.
std::vector<std::size_t> needed_pairs(const TrainTest& tt) {
  std::vector<std::uint8_t> mask(tri_size(tt.train.num_users()), 0);
  for (const TestEntry& e : tt.test)
    for (const UserId v : tt.train.raters_of(e.item))
      if (v != e.user) mask[tri_index(e.user, v)] = 1;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) out.push_back(k);
  return out;
}

struct ScoringStats {
  double seconds = 0.0;
  std::size_t failures = 0;
  std::size_t computed = 0;
};

ScoringStats compute_scores(ScoreTable& table,
                            const std::vector<std::size_t>& pairs,
                            const MeasureInfo& info, const MeasureContext& ctx,
                            const SweepConfig& config, double fraction,
                            int rep) {
  std::vector<std::size_t> todo;
  todo.reserve(pairs.size());
  for (const std::size_t k : pairs)
    if (table.values[k] == kNotComputed) todo.push_back(k);

  ScoringStats stats;
  stats.computed = todo.size();
  if (todo.empty()) return stats;

  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<std::size_t> done{0};
  std::atomic<std::size_t> failures{0};
  parallel_for(
      todo.size(), config.threads,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t w = begin; w < end; ++w) {
          const auto [u, v] = tri_decode(todo[w]);
          float value = std::numeric_limits<float>::quiet_NaN();
          if (!ctx.ratings.items_of(u).empty() &&
              !ctx.ratings.items_of(v).empty()) {
            try {
              const MeasureResult r = info.fn(u, v, ctx);
              if (r.computable) value = static_cast<float>(r.value);
            } catch (const Error&) {
              failures.fetch_add(1, std::memory_order_relaxed);
            }
          }
          table.values[todo[w]] = value;
        }
        done.fetch_add(end - begin, std::memory_order_relaxed);
      },
      [&] {
        if (!config.progress) return;
        SweepProgress p;
        p.measure = info.key;
        p.fraction = fraction;
        p.rep = rep;
        p.pairs_done = done.load();
        p.pairs_total = todo.size();
        const double dt = seconds_since(t0);
        p.pairs_per_second = dt > 0.0 ? static_cast<double>(p.pairs_done) / dt : 0.0;
        p.finished = p.pairs_done >= p.pairs_total;
        config.progress(p);
      });
  stats.seconds = seconds_since(t0);
  stats.failures = failures.load();
  return stats;
}

struct CellResult {
  double mae = 0.0;
  double coverage = 0.0;
  double seconds = 0.0;
};

CellResult predict_cell(const TrainTest& tt, const ScoreTable* scores,
                        const MeasureInfo* info, const MeasureContext& ctx,
                        int k, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = tt.test.size();
  if (n == 0) throw EmptyTestSet("split produced an empty test set");
  std::vector<double> abs_err(n, 0.0);
  std::vector<std::uint8_t> covered(n, 0);
  const double d_max = info ? measure_max_distance(*info, ctx) : 1.0;

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<NeighborEntry> candidates;
    for (std::size_t w = begin; w < end; ++w) {
      const TestEntry& e = tt.test[w];
      NeighborList neighbors;
      neighbors.target = e.user;
      neighbors.k_requested = k;
      if (scores && info) {
        candidates.clear();
        for (const UserId v : tt.train.raters_of(e.item)) {
          if (v == e.user) continue;
          const float s = scores->values[tri_index(e.user, v)];
          if (std::isnan(s) || s == kNotComputed) continue;
          MeasureResult r{static_cast<double>(s), info->kind, true};
          const double weight = measure_weight(r, d_max);
          if (weight > 0.0) candidates.push_back({v, weight});
        }
        neighbors = select_top_k(e.user, k, candidates);
      }
      const Prediction p = predict(e.user, e.item, neighbors, tt.train);
      abs_err[w] = std::abs(p.value - e.rating);
      covered[w] = p.fallback == Fallback::kNone ? 1 : 0;
    }
  });

  CellResult cell;
  double err_sum = 0.0;
  std::size_t cov = 0;
  for (std::size_t w = 0; w < n; ++w) {
    err_sum += abs_err[w];
    cov += covered[w];
  }
  cell.mae = err_sum / static_cast<double>(n);
  cell.coverage = static_cast<double>(cov) / static_cast<double>(n);
  cell.seconds = seconds_since(t0);
  return cell;
}

}  // namespace

EvalReport run_sweep(const SparseRatings& ratings, const ItemMetric* metric,
                     const SweepConfig& config) {
  if (config.measures.empty() || config.fractions.empty() || config.ks.empty())
    throw ConfigError("measures, fractions and ks must be nonempty");
  for (const std::string& key : config.measures) {
    if (key == "user-mean") continue;
    const MeasureInfo* info = find_measure(key);
    if (!info) throw ConfigError("unknown measure '" + key + "'");
    if (info->needs_metric && !metric)
      throw ConfigError("measure '" + key + "' needs an item metric");
  }
  for (const int k : config.ks)
    if (k < 1) throw ConfigError("K must be >= 1");

  EvalReport report;
  report.seed = config.split.seed;
  report.measures = config.measures;
  report.fractions = config.fractions;
  report.ks = config.ks;
  report.repetitions = config.split.repetitions;
  report.truncate_support = config.pmd_options.truncate_support;
  report.approximate = config.pmd_options.truncate_support > 0;

  std::vector<std::string> measures = config.measures;
  if (config.user_mean_baseline &&
      std::find(measures.begin(), measures.end(), "user-mean") == measures.end())
    measures.push_back("user-mean");

  if (config.score_cache_dir)
    std::filesystem::create_directories(*config.score_cache_dir);

  for (int rep = 0; rep < config.split.repetitions; ++rep) {
    for (const double fraction : config.fractions) {
      SplitSpec spec = config.split;
      spec.train_fraction = fraction;
      const TrainTest tt = split(ratings, spec, rep);
      std::vector<std::size_t> pairs;
      bool pairs_ready = false;

      for (const std::string& key : measures) {
        if (key == "user-mean") {
          MeasureContext ctx{tt.train, metric, config.pmd_options};
          for (const int k : config.ks) {
            const CellResult cell =
                predict_cell(tt, nullptr, nullptr, ctx, k, config.threads);
            report.rows.push_back({key, fraction, k, rep, cell.mae,
                                   cell.coverage, cell.seconds});
          }
          continue;
        }
        const MeasureInfo* info = find_measure(key);
        MeasureContext ctx{tt.train, metric, config.pmd_options};
        if (!pairs_ready) {
          pairs = needed_pairs(tt);
          pairs_ready = true;
        }

        ScoreTable table(tt.train.num_users());
        std::optional<std::filesystem::path> cache_file;
        if (config.score_cache_dir) {
          cache_file =
              score_cache_path(*config.score_cache_dir, key, fraction, rep, config);
          load_score_cache(*cache_file, table);
        }
        const ScoringStats stats =
            compute_scores(table, pairs, *info, ctx, config, fraction, rep);
        report.failed_pairs += stats.failures;
        if (cache_file && stats.computed > 0)
          save_score_cache(*cache_file, table);

        const double scoring_share =
            stats.seconds / static_cast<double>(config.ks.size());
        for (const int k : config.ks) {
          const CellResult cell =
              predict_cell(tt, &table, info, ctx, k, config.threads);
          report.rows.push_back({key, fraction, k, rep, cell.mae, cell.coverage,
                                 cell.seconds + scoring_share});
        }
      }
    }
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path,
                      const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "measure,fraction,k,rep,mae,coverage,wall_time_s\n";
  out.precision(10);
  for (const ReportRow& r : report.rows)
    out << r.measure << ',' << r.fraction << ',' << r.k << ',' << r.rep << ','
        << r.mae << ',' << r.coverage << ',' << r.wall_time_s << '\n';
}

void write_report_json(const std::filesystem::path& path,
                       const EvalReport& report) {
  nlohmann::json j;
  j["config"] = {{"seed", report.seed},
                 {"measures", report.measures},
                 {"fractions", report.fractions},
                 {"ks", report.ks},
                 {"repetitions", report.repetitions},
                 {"approximate", report.approximate},
                 {"truncate_support", report.truncate_support}};
  j["failed_pairs"] = report.failed_pairs;
  auto& by_measure = j["results"];
  for (const ReportRow& r : report.rows) {
    by_measure[r.measure].push_back({{"fraction", r.fraction},
                                     {"k", r.k},
                                     {"rep", r.rep},
                                     {"mae", r.mae},
                                     {"coverage", r.coverage},
                                     {"wall_time_s", r.wall_time_s}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

// Mean MAE per (measure, x) with other coordinates fixed.
void write_fig_csv(const std::filesystem::path& path, const EvalReport& report,
                   bool sparsity) {
  if (report.rows.empty()) throw EmptyTestSet("empty report");
  const int fixed_k = report.ks.empty() ? 0 : report.ks.front();
  const double fixed_fraction =
      report.fractions.empty() ? 0.0 : report.fractions.front();

  std::vector<std::string> series;
  for (const ReportRow& r : report.rows)
    if (std::find(series.begin(), series.end(), r.measure) == series.end())
      series.push_back(r.measure);

  std::vector<double> xs;
  if (sparsity)
    xs = report.fractions;
  else
    for (const int k : report.ks) xs.push_back(k);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << (sparsity ? "fraction" : "k");
  for (const auto& s : series) out << ',' << s;
  out << '\n';
  out.precision(10);
  for (const double x : xs) {
    out << x;
    for (const auto& s : series) {
      double sum = 0.0;
      int count = 0;
      for (const ReportRow& r : report.rows) {
        const bool match =
            sparsity ? (r.fraction == x && r.k == fixed_k)
                     : (r.k == static_cast<int>(x) && r.fraction == fixed_fraction);
        if (r.measure == s && match) {
          sum += r.mae;
          ++count;
        }
      }
      out << ',';
      if (count > 0) out << sum / count;
    }
    out << '\n';
  }
}

}  // namespace

void write_sparsity_fig_csv(const std::filesystem::path& path,
                            const EvalReport& report) {
  write_fig_csv(path, report, true);
}

void write_ksweep_fig_csv(const std::filesystem::path& path,
                          const EvalReport& report) {
  write_fig_csv(path, report, false);
}

}  // namespace pmd
