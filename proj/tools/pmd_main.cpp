// Command line front end: dataset ingestion, item-metric construction, the
// toy case study, single-pair inspection and the cross-validation sweeps.
//
// Exit codes: 0 success, 1 failed --check assertion, 2 configuration error,
// 3 data error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmd/datasets.hpp"
#include "pmd/evaluation.hpp"
#include "pmd/measures.hpp"
#include "pmd/preference.hpp"
#include "pmd/recommender.hpp"

using namespace pmd;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "pmd 0.1.0 (distance cache v1, score cache v1)";

// ----------------------------------------------------------------- fixtures
// The built-in six-user / five-movie example; items 1..5 are IronMan,
// BatMan, SpiderMan, Titanic, Casablanca.
Dataset builtin_toy_dataset() {
  Dataset ds{SparseRatings(0, 0, {}), {}, {}};
  std::vector<RatingEntry> entries;
  const std::vector<std::tuple<int, int, double>> rows = {
      {1, 1, 5}, {1, 3, 2}, {1, 4, 3}, {2, 2, 5}, {2, 3, 2}, {2, 4, 3},
      {3, 3, 2}, {3, 4, 3}, {3, 5, 5}, {4, 1, 5}, {4, 2, 5}, {4, 3, 5},
      {5, 4, 5}, {6, 5, 5}};
  for (const auto& [u, i, r] : rows)
    entries.push_back({ds.users.add(u), ds.items.add(i), r});
  ds.ratings = SparseRatings(ds.users.size(), ds.items.size(),
                             std::move(entries), RatingScale{1.0, 5.0});
  return ds;
}

// Keyed by raw item id minus one: ids 1..3 are the sci-fi block, 4..5 the
// romance block.
std::vector<std::vector<double>> builtin_toy_similarity() {
  const auto block = [](int i) { return i <= 2 ? 0 : 1; };
  std::vector<std::vector<double>> sim(5, std::vector<double>(5));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      sim[i][j] = i == j ? 1.0 : (block(i) == block(j) ? 0.8 : 0.3);
  return sim;
}

std::vector<std::string> builtin_toy_similarity_names() {
  return {"1", "2", "3", "4", "5"};
}

// Reorders a raw similarity table (columns keyed by raw id strings) onto the
// dataset's dense item ids.
std::vector<std::vector<double>> align_similarity(
    const std::vector<std::vector<double>>& table,
    const std::vector<std::string>& names, const IdRemap& items) {
  std::vector<int> column_of(items.size(), -1);
  for (int dense = 0; dense < items.size(); ++dense) {
    const std::string raw = std::to_string(items.raw_of(dense));
    for (std::size_t c = 0; c < names.size(); ++c)
      if (names[c] == raw) {
        column_of[dense] = static_cast<int>(c);
        break;
      }
    if (column_of[dense] < 0)
      throw ConfigError("similarity table has no column for item id " + raw);
  }
  std::vector<std::vector<double>> sim(items.size(),
                                       std::vector<double>(items.size()));
  for (int i = 0; i < items.size(); ++i)
    for (int j = 0; j < items.size(); ++j)
      sim[i][j] = table[column_of[i]][column_of[j]];
  return sim;
}

MetricMode parse_mode(const std::string& mode) {
  if (mode == "arccos") return MetricMode::kArccos;
  if (mode == "one-minus") return MetricMode::kOneMinus;
  throw ConfigError("unknown metric mode '" + mode + "'");
}

Dataset load_dataset(const std::string& kind, const std::string& ratings_path) {
  if (ratings_path.empty()) throw ConfigError("--ratings is required");
  if (kind == "ml-100k") return parse_ml100k(ratings_path);
  if (kind == "ml-1m") return parse_ml1m(ratings_path);
  if (kind == "csv") return parse_csv(ratings_path);
  throw ConfigError("unknown dataset kind '" + kind + "'");
}

struct MetricSetup {
  std::shared_ptr<const ItemMetric> metric;
  int genome_missing = -1;  // -1 = not genome-backed
};

// Item metric from either an explicit similarity-table CSV (toy scale) or
// tag-genome vectors (MovieLens scale). Exactly one source must be present
// unless allow_builtin permits falling back to the toy table.
MetricSetup build_metric(const Dataset& ds, const std::string& item_sim_path,
                         const std::string& genome_path, MetricMode mode,
                         const std::string& cache_path, bool lazy, int threads,
                         bool allow_builtin) {
  MetricSetup setup;
  if (!item_sim_path.empty()) {
    const auto [table, names] = parse_similarity_table_csv(item_sim_path);
    setup.metric = item_metric_from_similarity(
        align_similarity(table, names, ds.items), mode);
    return setup;
  }
  if (!genome_path.empty()) {
    const TagGenome genome = load_tag_genome(genome_path, ds.items);
    setup.genome_missing = genome.missing_items;
    std::optional<fs::path> cache;
    if (!cache_path.empty()) cache = cache_path;
    setup.metric = build_item_metric(genome, mode, cache, !lazy, threads);
    return setup;
  }
  if (allow_builtin) {
    setup.metric = item_metric_from_similarity(
        align_similarity(builtin_toy_similarity(),
                         builtin_toy_similarity_names(), ds.items),
        mode);
    return setup;
  }
  throw ConfigError("an item metric needs --item-sim or --genome");
}

std::string format_value(const MeasureResult& r, bool as_similarity) {
  if (!r.computable) return "---";
  const double v = (as_similarity && r.kind == MeasureKind::kDistance)
                       ? 1.0 - r.value
                       : r.value;
  std::ostringstream out;
  out << std::setprecision(4) << v;
  return out.str();
}

// ---------------------------------------------------------------- case study
int cmd_case_study(const std::string& ratings_path,
                   const std::string& item_sim_path, const std::string& mode_str,
                   const std::string& out_dir, bool check) {
  Dataset ds = ratings_path.empty() ? builtin_toy_dataset()
                                    : parse_csv(ratings_path);
  const MetricMode mode = parse_mode(mode_str);
  std::vector<std::vector<double>> sim;
  if (item_sim_path.empty()) {
    if (!ratings_path.empty())
      throw ConfigError("--item-sim is required with a custom --ratings");
    sim = align_similarity(builtin_toy_similarity(),
                           builtin_toy_similarity_names(), ds.items);
  } else {
    const auto [table, names] = parse_similarity_table_csv(item_sim_path);
    sim = align_similarity(table, names, ds.items);
  }
  const auto metric = item_metric_from_similarity(sim, mode);

  const std::vector<std::pair<int, int>> raw_pairs = {
      {1, 2}, {2, 3}, {4, 5}, {5, 6}};
  const MeasureContext ctx{ds.ratings, metric.get(), {}};

  std::vector<std::string> columns;
  for (const auto& info : measure_catalog())
    columns.push_back(info.kind == MeasureKind::kDistance ? "1-" + info.key
                                                          : info.key);

  std::cout << "case study (" << mode_str << " item distances)\n";
  std::cout << std::left << std::setw(10) << "pair";
  for (const auto& c : columns) std::cout << std::setw(9) << c;
  std::cout << '\n';

  std::ostringstream csv;
  csv << "pair";
  for (const auto& info : measure_catalog()) csv << ',' << info.key;
  csv << '\n';

  for (const auto& [a, b] : raw_pairs) {
    const int ua = ds.users.lookup(a);
    const int ub = ds.users.lookup(b);
    if (ua < 0 || ub < 0)
      throw ConfigError("fixture lacks user " + std::to_string(a) + " or " +
                        std::to_string(b));
    std::cout << std::setw(10)
              << ("u" + std::to_string(a) + "&u" + std::to_string(b));
    csv << 'u' << a << "&u" << b;
    for (const auto& info : measure_catalog()) {
      const MeasureResult r = info.fn(ua, ub, ctx);
      std::cout << std::setw(9) << format_value(r, true);
      csv << ',' << (r.computable ? std::to_string(r.value) : "---");
    }
    std::cout << '\n';
    csv << '\n';
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "case-study.csv", std::ios::trunc);
    out << csv.str();
    std::cout << "wrote " << (fs::path(out_dir) / "case-study.csv") << '\n';
  }

  if (!check) return 0;

  // golden assertions (one-minus metric for the starred values, both modes
  // for the orderings)
  int failures = 0;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) {
      ++failures;
      std::cerr << "check failed: " << what << '\n';
    }
  };
  const int u1 = ds.users.lookup(1), u2 = ds.users.lookup(2),
            u3 = ds.users.lookup(3), u4 = ds.users.lookup(4),
            u5 = ds.users.lookup(5), u6 = ds.users.lookup(6);
  for (const auto [a, b] : {std::pair{u1, u2}, std::pair{u2, u3}}) {
    expect(std::abs(cos_sim(a, b, ds.ratings).value - 1.0) <= 1e-9, "cos == 1");
    expect(std::abs(pcc_sim(a, b, ds.ratings).value - 1.0) <= 1e-9, "pcc == 1");
    expect(std::abs(msd_dist(a, b, ds.ratings).value) <= 1e-9, "msd == 0");
    expect(std::abs(jaccard_sim(a, b, ds.ratings).value - 0.5) <= 1e-9,
           "jaccard == 0.5");
    expect(std::abs(urp_sim(a, b, ds.ratings).value - 0.5) <= 1e-9,
           "urp == 0.5");
    expect(std::abs(jmsd_sim(a, b, ds.ratings).value - 0.5) <= 1e-9,
           "jmsd == 0.5");
  }
  for (const auto [a, b] : {std::pair{u4, u5}, std::pair{u5, u6}}) {
    expect(!cos_sim(a, b, ds.ratings).computable, "cos uncomputable");
    expect(!pcc_sim(a, b, ds.ratings).computable, "pcc uncomputable");
    expect(!msd_dist(a, b, ds.ratings).computable, "msd uncomputable");
    expect(!jmsd_sim(a, b, ds.ratings).computable, "jmsd uncomputable");
    expect(!nhsm_sim(a, b, ds.ratings).computable, "nhsm uncomputable");
  }
  expect(std::abs(jaccard_sim(u4, u5, ds.ratings).value) <= 1e-9,
         "jaccard(u4,u5) == 0");

  const auto one_minus =
      item_metric_from_similarity(sim, MetricMode::kOneMinus);
  const auto arccos = item_metric_from_similarity(sim, MetricMode::kArccos);
  expect(std::abs(1.0 - pmd_distance(u4, u5, ds.ratings, *one_minus).value - 0.3) <= 1e-9,
         "1-PMD(u4,u5) == 0.3");
  expect(std::abs(1.0 - pmd_distance(u5, u6, ds.ratings, *one_minus).value - 0.8) <= 1e-9,
         "1-PMD(u5,u6) == 0.8");
  const auto& kernel = agreement_kernel();
  expect(std::abs(bcf_family_sim(u4, u5, ds.ratings, *one_minus, kernel, true)
                      .value -
                  0.3) <= 1e-9,
         "N-BCF(u4,u5) == 0.3");
  expect(std::abs(bcf_family_sim(u5, u6, ds.ratings, *one_minus, kernel, true)
                      .value -
                  0.8) <= 1e-9,
         "N-BCF(u5,u6) == 0.8");
  for (const ItemMetric* m : {static_cast<const ItemMetric*>(one_minus.get()),
                              static_cast<const ItemMetric*>(arccos.get())}) {
    expect(pmd_distance(u1, u2, ds.ratings, *m).value < pmd_distance(u2, u3, ds.ratings, *m).value,
           "PMD(u1,u2) < PMD(u2,u3)");
    expect(pmd_distance(u4, u5, ds.ratings, *m).value > pmd_distance(u5, u6, ds.ratings, *m).value,
           "PMD(u4,u5) > PMD(u5,u6)");
  }

  if (failures > 0) {
    std::cerr << failures << " golden assertion(s) failed\n";
    return 1;
  }
  std::cout << "all golden assertions hold\n";
  return 0;
}

// ---------------------------------------------------------------------- pair
int cmd_pair(const Dataset& ds, const MetricSetup& metric, std::int64_t raw_a,
             std::int64_t raw_b, const std::string& measure_key,
             bool dump_coupling, const PmdOptions& pmd_options) {
  const int a = ds.users.lookup(raw_a);
  const int b = ds.users.lookup(raw_b);
  if (a < 0) throw NotFound("user " + std::to_string(raw_a) + " not in dataset");
  if (b < 0) throw NotFound("user " + std::to_string(raw_b) + " not in dataset");
  const MeasureInfo* info = find_measure(measure_key);
  if (!info) throw ConfigError("unknown measure '" + measure_key + "'");
  if (info->needs_metric && !metric.metric)
    throw ConfigError("measure '" + measure_key + "' needs --item-sim or --genome");

  const MeasureContext ctx{ds.ratings, metric.metric.get(), pmd_options};
  const MeasureResult r = info->fn(a, b, ctx);
  std::cout << measure_key << "(" << raw_a << ", " << raw_b << ") ";
  if (!r.computable) {
    std::cout << "uncomputable\n";
    return 0;
  }
  std::cout << "= " << std::setprecision(10) << r.value
            << (info->kind == MeasureKind::kDistance ? " (distance)"
                                                     : " (similarity)")
            << '\n';

  if (dump_coupling && measure_key == "pmd") {
    const Preference pa = build_preference(ds.ratings, a);
    const Preference pb = build_preference(ds.ratings, b);
    const TransportProblem problem =
        TransportProblem::between(pa, pb, *metric.metric);
    const TransportSolution sol = solve_exact(problem);
    std::cout << "optimal coupling (item_a, item_b, mass, cost):\n";
    for (int i = 0; i < sol.coupling.rows(); ++i)
      for (int j = 0; j < sol.coupling.cols(); ++j) {
        const double mass = sol.coupling.at(i, j);
        if (mass <= 1e-12) continue;
        std::cout << "  " << ds.items.raw_of(sol.coupling.row_items[i]) << "  "
                  << ds.items.raw_of(sol.coupling.col_items[j]) << "  "
                  << std::setprecision(6) << mass << "  "
                  << problem.cost_at(i, j) << '\n';
      }
    std::cout << "pivots: " << sol.iterations << '\n';
  }
  return 0;
}

// ------------------------------------------------------------------ evaluate
void apply_preset(const std::string& preset, SweepConfig& config) {
  const std::vector<double> sparsity_fractions = {0.8,       2.0 / 3.0, 0.5,
                                                  1.0 / 3.0, 0.2,       0.1};
  std::vector<int> ks_100k, ks_1m;
  for (int k = 5; k <= 60; k += 5) ks_100k.push_back(k);
  for (int k = 4; k <= 60; k += 4) ks_1m.push_back(k);
  const std::vector<std::string> plotted = {"cos",  "pcc", "msd",   "jmsd",
                                            "nhsm", "bcf", "n-bcf", "pmd"};
  config.measures = plotted;
  if (preset == "fig3a") {
    config.fractions = sparsity_fractions;
    config.ks = {40};
  } else if (preset == "fig3b") {
    config.fractions = {0.8};
    config.ks = ks_100k;
  } else if (preset == "fig3c") {
    config.fractions = {0.1};
    config.ks = ks_100k;
  } else if (preset == "fig3d") {
    config.fractions = sparsity_fractions;
    config.ks = {40};
  } else if (preset == "fig3e") {
    config.fractions = {0.8};
    config.ks = ks_1m;
  } else if (preset == "fig3f") {
    config.fractions = {0.1};
    config.ks = ks_1m;
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
}

int cmd_evaluate(const Dataset& ds, const MetricSetup& metric,
                 SweepConfig config, const std::string& out_dir) {
  bool needs_metric = false;
  for (const auto& key : config.measures)
    if (const MeasureInfo* info = find_measure(key);
        info && info->needs_metric)
      needs_metric = true;
  if (needs_metric && !metric.metric)
    throw ConfigError("the measure list needs an item metric (--genome or --item-sim)");

  config.progress = [](const SweepProgress& p) {
    std::cerr << "\r" << p.measure << " f=" << std::setprecision(3) << p.fraction
              << " rep=" << p.rep << ": " << p.pairs_done << "/" << p.pairs_total
              << " pairs (" << static_cast<long>(p.pairs_per_second)
              << " pairs/s)  " << (p.finished ? "\n" : "") << std::flush;
  };

  const EvalReport report =
      run_sweep(ds.ratings, metric.metric.get(), config);

  fs::create_directories(out_dir);
  write_report_csv(fs::path(out_dir) / "report.csv", report);
  write_report_json(fs::path(out_dir) / "report.json", report);
  write_sparsity_fig_csv(fs::path(out_dir) / "fig-sparsity.csv", report);
  write_ksweep_fig_csv(fs::path(out_dir) / "fig-ksweep.csv", report);

  // summary: mean MAE per (measure, fraction) at the first K
  std::cout << "mean MAE at K=" << config.ks.front() << " (rows: measure)\n";
  std::cout << std::left << std::setw(12) << "measure";
  for (const double f : config.fractions)
    std::cout << std::setw(10) << ("f=" + std::to_string(f).substr(0, 5));
  std::cout << '\n';
  std::vector<std::string> listed = config.measures;
  listed.push_back("user-mean");
  for (const auto& measure : listed) {
    std::cout << std::setw(12) << measure;
    for (const double f : config.fractions) {
      double sum = 0.0;
      int count = 0;
      for (const ReportRow& r : report.rows)
        if (r.measure == measure && r.fraction == f && r.k == config.ks.front()) {
          sum += r.mae;
          ++count;
        }
      std::ostringstream cell;
      if (count) cell << std::setprecision(4) << sum / count;
      std::cout << std::setw(10) << cell.str();
    }
    std::cout << '\n';
  }
  if (report.approximate)
    std::cout << "note: preferences truncated to top-" << report.truncate_support
              << " masses; results are approximate\n";
  std::cout << "reports written to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference mover's distance toolkit"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config");
  app.require_subcommand(1);

  // shared dataset/metric options
  std::string dataset_kind = "csv", ratings_path, genome_path, item_sim_path;
  std::string mode_str = "arccos", cache_path;
  int threads = 0;
  bool lazy_metric = false;
  const auto add_data_options = [&](CLI::App* cmd, bool with_metric) {
    cmd->add_option("--dataset", dataset_kind,
                    "dataset kind: ml-100k, ml-1m or csv");
    cmd->add_option("--ratings", ratings_path, "ratings file path");
    if (with_metric) {
      cmd->add_option("--genome", genome_path, "tag-genome scores CSV");
      cmd->add_option("--item-sim", item_sim_path, "item similarity table CSV");
      cmd->add_option("--mode", mode_str, "item distance mode: arccos | one-minus");
      cmd->add_option("--metric-cache", cache_path, "distance cache file");
      cmd->add_flag("--lazy-metric", lazy_metric,
                    "compute distances on demand instead of materializing");
    }
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
  };

  auto* ingest = app.add_subcommand("ingest", "parse a ratings file and report stats");
  add_data_options(ingest, false);

  auto* metric_cmd =
      app.add_subcommand("metric", "build (and cache) the item metric");
  add_data_options(metric_cmd, true);

  auto* case_study = app.add_subcommand(
      "case-study", "similarity table for the built-in six-user example");
  std::string cs_out;
  bool cs_check = false;
  std::string cs_ratings, cs_item_sim, cs_mode = "one-minus";
  case_study->add_option("--ratings", cs_ratings,
                         "custom fixture ratings CSV (user,item,rating)");
  case_study->add_option("--item-sim", cs_item_sim,
                         "custom fixture similarity CSV");
  case_study->add_option("--mode", cs_mode, "item distance mode for the table");
  case_study->add_option("--out", cs_out, "directory for case-study.csv");
  case_study->add_flag("--check", cs_check,
                       "assert the golden values; nonzero exit on failure");

  auto* pair_cmd =
      app.add_subcommand("pair", "score one user pair with one measure");
  std::int64_t pair_a = 0, pair_b = 0;
  std::string pair_measure = "pmd";
  bool pair_coupling = false;
  bool pair_builtin_toy = false;
  add_data_options(pair_cmd, true);
  pair_cmd->add_option("user_a", pair_a, "first raw user id")->required();
  pair_cmd->add_option("user_b", pair_b, "second raw user id")->required();
  pair_cmd->add_option("--measure", pair_measure, "measure key");
  pair_cmd->add_flag("--coupling", pair_coupling,
                     "print the optimal coupling (pmd only)");
  pair_cmd->add_flag("--toy", pair_builtin_toy,
                     "use the built-in six-user example");

  auto* evaluate =
      app.add_subcommand("evaluate", "cross-validation sweep with reports");
  add_data_options(evaluate, true);
  SweepConfig sweep;
  std::string out_dir = "out", preset, solver_str = "exact", cache_dir;
  std::vector<std::string> measure_list = {"pmd", "cos"};
  std::vector<double> fractions = {0.8};
  std::vector<int> ks;
  int k_default = 40, reps = 5;
  std::uint64_t seed = 42;
  double epsilon = 1e-3;
  int truncate = 0;
  evaluate->add_option("--measures", measure_list, "measure keys")->delimiter(',');
  evaluate->add_option("--fractions", fractions, "train fractions")->delimiter(',');
  evaluate->add_option("--ks", ks, "neighbor counts")->delimiter(',');
  evaluate->add_option("--k", k_default, "neighbor count when --ks is not given");
  evaluate->add_option("--reps", reps, "repetitions per cell");
  evaluate->add_option("--seed", seed, "split seed");
  evaluate->add_option("--solver", solver_str, "pmd solver: exact | entropic");
  evaluate->add_option("--epsilon", epsilon, "entropic regularization");
  evaluate->add_option("--truncate", truncate,
                       "keep top-T preference masses (0 = exact)");
  evaluate->add_option("--out", out_dir, "output directory");
  evaluate->add_option("--score-cache", cache_dir,
                       "directory for pairwise score caches");
  evaluate->add_option("--preset", preset,
                       "fig3a..fig3f experiment presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(case_study))
      return cmd_case_study(cs_ratings, cs_item_sim, cs_mode, cs_out, cs_check);

    if (app.got_subcommand(ingest)) {
      const Dataset ds = load_dataset(dataset_kind, ratings_path);
      std::cout << "users:      " << ds.ratings.num_users() << '\n'
                << "items:      " << ds.ratings.num_items() << '\n'
                << "ratings:    " << ds.ratings.num_entries() << '\n'
                << "duplicates: " << ds.ratings.duplicates_dropped() << '\n'
                << "density:    "
                << static_cast<double>(ds.ratings.num_entries()) /
                       (static_cast<double>(ds.ratings.num_users()) *
                        std::max(1, ds.ratings.num_items()))
                << '\n'
                << "global mean rating: " << ds.ratings.global_mean() << '\n';
      return 0;
    }

    if (app.got_subcommand(metric_cmd)) {
      const Dataset ds = load_dataset(dataset_kind, ratings_path);
      const MetricSetup setup =
          build_metric(ds, item_sim_path, genome_path, parse_mode(mode_str),
                       cache_path, lazy_metric, threads, false);
      std::cout << "items:        " << setup.metric->num_items() << '\n'
                << "mode:         " << metric_mode_name(setup.metric->mode())
                << '\n'
                << "max distance: " << setup.metric->max_distance() << '\n'
                << "metric:       " << (setup.metric->is_metric() ? "yes" : "no")
                << '\n';
      if (setup.genome_missing >= 0)
        std::cout << "items without genome vectors: " << setup.genome_missing
                  << " (isolated at max distance)\n";
      if (!cache_path.empty()) std::cout << "cache: " << cache_path << '\n';
      return 0;
    }

    if (app.got_subcommand(pair_cmd)) {
      Dataset ds = pair_builtin_toy ? builtin_toy_dataset()
                                    : load_dataset(dataset_kind, ratings_path);
      PmdOptions options;
      options.solver = solver_str == "entropic" ? SolverTag::kEntropic
                                                : SolverTag::kExact;
      const MetricSetup setup =
          build_metric(ds, item_sim_path, genome_path, parse_mode(mode_str),
                       cache_path, lazy_metric, threads, pair_builtin_toy);
      return cmd_pair(ds, setup, pair_a, pair_b, pair_measure, pair_coupling,
                      options);
    }

    // evaluate
    const Dataset ds = load_dataset(dataset_kind, ratings_path);
    if (!preset.empty()) apply_preset(preset, sweep);
    if (preset.empty()) {
      sweep.measures = measure_list;
      sweep.fractions = fractions;
      sweep.ks = ks.empty() ? std::vector<int>{k_default} : ks;
    } else {
      // explicit flags override the preset
      if (evaluate->count("--measures") > 0) sweep.measures = measure_list;
      if (evaluate->count("--fractions") > 0) sweep.fractions = fractions;
      if (evaluate->count("--ks") > 0) sweep.ks = ks;
    }
    sweep.split.repetitions = reps;
    sweep.split.seed = seed;
    sweep.threads = threads;
    if (solver_str == "entropic") {
      sweep.pmd_options.solver = SolverTag::kEntropic;
      sweep.pmd_options.entropic_epsilon = epsilon;
    } else if (solver_str != "exact") {
      throw ConfigError("unknown solver '" + solver_str + "'");
    }
    sweep.pmd_options.truncate_support = truncate;
    if (!cache_dir.empty()) sweep.score_cache_dir = cache_dir;

    const MetricSetup setup =
        build_metric(ds, item_sim_path, genome_path, parse_mode(mode_str),
                     cache_path, lazy_metric, threads, true);
    return cmd_evaluate(ds, setup, sweep, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
