#include "pmd/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "pmd/parallel.hpp"

namespace pmd {

int IdRemap::add(std::int64_t raw) {
  const auto [it, inserted] = to_dense_.try_emplace(raw, size());
  if (inserted) to_raw_.push_back(raw);
  return it->second;
}

int IdRemap::lookup(std::int64_t raw) const {
  const auto it = to_dense_.find(raw);
  return it == to_dense_.end() ? -1 : it->second;
}

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split_fields(const std::string& line,
                                      const std::string& sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& field, std::size_t line_no) {
  const std::string s = strip(field);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("expected an integer, got '" + field + "'", line_no);
  return value;
}

double parse_real(const std::string& field, std::size_t line_no) {
  const std::string s = strip(field);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + field + "'", line_no);
  }
}

Dataset parse_delimited_ratings(const std::filesystem::path& path,
                                const std::string& sep, std::size_t min_fields,
                                RatingScale scale) {
  std::ifstream in = open_or_throw(path);
  Dataset ds{SparseRatings(0, 0, {}, scale), {}, {}};
  std::vector<RatingEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split_fields(line, sep);
    if (fields.size() < min_fields)
      throw ParseError("expected at least " + std::to_string(min_fields) +
                           " '" + sep + "'-separated fields",
                       line_no);
    const std::int64_t raw_user = parse_int(fields[0], line_no);
    const std::int64_t raw_item = parse_int(fields[1], line_no);
    const double rating = parse_real(fields[2], line_no);
    if (!(rating >= scale.min_rating && rating <= scale.max_rating))
      throw ParseError("rating " + std::to_string(rating) + " outside scale [" +
                           std::to_string(scale.min_rating) + ", " +
                           std::to_string(scale.max_rating) + "]",
                       line_no);
    entries.push_back(
        {ds.users.add(raw_user), ds.items.add(raw_item), rating});
  }
  ds.ratings =
      SparseRatings(ds.users.size(), ds.items.size(), std::move(entries), scale);
  return ds;
}

}  // namespace

Dataset parse_ml100k(const std::filesystem::path& path) {
  return parse_delimited_ratings(path, "\t", 4, RatingScale{1.0, 5.0});
}

Dataset parse_ml1m(const std::filesystem::path& path) {
  return parse_delimited_ratings(path, "::", 4, RatingScale{1.0, 5.0});
}

Dataset parse_csv(const std::filesystem::path& path, RatingScale scale) {
  std::ifstream in = open_or_throw(path);
  Dataset ds{SparseRatings(0, 0, {}, scale), {}, {}};
  std::vector<RatingEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split_fields(line, ",");
    if (first) {
      first = false;
      // optional header: skip when the rating column is not numeric
      if (fields.size() >= 3) {
        try {
          (void)parse_real(fields[2], line_no);
        } catch (const ParseError&) {
          continue;
        }
      }
    }
    if (fields.size() < 3)
      throw ParseError("expected user,item,rating", line_no);
    const std::int64_t raw_user = parse_int(fields[0], line_no);
    const std::int64_t raw_item = parse_int(fields[1], line_no);
    const double rating = parse_real(fields[2], line_no);
    if (!(rating >= scale.min_rating && rating <= scale.max_rating))
      throw ParseError("rating " + std::to_string(rating) + " outside scale",
                       line_no);
    entries.push_back(
        {ds.users.add(raw_user), ds.items.add(raw_item), rating});
  }
  ds.ratings =
      SparseRatings(ds.users.size(), ds.items.size(), std::move(entries), scale);
  return ds;
}

std::pair<std::vector<std::vector<double>>, std::vector<std::string>>
parse_similarity_table_csv(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> table;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split_fields(line, ",");
    if (names.empty()) {
      // header: first cell is a corner label, the rest are item names
      for (std::size_t k = 1; k < fields.size(); ++k)
        names.push_back(strip(fields[k]));
      if (names.empty()) throw ParseError("empty similarity header", line_no);
      continue;
    }
    if (fields.size() != names.size() + 1)
      throw ParseError("similarity row width mismatch", line_no);
    std::vector<double> row(names.size());
    for (std::size_t k = 0; k < names.size(); ++k)
      row[k] = parse_real(fields[k + 1], line_no);
    table.push_back(std::move(row));
  }
  if (table.size() != names.size())
    throw ParseError("similarity table is not square");
  return {std::move(table), std::move(names)};
}

TagGenome load_tag_genome(const std::filesystem::path& path,
                          const IdRemap& items) {
  std::ifstream in = open_or_throw(path);
  struct Row {
    int item;
    std::int64_t tag;
    float relevance;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t min_tag = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_tag = std::numeric_limits<std::int64_t>::min();
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split_fields(line, ",");
    if (fields.size() < 3)
      throw ParseError("expected movieId,tagId,relevance", line_no);
    if (first) {
      first = false;
      try {
        (void)parse_real(fields[2], line_no);
      } catch (const ParseError&) {
        continue;  // header row
      }
    }
    const std::int64_t raw_movie = parse_int(fields[0], line_no);
    const std::int64_t tag = parse_int(fields[1], line_no);
    const double relevance = parse_real(fields[2], line_no);
    if (!(relevance >= 0.0 && relevance <= 1.0))
      throw ParseError("relevance " + std::to_string(relevance) +
                           " outside [0, 1]",
                       line_no);
    const int dense = items.lookup(raw_movie);
    if (dense < 0) continue;  // movie not in the ratings matrix
    min_tag = std::min(min_tag, tag);
    max_tag = std::max(max_tag, tag);
    rows.push_back({dense, tag, static_cast<float>(relevance)});
  }

  TagGenome genome;
  genome.present.assign(items.size(), false);
  genome.vectors.resize(items.size());
  if (!rows.empty()) {
    // 1-based tag ids (the usual convention) map to position tag-1.
    const std::int64_t offset = min_tag >= 1 ? 1 : 0;
    genome.num_tags = static_cast<int>(max_tag + 1 - offset);
    for (const Row& r : rows) {
      auto& vec = genome.vectors[r.item];
      if (vec.empty()) vec.assign(genome.num_tags, -1.0f);  // -1 = unset
      genome.present[r.item] = true;
      const auto pos = static_cast<std::size_t>(r.tag - offset);
      if (vec[pos] >= 0.0f) ++genome.duplicate_rows;
      vec[pos] = r.relevance;  // duplicates keep the last occurrence
    }
    for (auto& vec : genome.vectors)
      for (float& v : vec)
        if (v < 0.0f) v = 0.0f;  // tags without a row
  }
  for (int i = 0; i < items.size(); ++i)
    if (!genome.present[i]) ++genome.missing_items;
  return genome;
}

void write_distance_cache(const std::filesystem::path& path,
                          const DenseItemMetric& metric) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CacheInvalid("cannot write cache " + path.string());
  out.write(kDistanceCacheMagic, 4);
  const std::uint32_t version = kDistanceCacheVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint8_t mode = static_cast<std::uint8_t>(metric.mode());
  out.write(reinterpret_cast<const char*>(&mode), 1);
  const std::uint32_t count = static_cast<std::uint32_t>(metric.num_items());
  out.write(reinterpret_cast<const char*>(&count), 4);
  std::vector<float> packed(metric.raw_distances().begin(),
                            metric.raw_distances().end());
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size() * sizeof(float)));
  if (!out) throw CacheInvalid("short write to cache " + path.string());
}

std::unique_ptr<DenseItemMetric> read_distance_cache(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheInvalid("cannot open cache " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDistanceCacheMagic, 4) != 0)
    throw CacheInvalid("bad cache magic in " + path.string());
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != kDistanceCacheVersion)
    throw CacheInvalid("unsupported cache version " + std::to_string(version));
  std::uint8_t mode_byte = 0;
  in.read(reinterpret_cast<char*>(&mode_byte), 1);
  if (!in || mode_byte > 1)
    throw CacheInvalid("bad metric mode byte in " + path.string());
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in) throw CacheInvalid("truncated cache header in " + path.string());
  const std::size_t expected =
      static_cast<std::size_t>(count) * (count > 0 ? count - 1 : 0) / 2;
  std::vector<float> packed(expected);
  in.read(reinterpret_cast<char*>(packed.data()),
          static_cast<std::streamsize>(expected * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(float)))
    throw CacheInvalid("truncated cache payload in " + path.string());
  std::vector<double> distances(packed.begin(), packed.end());
  in.peek();
  if (!in.eof()) throw CacheInvalid("trailing bytes in " + path.string());

  const MetricMode mode = static_cast<MetricMode>(mode_byte);
  const double d_max = mode == MetricMode::kArccos ? std::acos(0.0) : 1.0;
  const bool verified = sampled_triangle_check(static_cast<int>(count), distances);
  return std::make_unique<DenseItemMetric>(static_cast<int>(count), mode,
                                           std::move(distances), d_max, verified);
}

namespace {

std::unique_ptr<DenseItemMetric> materialize_metric(const TagGenome& genome,
                                                    MetricMode mode,
                                                    int threads) {
  const LazyVectorMetric lazy(genome.vectors, genome.present, mode);
  const int n = lazy.num_items();
  std::vector<double> distances(
      static_cast<std::size_t>(n) * (n > 0 ? n - 1 : 0) / 2);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t base = i > 0 ? i * (i - 1) / 2 : 0;
      for (std::size_t j = 0; j < i; ++j)
        distances[base + j] =
            lazy.distance(static_cast<ItemId>(i), static_cast<ItemId>(j));
    }
  });
  const bool verified = mode == MetricMode::kArccos
                            ? true
                            : sampled_triangle_check(n, distances);
  return std::make_unique<DenseItemMetric>(n, mode, std::move(distances),
                                           lazy.max_distance(), verified);
}

}  // namespace

std::shared_ptr<const ItemMetric> build_item_metric(
    const TagGenome& genome, MetricMode mode,
    const std::optional<std::filesystem::path>& cache_path, bool materialize,
    int threads) {
  if (!materialize)
    return std::make_shared<LazyVectorMetric>(genome.vectors, genome.present,
                                              mode);
  if (cache_path && std::filesystem::exists(*cache_path)) {
    try {
      auto cached = read_distance_cache(*cache_path);
      if (cached->num_items() == static_cast<int>(genome.present.size()) &&
          cached->mode() == mode)
        return std::shared_ptr<const ItemMetric>(std::move(cached));
      // fall through: cache belongs to a different build
    } catch (const CacheInvalid&) {
      // rebuild below
    }
  }
  auto metric = materialize_metric(genome, mode, threads);
  if (cache_path) write_distance_cache(*cache_path, *metric);
  return std::shared_ptr<const ItemMetric>(std::move(metric));
}

}  // namespace pmd
