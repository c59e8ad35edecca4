#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pmd/item_metric.hpp"
#include "pmd/ratings.hpp"

namespace pmd {

/// Bijective map between raw file ids and the dense indices used
/// everywhere else. Dense ids are assigned in first-seen order, so
/// ingesting the same file twice yields identical ids.
class IdRemap {
 public:
  int add(std::int64_t raw);           // existing or freshly assigned dense id
  int lookup(std::int64_t raw) const;  // -1 when unseen
  std::int64_t raw_of(int dense) const { return to_raw_[dense]; }
  int size() const { return static_cast<int>(to_raw_.size()); }

 private:
  std::vector<std::int64_t> to_raw_;
  std::unordered_map<std::int64_t, int> to_dense_;
};

struct Dataset {
  SparseRatings ratings;
  IdRemap users;
  IdRemap items;
};

/// MovieLens-100k u.data: TAB-separated `user item rating timestamp`,
/// ratings on the 1-5 scale.
Dataset parse_ml100k(const std::filesystem::path& path);

/// MovieLens-1M ratings.dat: `UserID::MovieID::Rating::Timestamp`.
Dataset parse_ml1m(const std::filesystem::path& path);

/// Generic `user,item,rating` CSV (header optional); used for toy fixtures.
Dataset parse_csv(const std::filesystem::path& path, RatingScale scale = {});

/// Square `item,item,similarity`-style CSV holding a full similarity table:
/// header row and column of item names, cells in [-1, 1].
std::pair<std::vector<std::vector<double>>, std::vector<std::string>>
parse_similarity_table_csv(const std::filesystem::path& path);

struct TagGenome {
  int num_tags = 0;
  std::vector<std::vector<float>> vectors;  // indexed by dense item id
  std::vector<bool> present;
  int missing_items = 0;
  std::size_t duplicate_rows = 0;
};

/// genome-scores.csv rows `movieId,tagId,relevance` (header optional),
/// relevance in [0, 1]. Movies absent from the ratings are skipped; rated
/// movies absent from the genome are flagged missing.
TagGenome load_tag_genome(const std::filesystem::path& path,
                          const IdRemap& items);

/// Distance cache layout: magic "PMDC", format version u32, mode byte,
/// item count u32, then the row-major lower-triangular float32 distances.
inline constexpr char kDistanceCacheMagic[4] = {'P', 'M', 'D', 'C'};
inline constexpr std::uint32_t kDistanceCacheVersion = 1;

void write_distance_cache(const std::filesystem::path& path,
                          const DenseItemMetric& metric);
/// Throws CacheInvalid on any header or size mismatch.
std::unique_ptr<DenseItemMetric> read_distance_cache(
    const std::filesystem::path& path);

/// Builds the item metric from genome vectors. With materialize the full
/// distance table is computed (in parallel) and optionally cached on disk;
/// an unreadable or stale cache is rebuilt and rewritten. Without
/// materialize a lazy vector-backed metric is returned and the cache path
/// is ignored.
std::shared_ptr<const ItemMetric> build_item_metric(
    const TagGenome& genome, MetricMode mode,
    const std::optional<std::filesystem::path>& cache_path = {},
    bool materialize = true, int threads = 0);

}  // namespace pmd
