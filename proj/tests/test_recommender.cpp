#include <doctest.h>

#include <cmath>
#include <random>

#include "pmd/recommender.hpp"
#include "support/generators.hpp"

using namespace pmd;

TEST_SUITE("recommender") {

TEST_CASE("distance to weight transform") {
  CHECK(distance_to_weight(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(distance_to_weight(1.0, 1.0) == doctest::Approx(0.0));
  const double pi = std::acos(-1.0);
  CHECK(distance_to_weight(std::acos(0.8), pi) ==
        doctest::Approx(0.7951672353008665).epsilon(1e-9));
  CHECK_THROWS_AS(distance_to_weight(-0.1, 1.0), InvalidDistance);
  CHECK_THROWS_AS(distance_to_weight(1.2, 1.0), InvalidDistance);
  CHECK_THROWS_AS(distance_to_weight(0.5, 0.0), InvalidDistance);
}

TEST_CASE("measure weights clamp negatives and skip uncomputables") {
  CHECK(measure_weight({0.4, MeasureKind::kSimilarity, true}, 1.0) ==
        doctest::Approx(0.4));
  CHECK(measure_weight({-0.4, MeasureKind::kSimilarity, true}, 1.0) == 0.0);
  CHECK(measure_weight({0.25, MeasureKind::kDistance, true}, 1.0) ==
        doctest::Approx(0.75));
  CHECK(measure_weight({0.9, MeasureKind::kSimilarity, false}, 1.0) == 0.0);
}

TEST_CASE("top-k selection honors weight then id order") {
  std::vector<NeighborEntry> candidates{
      {7, 0.5}, {3, 0.9}, {9, 0.1}, {5, 0.9}, {2, 0.0}, {4, -0.3}};
  const NeighborList top = select_top_k(0, 3, candidates);
  REQUIRE(top.entries.size() == 3);
  CHECK(top.entries[0].user == 3);  // 0.9, lower id first on the tie
  CHECK(top.entries[1].user == 5);
  CHECK(top.entries[2].user == 7);
  CHECK(select_top_k(0, 99, candidates).entries.size() == 4);  // drops w <= 0
  CHECK(select_top_k(0, 99, {}).entries.empty());
}

TEST_CASE("neighbor search is restricted to raters of the item") {
  const SparseRatings ratings = pmd::testing::toy_ratings();
  const MeasureContext ctx{ratings, nullptr, {}};
  const MeasureInfo* jaccard = find_measure("jaccard");
  REQUIRE(jaccard != nullptr);

  // Casablanca (4) was rated by u3 and u6 only
  const NeighborList around_u1 = top_k_neighbors(0, 4, 5, *jaccard, ctx);
  REQUIRE(around_u1.entries.size() == 1);  // u6 shares nothing with u1
  CHECK(around_u1.entries[0].user == 2);

  // nobody else rated anything u6-adjacent with positive jaccard weight
  const NeighborList none = top_k_neighbors(5, 0, 5, *jaccard, ctx);
  CHECK(none.entries.empty());

  // K larger than the candidate pool returns the whole pool
  const NeighborList all = top_k_neighbors(0, 2, 50, *jaccard, ctx);
  CHECK(all.entries.size() == 3);
}

TEST_CASE("mean-centered prediction") {
  // items: 0 1 2; user 0 is the target
  SparseRatings ratings(4, 3,
                        {{0, 0, 3.0}, {0, 1, 3.4},           // target, mean 3.2
                         {1, 0, 3.0}, {1, 2, 4.0},           // mean 3.5
                         {2, 0, 2.0}, {2, 2, 3.0},           // mean 2.5
                         {3, 1, 5.0}, {3, 2, 1.0}},          // mean 3.0
                        RatingScale{1.0, 5.0});

  SUBCASE("single neighbor with matching mean passes its rating through") {
    SparseRatings flat(2, 3,
                       {{0, 0, 3.0}, {0, 1, 4.0},   // target mean 3.5
                        {1, 0, 3.0}, {1, 2, 4.0}},  // neighbor mean 3.5
                       RatingScale{1.0, 5.0});
    NeighborList n{0, 1, {{1, 1.0}}};
    const Prediction p = predict(0, 2, n, flat);
    CHECK(p.value == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(p.fallback == Fallback::kNone);
  }

  SUBCASE("empty neighbors fall back to the user mean") {
    const Prediction p = predict(0, 2, NeighborList{0, 5, {}}, ratings);
    CHECK(p.value == doctest::Approx(3.2).epsilon(1e-12));
    CHECK(p.fallback == Fallback::kUserMean);
  }

  SUBCASE("symmetric deviations cancel") {
    SparseRatings sym(3, 3,
                      {{0, 0, 3.0}, {0, 1, 3.0},   // target mean 3
                       {1, 0, 2.0}, {1, 2, 3.0},   // mean 2.5, dev +0.5
                       {2, 0, 3.0}, {2, 2, 2.0}},  // mean 2.5, dev -0.5
                      RatingScale{1.0, 5.0});
    NeighborList balanced{0, 2, {{1, 0.5}, {2, 0.5}}};
    const Prediction p = predict(0, 2, balanced, sym);
    CHECK(p.value == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("a target without training ratings gets the global mean") {
    SparseRatings sparse(2, 2, {{1, 0, 4.0}, {1, 1, 2.0}});
    const Prediction p = predict(0, 0, NeighborList{0, 3, {}}, sparse);
    CHECK(p.value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.fallback == Fallback::kGlobalMean);
  }

  SUBCASE("neighbors that did not rate the item do not count") {
    NeighborList n{0, 2, {{3, 1.0}}};  // user 3 never rated item 0
    const Prediction p = predict(0, 0, n, ratings);
    CHECK(p.fallback == Fallback::kUserMean);
  }
}

TEST_CASE("prediction is invariant under uniform weight scaling") {
  const SparseRatings ratings = pmd::testing::toy_ratings();
  NeighborList n{0, 2, {{1, 0.25}, {2, 0.55}}};
  NeighborList scaled{0, 2, {{1, 0.25 * 8}, {2, 0.55 * 8}}};
  const Prediction a = predict(0, 3, n, ratings);
  const Prediction b = predict(0, 3, scaled, ratings);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
}

TEST_CASE("predictions stay inside the rating scale") {
  SparseRatings extreme(3, 2,
                        {{0, 0, 5.0}, {0, 1, 5.0},   // target mean 5
                         {1, 0, 5.0}, {1, 1, 5.0},   // dev 0
                         {2, 0, 1.0}, {2, 1, 5.0}},  // item 1 dev +2
                        RatingScale{1.0, 5.0});
  NeighborList n{0, 2, {{2, 1.0}}};
  const Prediction p = predict(0, 1, n, extreme);
  CHECK(p.value <= 5.0);
  CHECK(p.value >= 1.0);
}

TEST_CASE("with all raters and equal weights prediction is the mean deviation") {
  const SparseRatings ratings = pmd::testing::toy_ratings();
  // item 2 (SpiderMan) rated by users 0..3; predict for user 5
  NeighborList everyone{5, 100, {{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}}};
  const Prediction p = predict(5, 2, everyone, ratings);
  double dev = 0.0;
  for (UserId v : {0, 1, 2, 3}) dev += ratings.rating(v, 2) - ratings.user_mean(v);
  dev /= 4.0;
  const double expected = std::clamp(ratings.user_mean(5) + dev, 1.0, 5.0);
  CHECK(p.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("any strictly decreasing weight transform ranks neighbors alike") {
  std::mt19937_64 rng(8080);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 10);
    std::vector<double> distances(n);
    for (double& d : distances) d = dist(rng);
    std::vector<NeighborEntry> linear, exponential;
    for (int i = 0; i < n; ++i) {
      linear.push_back({i, 1.0 - distances[i]});
      exponential.push_back({i, std::exp(-3.0 * distances[i])});
    }
    const NeighborList a = select_top_k(99, n, linear);
    const NeighborList b = select_top_k(99, n, exponential);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t k = 0; k < a.entries.size(); ++k)
      CHECK(a.entries[k].user == b.entries[k].user);
  }
}

}  // TEST_SUITE
