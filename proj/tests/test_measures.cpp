#include <doctest.h>

#include <cmath>
#include <random>

#include "pmd/measures.hpp"
#include "support/generators.hpp"
#include "support/lp_oracle.hpp"

using namespace pmd;
using pmd::testing::toy_ratings;
using pmd::testing::toy_similarity;

namespace {

struct ToyFixture {
  SparseRatings ratings = toy_ratings();
  std::unique_ptr<DenseItemMetric> arccos =
      item_metric_from_similarity(toy_similarity(), MetricMode::kArccos);
  std::unique_ptr<DenseItemMetric> one_minus =
      item_metric_from_similarity(toy_similarity(), MetricMode::kOneMinus);
};

constexpr UserId u1 = 0, u2 = 1, u3 = 2, u4 = 3, u5 = 4, u6 = 5;

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("classic measures reproduce the co-rated case") {
  const ToyFixture fix;
  for (const auto [a, b] : {std::pair{u1, u2}, std::pair{u2, u3}}) {
    CHECK(cos_sim(a, b, fix.ratings).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pcc_sim(a, b, fix.ratings).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(1.0 - msd_dist(a, b, fix.ratings).value ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(jaccard_sim(a, b, fix.ratings).value ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(urp_sim(a, b, fix.ratings).value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(jmsd_sim(a, b, fix.ratings).value ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(nhsm_sim(a, b, fix.ratings).computable);
  }
}

TEST_CASE("co-rated measures cannot score disjoint users") {
  const ToyFixture fix;
  for (const auto [a, b] : {std::pair{u4, u5}, std::pair{u5, u6}}) {
    CHECK(!cos_sim(a, b, fix.ratings).computable);
    CHECK(!pcc_sim(a, b, fix.ratings).computable);
    CHECK(!msd_dist(a, b, fix.ratings).computable);
    CHECK(!jmsd_sim(a, b, fix.ratings).computable);
    CHECK(!nhsm_sim(a, b, fix.ratings).computable);
    // jaccard's zero is a real value, not an uncomputable marker
    const MeasureResult jac = jaccard_sim(a, b, fix.ratings);
    CHECK(jac.computable);
    CHECK(jac.value == doctest::Approx(0.0));
    const MeasureResult urp = urp_sim(a, b, fix.ratings);
    CHECK(urp.computable);
    CHECK(urp.value == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("pcc needs rating variance on the co-rated set") {
  SparseRatings flat(2, 3, {{0, 0, 3}, {0, 1, 3}, {1, 0, 3}, {1, 1, 4}});
  CHECK(!pcc_sim(0, 1, flat).computable);
}

TEST_CASE("bcf family matches the no-co-rated golden values") {
  const ToyFixture fix;
  const auto& kernel = agreement_kernel();

  const MeasureResult nbcf45 =
      bcf_family_sim(u4, u5, fix.ratings, *fix.one_minus, kernel, true);
  const MeasureResult nbcf56 =
      bcf_family_sim(u5, u6, fix.ratings, *fix.one_minus, kernel, true);
  CHECK(nbcf45.value == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(nbcf56.value == doctest::Approx(0.8).epsilon(1e-9));

  // without normalization the item-pair count dominates and flips the order
  const MeasureResult bcf45 =
      bcf_family_sim(u4, u5, fix.ratings, *fix.one_minus, kernel, false);
  const MeasureResult bcf56 =
      bcf_family_sim(u5, u6, fix.ratings, *fix.one_minus, kernel, false);
  CHECK(bcf45.value == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(bcf56.value == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(bcf45.value > bcf56.value);
  CHECK(nbcf45.value < nbcf56.value);

  // the husm kernel keeps both orderings
  const auto& husm = sigmoid_agreement_kernel();
  CHECK(bcf_family_sim(u4, u5, fix.ratings, *fix.one_minus, husm, false).value >
        bcf_family_sim(u5, u6, fix.ratings, *fix.one_minus, husm, false).value);
  CHECK(bcf_family_sim(u4, u5, fix.ratings, *fix.one_minus, husm, true).value <
        bcf_family_sim(u5, u6, fix.ratings, *fix.one_minus, husm, true).value);
}

TEST_CASE("single-item users reduce the bcf sum to one term") {
  const ToyFixture fix;
  const auto& kernel = agreement_kernel();
  // u5 rated only Titanic, u6 only Casablanca: k(5,5) * sim = 0.8
  for (const bool normalized : {false, true}) {
    const MeasureResult r =
        bcf_family_sim(u5, u6, fix.ratings, *fix.one_minus, kernel, normalized);
    CHECK(r.value == doctest::Approx(0.8).epsilon(1e-12));
  }
}

TEST_CASE("rating kernels are symmetric, bounded and exact at agreement") {
  const KernelContext ctx{RatingScale{1.0, 5.0}};
  for (const RatingKernel* kernel :
       {&agreement_kernel(), &sigmoid_agreement_kernel()}) {
    for (double r1 = 1.0; r1 <= 5.0; r1 += 0.5) {
      CHECK(kernel->eval(r1, r1, ctx) == doctest::Approx(1.0).epsilon(1e-12));
      for (double r2 = 1.0; r2 <= 5.0; r2 += 0.5) {
        const double k12 = kernel->eval(r1, r2, ctx);
        CHECK(k12 == doctest::Approx(kernel->eval(r2, r1, ctx)));
        CHECK(k12 >= 0.0);
        CHECK(k12 <= 1.0);
      }
    }
  }
}

TEST_CASE("pmd golden values in one-minus mode") {
  const ToyFixture fix;
  const MeasureResult d45 = pmd_distance(u4, u5, fix.ratings, *fix.one_minus);
  const MeasureResult d56 = pmd_distance(u5, u6, fix.ratings, *fix.one_minus);
  CHECK(d45.kind == MeasureKind::kDistance);
  CHECK(1.0 - d45.value == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(1.0 - d56.value == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("pmd of a user with itself is zero") {
  const ToyFixture fix;
  for (UserId u = 0; u < 6; ++u) {
    CHECK(pmd_distance(u, u, fix.ratings, *fix.arccos).value <= 1e-12);
    CHECK(pmd_distance(u, u, fix.ratings, *fix.one_minus).value <= 1e-12);
  }
}

TEST_CASE("pmd u1 vs u2 under arccos matches the oracle") {
  const ToyFixture fix;
  const Preference a = build_preference(fix.ratings, u1);
  const Preference b = build_preference(fix.ratings, u2);
  const TransportProblem problem =
      TransportProblem::between(a, b, *fix.arccos);
  const double oracle = pmd::testing::solve_oracle(problem).optimal_cost;
  const MeasureResult direct = pmd_distance(u1, u2, fix.ratings, *fix.arccos);
  CHECK(direct.value == doctest::Approx(oracle).epsilon(1e-9));
  // half the mass moves across arccos(0.8), the rest rides for free
  CHECK(direct.value == doctest::Approx(0.5 * std::acos(0.8)).epsilon(1e-9));
}

TEST_CASE("pmd orderings hold under both metric modes") {
  const ToyFixture fix;
  for (const ItemMetric* metric :
       {static_cast<const ItemMetric*>(fix.arccos.get()),
        static_cast<const ItemMetric*>(fix.one_minus.get())}) {
    CHECK(pmd_distance(u1, u2, fix.ratings, *metric).value <
          pmd_distance(u2, u3, fix.ratings, *metric).value);
    CHECK(pmd_distance(u4, u5, fix.ratings, *metric).value >
          pmd_distance(u5, u6, fix.ratings, *metric).value);
  }
}

TEST_CASE("pmd works without co-rated items and ignores rating scale") {
  const ToyFixture fix;
  const MeasureResult r = pmd_distance(u4, u5, fix.ratings, *fix.arccos);
  CHECK(r.computable);

  // scale u4's ratings by 7/5: preferences, hence pmd, are unchanged
  std::vector<RatingEntry> entries = fix.ratings.entries();
  for (auto& e : entries)
    if (e.user == u4) e.value *= 1.4;
  const SparseRatings scaled(6, 5, std::move(entries), RatingScale{1.0, 7.0});
  const MeasureResult r2 = pmd_distance(u4, u5, scaled, *fix.arccos);
  CHECK(r2.value == doctest::Approx(r.value).epsilon(1e-12));
}

TEST_CASE("pmd metric axioms on the toy users under arccos") {
  const ToyFixture fix;
  const auto d = [&](UserId a, UserId b) {
    return pmd_distance(a, b, fix.ratings, *fix.arccos).value;
  };
  for (UserId a = 0; a < 6; ++a)
    for (UserId b = 0; b < 6; ++b) {
      CHECK(d(a, b) == doctest::Approx(d(b, a)).epsilon(1e-9));
      for (UserId c = 0; c < 6; ++c)
        CHECK(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
    }
}

TEST_CASE("truncated preferences give an approximate pmd") {
  const ToyFixture fix;
  PmdOptions options;
  options.truncate_support = 1;
  const MeasureResult approx = pmd_distance(u1, u2, fix.ratings, *fix.arccos, options);
  // both users collapse to their single heaviest item (IronMan / BatMan)
  CHECK(approx.value == doctest::Approx(std::acos(0.8)).epsilon(1e-9));
}

TEST_CASE("the catalog registers exactly the twelve measures") {
  const auto& catalog = measure_catalog();
  CHECK(catalog.size() == 12);
  const MeasureInfo* pmd_info = find_measure("pmd");
  REQUIRE(pmd_info != nullptr);
  CHECK(pmd_info->kind == MeasureKind::kDistance);
  CHECK(pmd_info->needs_metric);
  CHECK(find_measure("does-not-exist") == nullptr);

  const ToyFixture fix;
  const MeasureContext ctx{fix.ratings, fix.one_minus.get(), {}};
  const MeasureInfo* nbcf = find_measure("n-bcf");
  REQUIRE(nbcf != nullptr);
  CHECK(nbcf->fn(u4, u5, ctx).value == doctest::Approx(0.3).epsilon(1e-9));

  for (const char* key : {"cos", "pcc", "msd", "jaccard", "urp", "jmsd",
                          "nhsm", "bcf", "n-bcf", "husm", "n-husm", "pmd"})
    CHECK(find_measure(key) != nullptr);

  // catalog entries agree with the direct calls
  CHECK(find_measure("cos")->fn(u1, u2, ctx).value ==
        doctest::Approx(cos_sim(u1, u2, fix.ratings).value));
  CHECK(find_measure("pmd")->fn(u4, u5, ctx).value ==
        doctest::Approx(pmd_distance(u4, u5, fix.ratings, *fix.one_minus).value));
}

}  // TEST_SUITE
