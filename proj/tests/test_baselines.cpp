#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "overlapctl/baselines.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace overlapctl;
using Catch::Matchers::WithinRel;
using testsupport::one_dim;
using testsupport::one_dim_dup;

TEST_CASE("tomek pairs on the 1-D desk example") {
  // majority {0.0, 0.4, 2.0}, minority {0.5}: single pair (0.5, 0.4)
  const Dataset ds = one_dim({0.0, 0.4, 2.0, 0.5},
                             {Label::majority, Label::majority, Label::majority,
                              Label::minority});
  const auto pairs = tomek_link_pairs(ds);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].minority_index == 3);
  CHECK(pairs[0].majority_index == 1);
  CHECK_THAT(pairs[0].distance, WithinRel(0.1, 1e-12));
}

TEST_CASE("separated clusters have no tomek pairs; two lone points always pair") {
  Eigen::MatrixXd far(6, 2);
  far << 0, 0, 0.1, 0, 0.2, 0, 50, 0, 50.1, 0, 50.2, 0;
  const Dataset clusters = make_dataset(
      std::move(far), {Label::majority, Label::majority, Label::majority,
                       Label::minority, Label::minority, Label::minority});
  CHECK(tomek_link_pairs(clusters).empty());

  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 3, 4;
  const Dataset lone = make_dataset(std::move(two), {Label::majority, Label::minority});
  const auto pairs = tomek_link_pairs(lone);
  REQUIRE(pairs.size() == 1);
  CHECK_THAT(pairs[0].distance, WithinRel(5.0, 1e-12));
}

TEST_CASE("tomek pairs match the brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Dataset ds = testsupport::random_dataset(seed, 30 + seed * 15, 2 + seed % 4);
    const auto got = tomek_link_pairs(ds);
    const auto want = oracles::naive_tomek_pairs(ds);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].minority_index == want[i].first);
      CHECK(got[i].majority_index == want[i].second);
    }
  }
}

TEST_CASE("tomek undersample removes only majority pair members") {
  const Dataset ds = one_dim({0.0, 0.4, 2.0, 0.5},
                             {Label::majority, Label::majority, Label::majority,
                              Label::minority});
  const Dataset out = tomek_undersample(ds);
  REQUIRE(out.size() == 3);
  CHECK(out.features(0, 0) == 0.0);
  CHECK(out.features(1, 0) == 2.0);
  CHECK(out.features(2, 0) == 0.5);
  CHECK(out.minority_count() == 1);
}

TEST_CASE("tomek undersample is the identity when no pairs exist") {
  Eigen::MatrixXd far(6, 2);
  far << 0, 0, 0.1, 0, 0.2, 0, 50, 0, 50.1, 0, 50.2, 0;
  const Dataset clusters = make_dataset(
      std::move(far), {Label::majority, Label::majority, Label::majority,
                       Label::minority, Label::minority, Label::minority});
  const Dataset out = tomek_undersample(clusters);
  CHECK(out.features == clusters.features);
  CHECK(out.labels == clusters.labels);
}

TEST_CASE("ucbss flags majority neighbors of unstable cut-points") {
  // values maj(1), min(2), maj(3), maj(9): cut-points 1.5 and 2.5 unstable,
  // 6 stable; maj(9) is redundant and removed.
  const Dataset ds = one_dim_dup({1, 2, 3, 9},
                                 {Label::majority, Label::minority, Label::majority,
                                  Label::majority});
  const Dataset out = ucbss_undersample(ds, 5);
  REQUIRE(out.size() == 3);
  CHECK(out.features(0, 0) == 1.0);
  CHECK(out.features(1, 0) == 2.0);
  CHECK(out.features(2, 0) == 3.0);
}

TEST_CASE("perfectly interleaved classes lose no majority instance") {
  const Dataset ds = one_dim_dup({0, 1, 2, 3, 4, 5, 6, 7},
                                 {Label::majority, Label::minority, Label::majority,
                                  Label::minority, Label::majority, Label::minority,
                                  Label::majority, Label::minority});
  const Dataset out = ucbss_undersample(ds, 17);
  CHECK(out.size() == ds.size());
}

TEST_CASE("fully separated classes keep one boundary majority instance per feature") {
  const Dataset ds = one_dim_dup({0, 1, 2, 3, 10, 11, 12},
                                 {Label::majority, Label::majority, Label::majority,
                                  Label::majority, Label::minority, Label::minority,
                                  Label::minority});
  const Dataset out = ucbss_undersample(ds, 23);
  // both features flag the same boundary instance maj(3)
  REQUIRE(out.size() == 4);
  CHECK(out.features(0, 0) == 3.0);
  CHECK(out.minority_count() == 3);
}

TEST_CASE("ucbss is seed-independent when feature values are distinct") {
  const Dataset ds = testsupport::random_dataset(31, 70, 3);
  const Dataset a = ucbss_undersample(ds, 1);
  const Dataset b = ucbss_undersample(ds, 999);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
}

TEST_CASE("random undersample hits the target ratio deterministically") {
  Eigen::MatrixXd x(12, 2);
  std::vector<Label> labels;
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2 * i;
    labels.push_back(i < 10 ? Label::majority : Label::minority);
  }
  const Dataset ds = make_dataset(std::move(x), std::move(labels));

  SECTION("target equal to the current ratio is the identity") {
    const Dataset out = random_undersample(ds, imbalance_ratio(ds), 3);
    CHECK(out.features == ds.features);
  }
  SECTION("target 1.0 keeps exactly 2 majority instances") {
    const Dataset out = random_undersample(ds, 1.0, 3);
    CHECK(out.majority_count() == 2);
    CHECK(out.minority_count() == 2);
    const Dataset again = random_undersample(ds, 1.0, 3);
    CHECK(out.features == again.features);
    CHECK(random_undersample(ds, 1.0, 4).features != out.features);
  }
  SECTION("raising the target above the current ratio is rejected") {
    CHECK_THROWS_AS(random_undersample(ds, 9.0, 3), ConfigError);
    CHECK_THROWS_AS(random_undersample(ds, 0.5, 3), ConfigError);
  }
}

TEST_CASE("all samplers preserve every minority instance in order") {
  const Dataset ds = testsupport::random_dataset(41, 90, 4);
  auto minority_values = [](const Dataset& d) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d.is_minority(i)) out.push_back(d.features(i, 0));
    return out;
  };
  const auto want = minority_values(ds);
  CHECK(minority_values(tomek_undersample(ds)) == want);
  CHECK(minority_values(ucbss_undersample(ds, 7)) == want);
  CHECK(minority_values(random_undersample(ds, 1.0, 7)) == want);
}
