#include <cmath>

#include "helpers.hpp"
#include "twotruths/graph.hpp"
#include "twotruths/json_io.hpp"
#include "twotruths/sbm.hpp"

using namespace twotruths;

namespace {

SbmParams two_block(double a, double b, double c, double p0 = 0.5) {
  SbmParams p;
  p.pi = Eigen::Vector2d(p0, 1.0 - p0);
  p.B.resize(2, 2);
  p.B << a, b, b, c;
  return p;
}

SbmParams canonical() { return load_fixture(TWOTRUTHS_FIXTURE_DIR "/two_truths_4block.json").params; }

}  // namespace

TEST_CASE("sampling edge cases") {
  SUBCASE("all-zero B gives an empty graph") {
    const auto s = sample_sbm(two_block(0, 0, 0), 300, 1);
    CHECK(s.graph.num_vertices() == 300);
    CHECK(s.graph.num_edges() == 0);
  }
  SUBCASE("all-ones B with one block is complete") {
    SbmParams p;
    p.pi = Eigen::VectorXd::Ones(1);
    p.B = Eigen::MatrixXd::Ones(1, 1);
    const auto s = sample_sbm(p, 40, 2);
    CHECK(s.graph.num_edges() == 40 * 39 / 2);
  }
  SUBCASE("same seed gives the same graph") {
    const auto p = two_block(0.3, 0.1, 0.2);
    CHECK(sample_sbm(p, 200, 9).graph == sample_sbm(p, 200, 9).graph);
    CHECK_FALSE(sample_sbm(p, 200, 9).graph == sample_sbm(p, 200, 10).graph);
  }
  SUBCASE("invalid parameters") {
    auto p = two_block(0.3, 0.1, 0.2);
    p.B(0, 1) = 0.2;
    CHECK_ERRC(sample_sbm(p, 10, 0), Errc::invalid_argument);
    CHECK_ERRC(sample_sbm(two_block(1.5, 0.1, 0.2), 10, 0), Errc::invalid_argument);
    CHECK_ERRC(sample_sbm(two_block(0.3, 0.1, 0.2, 1.2), 10, 0), Errc::invalid_argument);
  }
}

TEST_CASE("homogeneous sample density is within 3 binomial standard errors") {
  const std::size_t n = 2000;
  const auto s = sample_sbm(two_block(0.5, 0.5, 0.5), n, 11);
  const double pairs = n * (n - 1) / 2.0;
  const double se = std::sqrt(0.25 / pairs);
  CHECK(std::abs(density(s.graph) - 0.5) < 3 * se);
}

TEST_CASE("block model fit") {
  SUBCASE("complete graph with one label") {
    const auto g = testutil::complete(5);
    const auto p = fit_block_model(g, testutil::labels({"a", "a", "a", "a", "a"}));
    CHECK(p.pi.size() == 1);
    CHECK(p.pi[0] == 1.0);
    CHECK(p.B(0, 0) == 1.0);
  }
  SUBCASE("complete bipartite on 2 + 2") {
    const auto g = testutil::graph(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
    const auto p = fit_block_model(g, testutil::labels({"x", "x", "y", "y"}));
    CHECK(p.B(0, 0) == 0.0);
    CHECK(p.B(1, 1) == 0.0);
    CHECK(p.B(0, 1) == 1.0);
    CHECK(p.B(1, 0) == 1.0);
  }
  SUBCASE("singleton block is degenerate") {
    const auto g = testutil::graph(3, {{0, 1}, {1, 2}});
    CHECK_ERRC(fit_block_model(g, testutil::labels({"x", "x", "y"})), Errc::degenerate_block);
  }
  SUBCASE("large sample recovers B within 3 standard errors") {
    const auto truth = canonical();
    const auto s = sample_sbm(truth, 5000, 5);
    const auto hat = fit_block_model(s.graph, s.labels);
    std::vector<double> count(4, 0.0);
    for (auto b : s.block) count[b] += 1;
    for (int k = 0; k < 4; ++k) {
      for (int l = 0; l < 4; ++l) {
        const double pairs = k == l ? count[k] * (count[k] - 1) / 2 : count[k] * count[l];
        const double p = truth.B(k, l);
        const double se = std::sqrt(p * (1 - p) / pairs);
        CHECK_MESSAGE(std::abs(hat.B(k, l) - p) < 3 * se, "B(" << k << "," << l << ")");
      }
    }
  }
}

TEST_CASE("block collapse") {
  const auto p4 = canonical();
  SUBCASE("singleton groups are the identity") {
    const auto same = collapse_blocks(p4, {{0}, {1}, {2}, {3}});
    CHECK((same.B - p4.B).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((same.pi - p4.pi).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("homogeneous blocks collapse to one value") {
    const auto one = collapse_blocks(two_block(0.3, 0.3, 0.3), {{0, 1}});
    CHECK(one.B(0, 0) == doctest::Approx(0.3).epsilon(1e-14));
  }
  SUBCASE("expected edge probability is preserved") {
    for (const BlockGroups& groups : {BlockGroups{{0, 1}, {2, 3}}, BlockGroups{{0, 2}, {1, 3}},
                                      BlockGroups{{0}, {1, 2, 3}}, BlockGroups{{0, 1, 2, 3}}}) {
      const auto c = collapse_blocks(p4, groups);
      CHECK(std::abs(expected_edge_probability(c) - expected_edge_probability(p4)) < 1e-12);
    }
  }
  SUBCASE("collapse agrees with a fit on a large sample with merged labels") {
    const auto fixture = load_fixture(TWOTRUTHS_FIXTURE_DIR "/two_truths_4block.json");
    const std::size_t n = 6000;
    const auto s = sample_sbm(p4, n, 21);
    // Collapse with the realized block fractions so memberships add no noise.
    auto realized = p4;
    realized.pi.setZero();
    for (auto b : s.block) realized.pi[b] += 1.0 / n;
    realized.pi /= realized.pi.sum();
    for (const auto& [name, merge] : fixture.merges) {
      std::vector<std::string> names;
      const auto groups = groups_from_merge(p4, merge, &names);
      const auto coarse = collapse_blocks(realized, groups, names);
      const auto merged = s.labels.merged(merge);
      const auto hat = fit_block_model(s.graph, merged);
      std::vector<double> count(2, 0.0);
      for (auto c : merged.codes()) count[c] += 1;
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
          const int kk = merged.find(names[k]).value(), ll = merged.find(names[l]).value();
          const double pairs = k == l ? count[kk] * (count[kk] - 1) / 2 : count[kk] * count[ll];
          const double p = coarse.B(k, l);
          CHECK_MESSAGE(std::abs(hat.B(kk, ll) - p) < 3 * std::sqrt(p * (1 - p) / pairs),
                        name << " B(" << k << "," << l << ")");
        }
      }
    }
  }
}

TEST_CASE("structure classification") {
  CHECK(classify_structure(two_block(0.4, 0.05, 0.4)).kind == StructureKind::affinity);
  CHECK(classify_structure(two_block(0.4, 0.05, 0.06)).kind == StructureKind::core_periphery);
  CHECK(classify_structure(two_block(0.2, 0.2, 0.2)).kind == StructureKind::other);
  CHECK_ERRC(classify_structure(canonical()), Errc::invalid_argument);
}

TEST_CASE("canonical fixture collapses to one affinity and one core-periphery truth") {
  const auto fixture = load_fixture(TWOTRUTHS_FIXTURE_DIR "/two_truths_4block.json");
  auto collapsed = [&](const std::string& name) {
    std::vector<std::string> names;
    const auto groups = groups_from_merge(fixture.params, fixture.merges.at(name), &names);
    return collapse_blocks(fixture.params, groups, names);
  };
  CHECK(classify_structure(collapsed("LR")).kind == StructureKind::affinity);
  CHECK(classify_structure(collapsed("GW")).kind == StructureKind::core_periphery);
}

TEST_CASE("EDA point") {
  const auto er = eda_point(two_block(0.3, 0.3, 0.3));
  CHECK(er.x == 1.0);
  CHECK(er.y == 1.0);
  const auto q = eda_point(two_block(0.4, 0.1, 0.2));
  CHECK(q.x == doctest::Approx(0.5));
  CHECK(q.y == doctest::Approx(0.25));
  CHECK(q.below_rank_one_curve);
  CHECK(eda_point(two_block(0.4, 0.0, 0.1)).y == 0.0);
  CHECK(eda_point(two_block(0.1, 0.0, 0.4)).y == 0.0);
}
