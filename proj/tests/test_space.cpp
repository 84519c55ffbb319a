#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "evotune/space.hpp"
#include "support/oracles.hpp"

using namespace evotune;

namespace {

// Node-by-node decision counter, independent of the closed-form expression.
int count_decisions_brute(int m) {
  int count = 0;
  for (int j = 1; j <= m + 1; ++j) {
    if (j <= m) ++count;  // the variable node itself
    for (int delta = 2; delta <= 4; ++delta) {
      if (j - delta >= 0) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("decision variable count", "[space]") {
  CHECK(ArchSpace(10, 54, 7).num_decision_variables() == 37);
  CHECK(ArchSpace(2, 4, 2).num_decision_variables() == 5);
  CHECK(ArchSpace(1, 4, 2).num_decision_variables() == 2);

  int previous = 0;
  for (int m = 1; m <= 12; ++m) {
    int count = ArchSpace(m, 4, 2).num_decision_variables();
    CHECK(count == count_decisions_brute(m));
    CHECK(count == static_cast<int>(ArchSpace(m, 4, 2).layout().size()));
    CHECK(count >= previous);
    previous = count;
  }
}

TEST_CASE("space size", "[space]") {
  BigInt expected = 1;
  for (int i = 0; i < 10; ++i) expected *= 31;
  for (int i = 0; i < 27; ++i) expected *= 2;
  CHECK(ArchSpace(10, 54, 7).space_size() == expected);
  CHECK(ArchSpace(1, 4, 2).space_size() == 62);
  CHECK(ArchSpace(2, 4, 2).space_size() == 7688);
}

TEST_CASE("layer choice decoding is a bijection onto the layer list", "[space]") {
  std::set<std::pair<int, int>> seen;
  for (int i = 1; i <= 30; ++i) {
    LayerChoice choice{i};
    int units = choice.units();
    Activation act = choice.activation();
    CHECK(std::count(kLayerUnits.begin(), kLayerUnits.end(), units) == 1);
    seen.emplace(units, static_cast<int>(act));
    CHECK(LayerChoice::from(units, act).index == i);
  }
  CHECK(seen.size() == 30);
  CHECK(LayerChoice{0}.is_identity());
}

TEST_CASE("random architectures are reproducible and well formed", "[space]") {
  ArchSpace space(10, 54, 7);
  Rng a(42), b(42);
  for (int i = 0; i < 20; ++i) {
    ArchConfig one = space.random_arch(a);
    ArchConfig two = space.random_arch(b);
    CHECK(one == two);
    CHECK(one.decisions.size() == 37);
    CHECK(space.is_valid(one));
  }
}

TEST_CASE("variable-node sampling is uniform", "[space]") {
  ArchSpace space(1, 4, 2);
  Rng rng(3);
  std::vector<long> counts(31, 0);
  for (int i = 0; i < 10000; ++i) {
    ArchConfig cfg = space.random_arch(rng);
    ++counts[static_cast<std::size_t>(cfg.decisions[0])];
  }
  CHECK(oracles::chi_square_uniform(counts) < oracles::chi_square_crit_99(30));
}

TEST_CASE("hyperparameter sampling respects the space", "[space]") {
  HPSpace space;
  Rng rng(11);
  long below_mid = 0;
  for (int i = 0; i < 10000; ++i) {
    HPConfig cfg = space.random_hp(rng);
    REQUIRE(space.is_valid(cfg));
    if (cfg.lr1 < 0.01) ++below_mid;
  }
  // Log-uniform: 0.01 is the geometric midpoint of (0.001, 0.1), so half the
  // mass lies below it.
  std::vector<long> split{below_mid, 10000 - below_mid};
  CHECK(oracles::chi_square_uniform(split) < oracles::chi_square_crit_99(1));
}

TEST_CASE("hyperparameter encoding", "[space]") {
  HPSpace space;
  auto enc = space.encode({0.01, 256, 8});
  REQUIRE(enc.size() == 3);
  CHECK(enc[0] == Catch::Approx(-2.0).margin(1e-12));
  CHECK(enc[1] == 3.0);
  CHECK(enc[2] == 3.0);

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    HPConfig cfg = space.random_hp(rng);
    HPConfig back = space.decode(space.encode(cfg));
    CHECK(back.bs1 == cfg.bs1);
    CHECK(back.n == cfg.n);
    CHECK(back.lr1 == Catch::Approx(cfg.lr1).epsilon(1e-12));
  }

  CHECK_THROWS_AS(space.encode({0.01, 100, 8}), InvalidConfigError);
  CHECK_THROWS_AS(space.encode({0.5, 256, 8}), InvalidConfigError);
}
