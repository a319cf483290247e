#include <numeric>
#include <random>

#include "doctest.h"

#include "biprop/core.hpp"
#include "biprop/maxflow.hpp"
#include "biprop/overseg.hpp"
#include "support.hpp"

using namespace biprop;

namespace {

RegionAdjacency pair_adjacency() {
  Grid<int> ids(2, 1);
  ids(1, 0) = 1;
  return region_adjacency(region_map_from_ids(ids));
}

}  // namespace

TEST_CASE("color_distance examples") {
  CHECK(color_distance({10, 10, 10}, {10, 10, 10}) == 0.0);
  CHECK(color_distance({0, 0, 0}, {255, 255, 255}) == 765.0);
  CHECK(color_distance({10, 20, 30}, {12, 18, 30}) == 4.0);
}

TEST_CASE("color_distance is a symmetric metric") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Color a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
    CHECK(color_distance(a, b) == color_distance(b, a));
    CHECK(color_distance(a, c) <= color_distance(a, b) + color_distance(b, c) + 1e-12);
    CHECK(color_distance(a, b) > 0.0);
  }
}

TEST_CASE("energy_of examples") {
  const auto adj = pair_adjacency();
  SUBCASE("all FG pays the FG costs only") {
    UnaryField u{{1.5, 9}, {2.5, 7}};
    BinaryField b{{4, 6}};
    CHECK(energy_of({Label::kForeground, Label::kForeground}, u, b, adj) == 4.0);
  }
  SUBCASE("two nodes, cut edge paid once") {
    UnaryField u{{0, 10}, {10, 0}};
    BinaryField b{{3, 3}};
    CHECK(energy_of({Label::kForeground, Label::kBackground}, u, b, adj) == 3.0);
    // Enumeration confirms the minimum.
    double best = 1e300;
    for (Label la : {Label::kForeground, Label::kBackground}) {
      for (Label lb : {Label::kForeground, Label::kBackground}) {
        best = std::min(best, energy_of({la, lb}, u, b, adj));
      }
    }
    CHECK(best == 3.0);
  }
  SUBCASE("single node") {
    const RegionAdjacency one = region_adjacency(identity_region_map(1, 1));
    CHECK(energy_of({Label::kForeground}, UnaryField{{1, 3}}, BinaryField{}, one) == 1.0);
  }
}

TEST_CASE("energy_of pays the directed weight in the cut direction") {
  const auto adj = pair_adjacency();
  UnaryField u{{0, 0}, {0, 0}};
  BinaryField b{{5, 7}};
  CHECK(energy_of({Label::kForeground, Label::kBackground}, u, b, adj) == 5.0);
  CHECK(energy_of({Label::kBackground, Label::kForeground}, u, b, adj) == 7.0);
  CHECK(energy_of({Label::kBackground, Label::kBackground}, u, b, adj) == 0.0);
}

TEST_CASE("energy_of rejects mismatched node sets") {
  const auto adj = pair_adjacency();
  CHECK_THROWS(energy_of({Label::kForeground}, UnaryField{{0, 0}, {0, 0}}, BinaryField{{1, 1}}, adj));
  CHECK_THROWS(energy_of({Label::kForeground, Label::kForeground}, UnaryField{{0, 0}},
                         BinaryField{{1, 1}}, adj));
  CHECK_THROWS(energy_of({Label::kForeground, Label::kForeground}, UnaryField{{0, 0}, {0, 0}},
                         BinaryField{}, adj));
}

TEST_CASE("energy_of is invariant under node reindexing") {
  std::mt19937 rng(3);
  const RegionMap map = testing::block_map(6, 6, 2, 3);
  const auto adj = region_adjacency(map);
  const Energy e = testing::random_energy(adj, rng);
  const int n = map.region_count;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  Grid<int> ids2(map.width(), map.height());
  for (std::size_t i = 0; i < ids2.size(); ++i) ids2[i] = perm[static_cast<std::size_t>(map.ids[i])];
  const auto adj2 = region_adjacency(region_map_from_ids(ids2));
  Energy e2;
  e2.unary.resize(e.unary.size());
  for (int r = 0; r < n; ++r) e2.unary[static_cast<std::size_t>(perm[r])] = e.unary[static_cast<std::size_t>(r)];
  e2.binary.resize(e.binary.size());
  for (std::size_t k = 0; k < adj.pairs.size(); ++k) {
    const int a = perm[adj.pairs[k].a], b = perm[adj.pairs[k].b];
    const auto idx = static_cast<std::size_t>(adj2.pair_index(a, b));
    e2.binary[idx] = a < b ? e.binary[k] : DirectedWeight{e.binary[k].backward, e.binary[k].forward};
  }
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Labeling l(static_cast<std::size_t>(n)), l2(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
      l[static_cast<std::size_t>(r)] = coin(rng) ? Label::kForeground : Label::kBackground;
      l2[static_cast<std::size_t>(perm[r])] = l[static_cast<std::size_t>(r)];
    }
    CHECK(energy_of(l, e, adj) == doctest::Approx(energy_of(l2, e2, adj2)).epsilon(1e-12));
  }
}

TEST_CASE("energy_of label symmetry for symmetric binaries") {
  std::mt19937 rng(4);
  const RegionMap map = testing::block_map(5, 4, 1, 1);
  const auto adj = region_adjacency(map);
  const Energy e = testing::random_energy(adj, rng, 10.0, 10.0, true);
  Energy swapped = e;
  for (auto& u : swapped.unary) std::swap(u.fg, u.bg);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Labeling l(adj.region_count()), f(adj.region_count());
    for (std::size_t i = 0; i < l.size(); ++i) {
      l[i] = coin(rng) ? Label::kForeground : Label::kBackground;
      f[i] = flip(l[i]);
    }
    CHECK(energy_of(l, e, adj) == doctest::Approx(energy_of(f, swapped, adj)).epsilon(1e-12));
  }
}

TEST_CASE("FrameSequence validation") {
  FrameSequence empty;
  CHECK_THROWS(empty.validate());
  FrameSequence mixed{{Image(4, 4), Image(8, 8)}};
  CHECK_THROWS(mixed.validate());
  FrameSequence ok{{Image(4, 4), Image(4, 4)}};
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("region_map_from_ids checks the partition") {
  Grid<int> gap(3, 1);
  gap(0, 0) = 0;
  gap(1, 0) = 2;
  gap(2, 0) = 2;
  CHECK_THROWS(region_map_from_ids(gap));
  Grid<int> neg(2, 1, -1);
  CHECK_THROWS(region_map_from_ids(neg));
  const RegionMap m = identity_region_map(3, 2);
  CHECK(m.region_count == 6);
  CHECK(m.ids(2, 1) == 5);
  CHECK(std::accumulate(m.sizes.begin(), m.sizes.end(), 0) == 6);
}
