#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "biprop/maxflow.hpp"
#include "biprop/overseg.hpp"
#include "biprop/seed.hpp"
#include "support.hpp"

using namespace biprop;

TEST_CASE("fit_mixture on a single color collapses with floored variance") {
  const std::vector<Color> samples(50, Color{10, 200, 30});
  const auto m = fit_mixture(samples, {});
  double wsum = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    wsum += m.weights[k];
    CHECK(m.weights[k] > 0.0);
    CHECK(color_distance(m.means[k], {10, 200, 30}) <= 1e-9);
    CHECK(m.variances[k].r >= 1.0);
    CHECK(m.variances[k].g >= 1.0);
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_mixture separates two clusters") {
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<Color> samples;
  for (int i = 0; i < 300; ++i) samples.push_back({50 + n(rng), 60 + n(rng), 70 + n(rng)});
  for (int i = 0; i < 300; ++i) samples.push_back({200 + n(rng), 180 + n(rng), 20 + n(rng)});
  SeedConfig cfg;
  cfg.n_comp = 2;
  std::vector<double> trace;
  const auto m = fit_mixture(samples, cfg, &trace);
  REQUIRE(m.size() == 2);
  const Color a{50, 60, 70}, b{200, 180, 20};
  const bool ordered = color_distance(m.means[0], a) < color_distance(m.means[1], a);
  const Color& ma = ordered ? m.means[0] : m.means[1];
  const Color& mb = ordered ? m.means[1] : m.means[0];
  for (double d : {ma.r - a.r, ma.g - a.g, ma.b - a.b, mb.r - b.r, mb.g - b.g, mb.b - b.b}) {
    CHECK(std::abs(d) <= 1.0);
  }
  REQUIRE(trace.size() == static_cast<std::size_t>(cfg.em_iters));
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-9);
}

TEST_CASE("fit_mixture is deterministic") {
  std::mt19937 rng(2);
  std::vector<Color> samples;
  const auto img = testing::random_image(20, 20, rng);
  for (std::size_t i = 0; i < img.size(); ++i) samples.push_back(img[i]);
  const auto a = fit_mixture(samples, {});
  const auto b = fit_mixture(samples, {});
  CHECK(a.means == b.means);
  CHECK(a.weights == b.weights);
}

TEST_CASE("fit_color_models requires both labels") {
  const Image img(4, 4, Color{1, 2, 3});
  ScribbleMask s(4, 4);
  s(0, 0) = Scribble::kForeground;
  CHECK_THROWS_WITH_AS(fit_color_models(img, s, {}), doctest::Contains("seed incomplete"),
                       std::invalid_argument);
  s(3, 3) = Scribble::kBackground;
  CHECK_NOTHROW(fit_color_models(img, s, {}));
}

TEST_CASE("region_scribbles majority vote") {
  Grid<int> ids(4, 1, 0);
  ids(2, 0) = 1;
  ids(3, 0) = 1;
  const auto map = region_map_from_ids(ids);
  ScribbleMask s(4, 1);
  s(0, 0) = Scribble::kForeground;
  s(1, 0) = Scribble::kBackground;
  s(2, 0) = Scribble::kBackground;
  const auto r = region_scribbles(s, map);
  CHECK(r[0] == Scribble::kNone);
  CHECK(r[1] == Scribble::kBackground);
}

TEST_CASE("scribble_unary examples") {
  SeedConfig cfg;
  SUBCASE("hard constraints") {
    Image img(3, 1, Color{200, 0, 0});
    img(2, 0) = {0, 0, 200};
    ScribbleMask s(3, 1);
    s(0, 0) = Scribble::kForeground;
    s(2, 0) = Scribble::kBackground;
    const auto models = fit_color_models(img, s, cfg);
    const auto u = scribble_unary(img, models, s, identity_region_map(3, 1), cfg);
    CHECK(u[0].bg == cfg.k_hard);
    CHECK(u[2].fg == cfg.k_hard);
    // The unscribbled pixel matches the FG color.
    CHECK(u[1].fg < u[1].bg);
    for (const auto& c : u) CHECK(std::min(c.fg, c.bg) >= 0.0);
  }
  SUBCASE("identical models give equal costs") {
    const Image img(5, 5, Color{90, 90, 90});
    ColorModels models;
    models.fg = fit_mixture({Color{10, 10, 10}, Color{200, 200, 200}}, cfg);
    models.bg = models.fg;
    const auto u = scribble_unary(img, models, ScribbleMask(5, 5), identity_region_map(5, 5), cfg);
    for (const auto& c : u) CHECK(c.fg == c.bg);
  }
}

TEST_CASE("potts_binary examples") {
  SUBCASE("uniform frame") {
    const auto regions = pixel_regions(4, 3);
    const auto b = potts_binary(Image(4, 3, Color{5, 5, 5}), regions.adjacency, regions.map, 50.0);
    for (const auto& w : b) {
      CHECK(w.forward == 50.0);
      CHECK(w.backward == 50.0);
    }
    CHECK(potts_beta(Image(4, 3, Color{5, 5, 5}), regions.adjacency) == 1.0);
  }
  SUBCASE("pair at distance beta") {
    Image img(2, 1);
    img(1, 0) = {9, 0, 0};
    const auto regions = pixel_regions(2, 1);
    const auto b = potts_binary(img, regions.adjacency, regions.map, 50.0);
    CHECK(potts_beta(img, regions.adjacency) == 9.0);
    CHECK(b[0].forward == doctest::Approx(50.0 * std::exp(-1.0)).epsilon(1e-12));
  }
  SUBCASE("symmetric and bounded") {
    std::mt19937 rng(3);
    const auto img = testing::random_image(12, 9, rng);
    const auto regions = testing::frame_regions(slic_segment(img, {10, 10.0, 10}));
    for (const auto& w : potts_binary(img, regions.adjacency, regions.map, 50.0)) {
      CHECK(w.forward == w.backward);
      CHECK(w.forward > 0.0);
      CHECK(w.forward <= 50.0);
    }
  }
  SUBCASE("no pairs") {
    const auto regions = pixel_regions(1, 1);
    CHECK(potts_binary(Image(1, 1), regions.adjacency, regions.map).empty());
  }
}

TEST_CASE("scribbled regions keep their labels after solving") {
  std::mt19937 rng(4);
  SeedConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = testing::random_image(16, 12, rng);
    ScribbleMask s(16, 12);
    std::uniform_int_distribution<int> pick(0, 15);
    for (int i = 0; i < 30; ++i) {
      s(pick(rng), pick(rng) % 12) = i % 2 ? Scribble::kForeground : Scribble::kBackground;
    }
    s(0, 0) = Scribble::kForeground;
    s(1, 0) = Scribble::kBackground;
    const auto regions = testing::frame_regions(slic_segment(img, {20, 10.0, 10}));
    const auto models = fit_color_models(img, s, cfg);
    const auto u = scribble_unary(img, models, s, regions.map, cfg);
    const auto b = potts_binary(img, regions.adjacency, regions.map, 50.0);
    const auto l = min_cut_labeling(max_flow(build_graph(u, b, regions.adjacency)).residual);
    const auto marks = region_scribbles(s, regions.map);
    for (std::size_t r = 0; r < marks.size(); ++r) {
      if (marks[r] == Scribble::kForeground) CHECK(l[r] == Label::kForeground);
      if (marks[r] == Scribble::kBackground) CHECK(l[r] == Label::kBackground);
    }
  }
}
