#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"

#include "biprop/eval.hpp"
#include "biprop/image_io.hpp"
#include "json.hpp"

using namespace biprop;

namespace {

Mask mask_from(int w, int h, std::initializer_list<int> values) {
  Mask m(w, h);
  std::size_t i = 0;
  for (int v : values) m[i++] = static_cast<std::uint8_t>(v);
  return m;
}

double centroid_x(const Mask& m) {
  double sum = 0.0, n = 0.0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m(x, y)) {
        sum += x;
        n += 1.0;
      }
    }
  }
  return sum / n;
}

}  // namespace

TEST_CASE("precision_recall examples") {
  const Mask gt = mask_from(2, 2, {255, 255, 0, 0});
  SUBCASE("perfect") {
    const auto pr = precision_recall(gt, gt);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("all FG on two FG pixels") {
    const Mask pred(2, 2, 255);
    const auto c = count_pixels(pred, gt);
    CHECK(c.tp == 2);
    CHECK(c.fp == 2);
    CHECK(c.fn == 0);
    CHECK(c.tp + c.fp + c.fn + c.tn == 4);
    const auto pr = precision_recall(c);
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("empty against empty") {
    const auto pr = precision_recall(Mask(3, 3), Mask(3, 3));
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(count_pixels(Mask(2, 2), Mask(3, 2)), std::invalid_argument);
  }
}

TEST_CASE("inverting both masks swaps fp and fn") {
  const Mask pred = mask_from(3, 2, {255, 0, 255, 0, 0, 255});
  const Mask gt = mask_from(3, 2, {255, 255, 0, 0, 0, 0});
  Mask ip(3, 2), ig(3, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    ip[i] = pred[i] ? 0 : 255;
    ig[i] = gt[i] ? 0 : 255;
  }
  const auto a = count_pixels(pred, gt), b = count_pixels(ip, ig);
  CHECK(a.fp == b.fn);
  CHECK(a.fn == b.fp);
  CHECK(a.tp == b.tn);
  CHECK(a.tn == b.tp);
}

TEST_CASE("synth_sequence examples") {
  SUBCASE("stationary disk") {
    SynthSpec spec;
    spec.velocity_x = 0.0;
    spec.frames = 4;
    const auto s = synth_sequence(spec);
    for (std::size_t t = 1; t < 4; ++t) {
      CHECK(s.frames[t] == s.frames[0]);
      CHECK(s.gt[t] == s.gt[0]);
    }
  }
  SUBCASE("moving disk advances 2 px per frame") {
    SynthSpec spec;
    const auto s = synth_sequence(spec);
    REQUIRE(s.frames.size() == 30);
    for (std::size_t t = 1; t < 30; ++t) {
      CHECK(centroid_x(s.gt[t]) - centroid_x(s.gt[t - 1]) == doctest::Approx(2.0).epsilon(1e-9));
    }
  }
  SUBCASE("noise sigma 5") {
    SynthSpec spec;
    spec.frames = 1;
    SynthSpec noisy = spec;
    noisy.noise_sigma = 5.0;
    // Rounded Gaussian noise: MSE = 25 + 1/12, PSNR = 20 log10(255) - 10 log10(MSE).
    const double expected = 20.0 * std::log10(255.0) - 10.0 * std::log10(25.0 + 1.0 / 12.0);
    const double got = psnr(synth_sequence(spec).frames[0], synth_sequence(noisy).frames[0]);
    CHECK(std::abs(got - expected) <= 0.5);
  }
  SUBCASE("out of bounds") {
    SynthSpec spec;
    spec.velocity_x = 5.0;
    CHECK_THROWS_AS(synth_sequence(spec), std::invalid_argument);
  }
}

TEST_CASE("synth_scribbles mark both labels inside their regions") {
  SynthSpec spec;
  const auto s = synth_sequence(spec);
  const auto marks = synth_scribbles(spec, 0, 3);
  bool fg = false, bg = false;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (marks[i] == Scribble::kForeground) {
      fg = true;
      CHECK(s.gt[0][i] == 255);
    }
    if (marks[i] == Scribble::kBackground) {
      bg = true;
      CHECK(s.gt[0][i] == 0);
    }
  }
  CHECK(fg);
  CHECK(bg);
}

TEST_CASE("evaluate_dirs and the JSON report") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "biprop_eval_dirs";
  fs::remove_all(root);
  fs::create_directories(root / "pred");
  fs::create_directories(root / "gt");
  const Mask gt = mask_from(2, 2, {255, 255, 0, 0});
  save_mask(gt, root / "gt" / mask_filename(0));
  save_mask(Mask(2, 2, 255), root / "pred" / mask_filename(0));
  save_mask(gt, root / "gt" / mask_filename(1));
  save_mask(gt, root / "pred" / mask_filename(1));
  const auto report = evaluate_dirs(root / "pred", root / "gt");
  REQUIRE(report.frames.size() == 2);
  CHECK(report.mean().precision == 0.75);
  CHECK(report.mean().recall == 1.0);
  std::ostringstream os;
  write_eval_json(os, report);
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j["frames"].size() == 2);
  CHECK(j["mean_precision"].get<double>() == 0.75);

  fs::remove(root / "pred" / mask_filename(1));
  CHECK_THROWS_AS(evaluate_dirs(root / "pred", root / "gt"), IoError);
}
