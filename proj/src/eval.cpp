#include "biprop/eval.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <regex>
#include <stdexcept>

#include "json.hpp"

#include "biprop/image_io.hpp"

namespace biprop {
namespace {

double ratio_or_one(long num, long den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

bool inside(const SynthSpec& s, double cx, double cy, int x, int y) {
  const double dx = x - cx, dy = y - cy;
  if (s.shape == SynthShape::kDisk) return dx * dx + dy * dy <= s.radius * s.radius;
  return std::abs(dx) <= s.radius && std::abs(dy) <= s.radius;
}

double clamp_channel(double v) { return std::clamp(std::round(v), 0.0, 255.0); }

}  // namespace

EvalCounts count_pixels(const Mask& pred, const Mask& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("prediction and ground truth sizes differ");
  EvalCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g) ++c.tp;
    if (p && !g) ++c.fp;
    if (!p && g) ++c.fn;
    if (!p && !g) ++c.tn;
  }
  return c;
}

PrecisionRecall precision_recall(const EvalCounts& c) {
  return {ratio_or_one(c.tp, c.tp + c.fp), ratio_or_one(c.tp, c.tp + c.fn)};
}

PrecisionRecall precision_recall(const Mask& pred, const Mask& gt) {
  return precision_recall(count_pixels(pred, gt));
}

PrecisionRecall EvalReport::mean() const {
  if (frames.empty()) return {};
  PrecisionRecall m{0.0, 0.0};
  for (const auto& f : frames) {
    m.precision += f.pr.precision;
    m.recall += f.pr.recall;
  }
  const double n = static_cast<double>(frames.size());
  return {m.precision / n, m.recall / n};
}

EvalReport evaluate_masks(const std::vector<Mask>& pred, const std::vector<Mask>& gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("frame counts differ");
  EvalReport r;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    FrameEval f;
    f.frame = t;
    f.counts = count_pixels(pred[t], gt[t]);
    f.pr = precision_recall(f.counts);
    r.frames.push_back(f);
  }
  return r;
}

EvalReport evaluate_dirs(const std::filesystem::path& pred_dir,
                         const std::filesystem::path& gt_dir) {
  if (!std::filesystem::is_directory(gt_dir)) {
    throw IoError("ground truth directory not found: " + gt_dir.string());
  }
  static const std::regex pattern(R"(mask_(\d{5})\.png)");
  std::vector<std::pair<std::size_t, std::string>> names;
  for (const auto& entry : std::filesystem::directory_iterator(gt_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) names.emplace_back(std::stoul(m[1].str()), name);
  }
  if (names.empty()) throw IoError("no mask_%05d.png files in " + gt_dir.string());
  std::sort(names.begin(), names.end());
  EvalReport r;
  for (const auto& [t, name] : names) {
    const auto pred_path = pred_dir / name;
    if (!std::filesystem::exists(pred_path)) throw IoError("missing prediction " + pred_path.string());
    FrameEval f;
    f.frame = t;
    f.counts = count_pixels(load_mask(pred_path), load_mask(gt_dir / name));
    f.pr = precision_recall(f.counts);
    r.frames.push_back(f);
  }
  return r;
}

void write_eval_json(std::ostream& os, const EvalReport& report) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : report.frames) {
    frames.push_back({{"frame", f.frame},
                      {"tp", f.counts.tp},
                      {"fp", f.counts.fp},
                      {"fn", f.counts.fn},
                      {"tn", f.counts.tn},
                      {"precision", f.pr.precision},
                      {"recall", f.pr.recall}});
  }
  const auto m = report.mean();
  nlohmann::json out = {{"frames", std::move(frames)},
                        {"mean_precision", m.precision},
                        {"mean_recall", m.recall},
                        {"empty_ratio_convention", "0/0 = 1.0"}};
  os << out.dump(2) << '\n';
}

SynthSequence synth_sequence(const SynthSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.frames < 1 || !(spec.radius > 0.0) ||
      spec.noise_sigma < 0.0) {
    throw std::invalid_argument("synth_sequence: invalid specification");
  }
  SynthSequence out;
  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  for (int t = 0; t < spec.frames; ++t) {
    const double cx = spec.start_x + t * spec.velocity_x;
    const double cy = spec.start_y + t * spec.velocity_y;
    if (cx - spec.radius < 0.0 || cy - spec.radius < 0.0 || cx + spec.radius > spec.width - 1 ||
        cy + spec.radius > spec.height - 1) {
      throw std::invalid_argument("synth_sequence: shape leaves the frame at frame " +
                                  std::to_string(t));
    }
    Image frame(spec.width, spec.height);
    Mask gt(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const bool fg = inside(spec, cx, cy, x, y);
        Color c = fg ? spec.fg : spec.bg;
        if (spec.noise_sigma > 0.0) {
          c.r += noise(rng);
          c.g += noise(rng);
          c.b += noise(rng);
        }
        frame(x, y) = {clamp_channel(c.r), clamp_channel(c.g), clamp_channel(c.b)};
        gt(x, y) = fg ? 255 : 0;
      }
    }
    out.frames.frames.push_back(std::move(frame));
    out.gt.push_back(std::move(gt));
  }
  return out;
}

ScribbleMask synth_scribbles(const SynthSpec& spec, int t, int border) {
  ScribbleMask s(spec.width, spec.height);
  const double cx = spec.start_x + t * spec.velocity_x;
  const double cy = spec.start_y + t * spec.velocity_y;
  const double r = spec.radius / 2.0;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) s(x, y) = Scribble::kForeground;
      if (x < border || y < border || x >= spec.width - border || y >= spec.height - border) {
        s(x, y) = Scribble::kBackground;
      }
    }
  }
  return s;
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b) || a.empty()) throw std::invalid_argument("psnr: size mismatch");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dr = a[i].r - b[i].r, dg = a[i].g - b[i].g, db = a[i].b - b[i].b;
    se += dr * dr + dg * dg + db * db;
  }
  const double mse = se / (3.0 * static_cast<double>(a.size()));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace biprop
