#pragma once

// Pixel precision/recall against ground truth and synthetic moving-shape
// sequences with exact ground truth.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "biprop/core.hpp"

namespace biprop {

struct EvalCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

/// Nonzero pixels are FG. Throws std::invalid_argument on size mismatch.
EvalCounts count_pixels(const Mask& pred, const Mask& gt);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

/// 0/0 is defined as 1.0 for both ratios.
PrecisionRecall precision_recall(const EvalCounts& c);
PrecisionRecall precision_recall(const Mask& pred, const Mask& gt);

struct FrameEval {
  std::size_t frame = 0;
  EvalCounts counts;
  PrecisionRecall pr;
};

struct EvalReport {
  std::vector<FrameEval> frames;
  PrecisionRecall mean() const;
};

EvalReport evaluate_masks(const std::vector<Mask>& pred, const std::vector<Mask>& gt);

/// Pairs mask_%05d.png files of gt_dir with the same names in pred_dir.
EvalReport evaluate_dirs(const std::filesystem::path& pred_dir,
                         const std::filesystem::path& gt_dir);

void write_eval_json(std::ostream& os, const EvalReport& report);

enum class SynthShape { kDisk, kSquare };

struct SynthSpec {
  int width = 96;
  int height = 72;
  int frames = 30;
  SynthShape shape = SynthShape::kDisk;
  double radius = 12.0;  // disk radius or square half side
  double start_x = 24.0;
  double start_y = 36.0;
  double velocity_x = 2.0;  // pixels per frame
  double velocity_y = 0.0;
  Color fg{220.0, 60.0, 40.0};
  Color bg{40.0, 90.0, 160.0};
  double noise_sigma = 0.0;  // additive Gaussian, per channel
  std::uint32_t seed = 1;
};

struct SynthSequence {
  FrameSequence frames;
  std::vector<Mask> gt;
};

/// Renders the shape at start + t * velocity on every frame, rounding
/// colors to integers after noise so PNG round trips are exact. Throws
/// std::invalid_argument when the shape leaves the frame.
SynthSequence synth_sequence(const SynthSpec& spec);

/// FG: a disk of half the shape radius at the shape center on frame t.
/// BG: a border band of the given width.
ScribbleMask synth_scribbles(const SynthSpec& spec, int t = 0, int border = 3);

/// Peak signal-to-noise ratio in dB over all channels, peak 255.
double psnr(const Image& a, const Image& b);

}  // namespace biprop
