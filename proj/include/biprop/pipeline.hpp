#pragma once

// Per-frame segmentation loop: over-segment, carry the energy (or the
// residual graph) from the previous frame, solve, emit a mask. Frame 0 is
// seeded from scribbles or from an energy file; later keyframes may be
// corrected with extra scribbles, after which the loop re-runs forward.

#include <filesystem>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "biprop/core.hpp"
#include "biprop/dyncut.hpp"
#include "biprop/propagate.hpp"
#include "biprop/seed.hpp"

namespace biprop {

enum class RegionMode { kPixel, kSuperpixel };
enum class BinaryPath { kPropagated, kSmoothedPotts };

/// Which frames the dynamic solve is checked against a scratch solve.
struct VerifyPolicy {
  enum class Kind { kOff, kSample, kAll };
  Kind kind = Kind::kOff;
  int every = 1;  // kSample: frames with t % every == 0

  bool enabled() const { return kind != Kind::kOff; }
  bool applies(std::size_t t) const;
  /// Accepts "off", "all" and "sample:K" with K >= 1.
  static VerifyPolicy parse(const std::string& text);
  std::string to_string() const;
};

struct RunConfig {
  RegionMode mode = RegionMode::kSuperpixel;
  bool dynamic = true;
  VerifyPolicy verify;
  double verify_tolerance = 1e-6;
  double lambda = 30.0;
  int k_regions = 1000;
  double compactness = 10.0;
  BinaryPath binary_path = BinaryPath::kPropagated;
  double gamma_smooth = 50.0;
  SeedConfig seed;
  DynamicOptions dyn;
  std::filesystem::path output_dir;  // empty: nothing is written
  bool dump_energy = false;
  bool dump_graphs = false;

  /// Throws std::invalid_argument on lambda <= 0, k_regions < 1 or
  /// smoothed binaries combined with the dynamic solver.
  void validate() const;
};

struct FrameReport {
  std::size_t frame = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  bool dynamic_step = false;
  double overseg_seconds = 0.0;
  double propagate_seconds = 0.0;
  double solve_seconds = 0.0;
  double wall_seconds = 0.0;
  double flow_value = 0.0;
  SolveStats stats;
  std::optional<double> discrepancy;
  bool fallback = false;
};

struct RunReport {
  std::vector<FrameReport> frames;

  double total_solve_seconds() const;
  double total_propagate_seconds() const;
  double total_wall_seconds() const;
  long total_augmentations() const;
  long total_search_steps() const;
  std::size_t fallbacks() const;
  double max_discrepancy() const;
};

void write_report_json(std::ostream& os, const RunReport& report, const RunConfig& cfg);

/// Externally supplied frame-0 energy over a region map.
struct EnergySeed {
  RegionMap map;
  Energy energy;
};

/// Text format:
///   ENERGY v1
///   regions N edges M
///   N lines "id cost_fg cost_bg"
///   M lines "i j w_fwd w_bwd"   (w_fwd is i->j)
/// Region ids follow the region map stored next to the file with the
/// extension replaced by ".regions.png"; without that file N must equal
/// width*height and the pixel map is used. Every id appears once. Listed
/// edges must join adjacent regions; unlisted adjacent pairs get zero weight.
EnergySeed load_energy_seed(const std::filesystem::path& path, int width, int height);
void save_energy_seed(const EnergySeed& seed, const std::filesystem::path& path);

/// Pixel = 255 iff its region is FG.
Mask labeling_to_mask(const Labeling& labeling, const RegionMap& map);

class VideoSegmenter {
 public:
  /// Called after each solved frame with (frame index, frames solved so far).
  using Progress = std::function<void(std::size_t frame, std::size_t done)>;

  VideoSegmenter(FrameSequence frames, RunConfig cfg);

  /// Seeds and solves frame 0, discarding any later results.
  void seed_scribbles(const ScribbleMask& scribbles);
  void seed_energy(const EnergySeed& seed);

  /// Solves frames after the last solved one until `until` frames (capped
  /// at the sequence length) are solved.
  void run(const Progress& progress = {}, std::size_t until = SIZE_MAX);

  /// Re-solves keyframe k with the scribbles blended into its energy and
  /// drops results after k. Empty scribbles leave everything unchanged.
  /// Requires frame k to be solved.
  void apply_keyframe_correction(std::size_t k, const ScribbleMask& scribbles);

  std::size_t frame_count() const { return frames_.size(); }
  std::size_t solved_count() const { return snapshots_.size(); }
  const Mask& mask(std::size_t t) const { return snapshots_.at(t).mask; }
  std::vector<Mask> masks() const;
  const Labeling& labeling(std::size_t t) const { return snapshots_.at(t).labeling; }
  const FrameRegions& regions(std::size_t t) const { return snapshots_.at(t).regions; }
  /// Energy of frame t up to an additive constant.
  Energy frame_energy(std::size_t t) const;
  RunReport report() const;
  const RunConfig& config() const { return cfg_; }

 private:
  struct Snapshot {
    FrameRegions regions;
    Labeling labeling;
    Mask mask;
    DynState state;               // dynamic mode
    std::optional<Energy> energy;  // static mode, and dynamic with verification
    FrameReport report;
  };

  FrameRegions make_regions(std::size_t t) const;
  PermeabilityParams params() const { return {cfg_.lambda}; }
  void solve_keyframe(std::size_t t, FrameRegions regions, Energy energy, double overseg_seconds);
  void solve_next();
  void emit(std::size_t t);
  void add_samples(std::size_t t, const ScribbleMask& scribbles);

  FrameSequence frames_;
  RunConfig cfg_;
  std::vector<Snapshot> snapshots_;
  std::vector<Color> fg_samples_;
  std::vector<Color> bg_samples_;
  std::optional<ColorModels> models_;
};

struct SegmentResult {
  std::vector<Mask> masks;
  RunReport report;
};

/// Seeds from scribbles or an energy file, solves all frames and, when
/// cfg.output_dir is set, writes masks, report.json and verify.jsonl.
SegmentResult segment_video(const FrameSequence& frames, const ScribbleMask* scribbles,
                            const EnergySeed* energy_seed, const RunConfig& cfg);

}  // namespace biprop
