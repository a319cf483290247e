#pragma once

// Dual one-tap recursive edge-aware filter (information permeability /
// bi-exponential filter), used as a cross filter: weights come from guide
// colors, values are arbitrary real planes.
//
// A cross_filter call places the source planes in frame t-1 of a two-frame
// window (frame t is empty), runs separable dual scans along the
// horizontal, vertical and temporal axes in the orders (H, V, T) and
// (V, H, T), divides the filtered values by the identically filtered
// masses, and averages the two orders. The whole operator is linear in the
// values for fixed guides.

#include <array>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "biprop/core.hpp"

namespace biprop {

struct PermeabilityParams {
  double lambda = 30.0;  // exponent denominator
};

/// Lower clamp on masses before division. Values and masses share every
/// weight factor, so only a mass that underflowed past the normal range is
/// clamped; a larger floor would zero targets whose temporal permeability
/// alone is tiny.
inline constexpr double kMassEpsilon = std::numeric_limits<double>::min();

/// exp(-color_distance(a, b) / lambda), in (0, 1].
double permeability(const Color& a, const Color& b, const PermeabilityParams& p);

/// Forward plus backward one-tap recursion. perms[k] links positions k and
/// k + 1. Each position's own value enters both scans.
std::vector<double> scan_1d(std::span<const double> values, std::span<const double> perms);

enum class Axis { kHorizontal, kVertical, kTemporal };

/// Joint value/mass volume over a window of guide frames. Value channels
/// share the mass volume. Guides are borrowed and must outlive the state.
class CrossFilterState {
 public:
  CrossFilterState(std::vector<const Image*> guides, int channels);

  int width() const { return width_; }
  int height() const { return height_; }
  int depth() const { return static_cast<int>(guides_.size()); }
  int channels() const { return channels_; }

  std::span<double> values(int channel, int frame);
  std::span<const double> values(int channel, int frame) const;
  std::span<double> masses(int frame);
  std::span<const double> masses(int frame) const;

  const Image& guide(int frame) const { return *guides_[static_cast<std::size_t>(frame)]; }

  /// Permeabilities along an axis, laid out per scan line. Cached per lambda.
  const std::vector<double>& perms(Axis axis, const PermeabilityParams& p) const;

 private:
  std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }

  std::vector<const Image*> guides_;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> values_;  // [channel][frame][y][x]
  std::vector<double> masses_;  // [frame][y][x]
  mutable std::array<std::vector<double>, 3> perm_cache_;
  mutable std::array<double, 3> perm_lambda_{0.0, 0.0, 0.0};
};

/// scan_1d along every line of the axis, applied to all value channels and
/// to the masses.
void filter_pass(CrossFilterState& state, Axis axis, const PermeabilityParams& p);

/// Receives the state after each pass; order is 0 for (H, V, T), 1 for (V, H, T).
using PassObserver = std::function<void(int order, Axis axis, const CrossFilterState& state)>;

/// Filters each source plane from guide_prev's frame onto guide_cur's frame.
/// source_mass defaults to all ones when null.
std::vector<Plane> cross_filter(std::span<const Plane> sources, const Plane* source_mass,
                                const Image& guide_prev, const Image& guide_cur,
                                const PermeabilityParams& p, const PassObserver& observer = {});

Plane cross_filter(const Plane& source, const Image& guide_prev, const Image& guide_cur,
                   const PermeabilityParams& p);

/// Direct O(n^2) evaluation of cross_filter: every source-to-target weight
/// is the product of per-axis dual-scan weights along the step path. Small
/// inputs only.
std::vector<Plane> oracle_cross_filter(std::span<const Plane> sources, const Plane* source_mass,
                                       const Image& guide_prev, const Image& guide_cur,
                                       const PermeabilityParams& p);

Plane oracle_cross_filter(const Plane& source, const Image& guide_prev, const Image& guide_cur,
                          const PermeabilityParams& p);

}  // namespace biprop
