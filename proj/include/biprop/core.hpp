#pragma once

// Shared domain types for the segmentation engine: colors, grids, frame
// sequences, region maps, and the two-label MRF energy.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace biprop {

/// RGB color with channels held as reals in [0, 255].
struct Color {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const Color&, const Color&) = default;
};

/// L1 distance over the three channels.
double color_distance(const Color& a, const Color& b);

/// Channelwise mean of two colors.
Color midpoint(const Color& a, const Color& b);

/// Dense row-major 2D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(std::max(width, 0)) *
                  static_cast<std::size_t>(std::max(height, 0)),
              fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative grid dimension");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Image = Grid<Color>;
using Plane = Grid<double>;
using Mask = Grid<std::uint8_t>;

/// Ordered frames sharing one size; the guide volume for all filter weights.
struct FrameSequence {
  std::vector<Image> frames;

  std::size_t size() const { return frames.size(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  const Image& operator[](std::size_t t) const { return frames[t]; }

  /// Throws if empty or if frame sizes differ.
  void validate() const;
};

enum class Label : std::uint8_t { kForeground = 0, kBackground = 1 };
using Labeling = std::vector<Label>;

Label flip(Label l);

/// Per-node label costs.
struct UnaryCost {
  double fg = 0.0;
  double bg = 0.0;
};
using UnaryField = std::vector<UnaryCost>;

/// Weights of one adjacent pair (a, b): forward is a->b, backward is b->a.
struct DirectedWeight {
  double forward = 0.0;
  double backward = 0.0;
};
/// Aligned with RegionAdjacency::pairs.
using BinaryField = std::vector<DirectedWeight>;

struct Energy {
  UnaryField unary;
  BinaryField binary;
};

enum class Scribble : std::uint8_t { kNone = 0, kForeground = 1, kBackground = 2 };
using ScribbleMask = Grid<Scribble>;

struct PixelPos {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

/// Two 4-adjacent pixels; p lies in the pair's first region, q in the second.
struct BoundaryPair {
  PixelPos p;
  PixelPos q;
  friend bool operator==(const BoundaryPair&, const BoundaryPair&) = default;
};

/// Per-pixel region ids. ids partition the frame into region_count regions.
struct RegionMap {
  Grid<int> ids;
  int region_count = 0;
  std::vector<int> sizes;

  int width() const { return ids.width(); }
  int height() const { return ids.height(); }
};

/// Region map where each pixel is its own region (id = y * width + x).
RegionMap identity_region_map(int width, int height);

/// Builds sizes and region_count from ids, throwing if some id in
/// [0, max id] is unused or negative.
RegionMap region_map_from_ids(Grid<int> ids);

struct RegionPair {
  int a = 0;  // a < b
  int b = 0;
  std::vector<BoundaryPair> boundary;
};

struct RegionAdjacency {
  std::vector<RegionPair> pairs;           // sorted by (a, b)
  std::vector<std::vector<int>> neighbors;  // per region, sorted neighbor ids

  std::size_t region_count() const { return neighbors.size(); }
  /// Index into pairs for regions (a, b) in either order, or -1.
  long pair_index(int a, int b) const;
};

/// Sum of unary costs plus V(i->j) for every adjacent pair with i = FG, j = BG.
double energy_of(const Labeling& labeling, const UnaryField& unary, const BinaryField& binary,
                 const RegionAdjacency& adjacency);

inline double energy_of(const Labeling& labeling, const Energy& energy,
                        const RegionAdjacency& adjacency) {
  return energy_of(labeling, energy.unary, energy.binary, adjacency);
}

}  // namespace biprop
