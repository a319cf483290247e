#pragma once

// SLIC-style over-segmentation and region bookkeeping for superpixel mode.

#include "biprop/core.hpp"

namespace biprop {

struct SlicParams {
  int k_regions = 1000;
  double compactness = 10.0;
  int max_iters = 10;
};

/// Clusters pixels by RGB color and position, then enforces 4-connectivity
/// by merging components smaller than a quarter of the mean region size
/// into their largest neighbor. k_regions equal to the pixel count yields
/// the identity map.
RegionMap slic_segment(const Image& frame, const SlicParams& params);

/// Adjacent region pairs with their straddling 4-adjacent pixel pairs.
RegionAdjacency region_adjacency(const RegionMap& map);

struct RegionFeature {
  Color mean_color;
  double cx = 0.0;
  double cy = 0.0;
  int size = 0;
};
using RegionFeatures = std::vector<RegionFeature>;

RegionFeatures region_features(const Image& frame, const RegionMap& map);

/// True when every region of the map is a single 4-connected component.
bool regions_connected(const RegionMap& map);

}  // namespace biprop
