#pragma once

// Frame-to-frame MRF energy propagation. Node energies are rasterized to
// pixel planes, edge energies to lattice edge planes; both are carried to
// the next frame by the cross filter and aggregated back onto that frame's
// regions.

#include <vector>

#include "biprop/core.hpp"
#include "biprop/ipbe.hpp"

namespace biprop {

/// Region map plus adjacency for one frame.
struct FrameRegions {
  RegionMap map;
  RegionAdjacency adjacency;

  std::size_t node_count() const { return static_cast<std::size_t>(map.region_count); }
};

FrameRegions pixel_regions(int width, int height);

struct UnaryPlanes {
  Plane fg;
  Plane bg;
};

/// Lattice edge planes. Horizontal planes are H x (W-1) with position (x, y)
/// linking pixel (x, y) to (x+1, y); vertical planes are (H-1) x W linking
/// (x, y) to (x, y+1). fwd holds the weight toward the right/lower pixel,
/// bwd the reverse. The mass planes mark which lattice edges carry a
/// region-pair weight (1) and which are region interiors (0).
struct EdgePlanes {
  Plane h_fwd, h_bwd, h_mass;
  Plane v_fwd, v_bwd, v_mass;
};

/// Guide images for the lattice edge planes: endpoint color means.
struct EdgeGuides {
  Image h;
  Image v;
};
EdgeGuides edge_guides(const Image& frame);

UnaryPlanes rasterize_unary(const UnaryField& unary, const RegionMap& map);
UnaryPlanes propagate_unary(const UnaryPlanes& prev, const Image& guide_prev,
                            const Image& guide_cur, const PermeabilityParams& p);
/// Per-region arithmetic mean of each plane.
UnaryField aggregate_unary(const UnaryPlanes& planes, const RegionMap& map);

EdgePlanes binary_to_edge_planes(const BinaryField& binary, const RegionAdjacency& adj,
                                 const RegionMap& map);
EdgePlanes propagate_binary(const EdgePlanes& prev, const Image& guide_prev,
                            const Image& guide_cur, const PermeabilityParams& p);
/// Per region pair and direction, mean over its boundary pixel pairs.
BinaryField aggregate_binary(const EdgePlanes& planes, const RegionAdjacency& adj);

/// Mean color_distance over all 4-adjacent pixel pairs of a frame.
double mean_adjacent_distance(const Image& frame);

/// Self-guided smoothing of the current frame's colors followed by
/// exp(-color_distance / beta_scale) on every lattice edge. Weights lie in (0, 1].
EdgePlanes smoothed_potts_binary(const Image& guide_prev, const Image& guide_cur,
                                 const PermeabilityParams& p, double beta_scale);

// Multi-channel forms used by the dynamic solver. Every channel goes
// through the same linear operator as the unary (node) or binary (edge)
// energies.
using NodeChannels = std::vector<std::vector<double>>;

NodeChannels propagate_node_channels(const NodeChannels& channels, const FrameRegions& prev,
                                     const FrameRegions& cur, const Image& guide_prev,
                                     const Image& guide_cur, const PermeabilityParams& p);

std::vector<BinaryField> propagate_edge_channels(const std::vector<BinaryField>& channels,
                                                 const FrameRegions& prev, const FrameRegions& cur,
                                                 const Image& guide_prev, const Image& guide_cur,
                                                 const PermeabilityParams& p);

/// Full energy of frame t from frame t-1: unary and binary propagation.
Energy propagate_energy(const Energy& energy, const FrameRegions& prev, const FrameRegions& cur,
                        const Image& guide_prev, const Image& guide_cur,
                        const PermeabilityParams& p);

}  // namespace biprop
