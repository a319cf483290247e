#include "biprop/propagate.hpp"

#include <algorithm>
#include <cmath>

#include "biprop/overseg.hpp"

namespace biprop {
namespace {

struct LatticeEdge {
  bool horizontal;
  int x;
  int y;
  bool p_to_q_is_fwd;
};

LatticeEdge lattice_edge(const BoundaryPair& bp) {
  if (bp.p.y == bp.q.y) {
    if (bp.q.x == bp.p.x + 1) return {true, bp.p.x, bp.p.y, true};
    return {true, bp.q.x, bp.q.y, false};
  }
  if (bp.q.y == bp.p.y + 1) return {false, bp.p.x, bp.p.y, true};
  return {false, bp.q.x, bp.q.y, false};
}

struct EdgeStack {
  std::vector<Plane> h;  // fwd, bwd per channel
  std::vector<Plane> v;
  Plane h_mass;
  Plane v_mass;
};

EdgeStack rasterize_edges(const std::vector<BinaryField>& channels, const RegionAdjacency& adj,
                          const RegionMap& map) {
  const int w = map.width(), h = map.height();
  EdgeStack s;
  s.h.assign(2 * channels.size(), Plane(std::max(w - 1, 0), h));
  s.v.assign(2 * channels.size(), Plane(w, std::max(h - 1, 0)));
  s.h_mass = Plane(std::max(w - 1, 0), h);
  s.v_mass = Plane(w, std::max(h - 1, 0));
  for (const auto& field : channels) {
    if (field.size() != adj.pairs.size()) {
      throw std::invalid_argument("binary field does not match adjacency");
    }
  }
  for (std::size_t k = 0; k < adj.pairs.size(); ++k) {
    for (const auto& bp : adj.pairs[k].boundary) {
      const LatticeEdge e = lattice_edge(bp);
      auto& planes = e.horizontal ? s.h : s.v;
      (e.horizontal ? s.h_mass : s.v_mass)(e.x, e.y) = 1.0;
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const DirectedWeight& wgt = channels[c][k];
        planes[2 * c](e.x, e.y) = e.p_to_q_is_fwd ? wgt.forward : wgt.backward;
        planes[2 * c + 1](e.x, e.y) = e.p_to_q_is_fwd ? wgt.backward : wgt.forward;
      }
    }
  }
  return s;
}

std::vector<BinaryField> aggregate_edges(const std::vector<Plane>& h, const std::vector<Plane>& v,
                                         std::size_t channel_count, const RegionAdjacency& adj) {
  std::vector<BinaryField> out(channel_count, BinaryField(adj.pairs.size()));
  for (std::size_t k = 0; k < adj.pairs.size(); ++k) {
    const auto& boundary = adj.pairs[k].boundary;
    for (const auto& bp : boundary) {
      const LatticeEdge e = lattice_edge(bp);
      const auto& planes = e.horizontal ? h : v;
      for (std::size_t c = 0; c < channel_count; ++c) {
        const double fwd = planes[2 * c](e.x, e.y);
        const double bwd = planes[2 * c + 1](e.x, e.y);
        out[c][k].forward += e.p_to_q_is_fwd ? fwd : bwd;
        out[c][k].backward += e.p_to_q_is_fwd ? bwd : fwd;
      }
    }
    const double inv = boundary.empty() ? 0.0 : 1.0 / static_cast<double>(boundary.size());
    for (std::size_t c = 0; c < channel_count; ++c) {
      out[c][k].forward *= inv;
      out[c][k].backward *= inv;
    }
  }
  return out;
}

std::vector<Plane> rasterize_nodes(const NodeChannels& channels, const RegionMap& map) {
  std::vector<Plane> planes(channels.size(), Plane(map.width(), map.height()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != static_cast<std::size_t>(map.region_count)) {
      throw std::invalid_argument("node field does not cover the region map");
    }
    for (std::size_t i = 0; i < map.ids.size(); ++i) {
      planes[c][i] = channels[c][static_cast<std::size_t>(map.ids[i])];
    }
  }
  return planes;
}

NodeChannels aggregate_nodes(const std::vector<Plane>& planes, const RegionMap& map) {
  NodeChannels out(planes.size(), std::vector<double>(static_cast<std::size_t>(map.region_count)));
  for (std::size_t c = 0; c < planes.size(); ++c) {
    if (!planes[c].same_shape(map.ids)) throw std::invalid_argument("plane/map shape mismatch");
    for (std::size_t i = 0; i < map.ids.size(); ++i) {
      out[c][static_cast<std::size_t>(map.ids[i])] += planes[c][i];
    }
    for (std::size_t r = 0; r < out[c].size(); ++r) out[c][r] /= map.sizes[r];
  }
  return out;
}

}  // namespace

FrameRegions pixel_regions(int width, int height) {
  FrameRegions fr;
  fr.map = identity_region_map(width, height);
  fr.adjacency = region_adjacency(fr.map);
  return fr;
}

EdgeGuides edge_guides(const Image& frame) {
  const int w = frame.width(), h = frame.height();
  EdgeGuides g{Image(std::max(w - 1, 0), h), Image(w, std::max(h - 1, 0))};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) g.h(x, y) = midpoint(frame(x, y), frame(x + 1, y));
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) g.v(x, y) = midpoint(frame(x, y), frame(x, y + 1));
  }
  return g;
}

UnaryPlanes rasterize_unary(const UnaryField& unary, const RegionMap& map) {
  if (unary.size() != static_cast<std::size_t>(map.region_count)) {
    throw std::invalid_argument("rasterize_unary: region without unary entry");
  }
  UnaryPlanes planes{Plane(map.width(), map.height()), Plane(map.width(), map.height())};
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    const UnaryCost& u = unary[static_cast<std::size_t>(map.ids[i])];
    planes.fg[i] = u.fg;
    planes.bg[i] = u.bg;
  }
  return planes;
}

UnaryPlanes propagate_unary(const UnaryPlanes& prev, const Image& guide_prev,
                            const Image& guide_cur, const PermeabilityParams& p) {
  const std::vector<Plane> src{prev.fg, prev.bg};
  auto out = cross_filter(src, nullptr, guide_prev, guide_cur, p);
  return {std::move(out[0]), std::move(out[1])};
}

UnaryField aggregate_unary(const UnaryPlanes& planes, const RegionMap& map) {
  const auto nodes = aggregate_nodes({planes.fg, planes.bg}, map);
  UnaryField out(nodes[0].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {nodes[0][i], nodes[1][i]};
  return out;
}

EdgePlanes binary_to_edge_planes(const BinaryField& binary, const RegionAdjacency& adj,
                                 const RegionMap& map) {
  EdgeStack s = rasterize_edges({binary}, adj, map);
  return {std::move(s.h[0]), std::move(s.h[1]), std::move(s.h_mass),
          std::move(s.v[0]), std::move(s.v[1]), std::move(s.v_mass)};
}

EdgePlanes propagate_binary(const EdgePlanes& prev, const Image& guide_prev,
                            const Image& guide_cur, const PermeabilityParams& p) {
  const EdgeGuides gp = edge_guides(guide_prev);
  const EdgeGuides gc = edge_guides(guide_cur);
  const std::vector<Plane> hsrc{prev.h_fwd, prev.h_bwd};
  const std::vector<Plane> vsrc{prev.v_fwd, prev.v_bwd};
  auto h = cross_filter(hsrc, &prev.h_mass, gp.h, gc.h, p);
  auto v = cross_filter(vsrc, &prev.v_mass, gp.v, gc.v, p);
  Plane h_mass(prev.h_mass.width(), prev.h_mass.height(), 1.0);
  Plane v_mass(prev.v_mass.width(), prev.v_mass.height(), 1.0);
  return {std::move(h[0]), std::move(h[1]), std::move(h_mass),
          std::move(v[0]), std::move(v[1]), std::move(v_mass)};
}

BinaryField aggregate_binary(const EdgePlanes& planes, const RegionAdjacency& adj) {
  return aggregate_edges({planes.h_fwd, planes.h_bwd}, {planes.v_fwd, planes.v_bwd}, 1, adj)
      .front();
}

double mean_adjacent_distance(const Image& frame) {
  double sum = 0.0;
  long count = 0;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (x + 1 < frame.width()) {
        sum += color_distance(frame(x, y), frame(x + 1, y));
        ++count;
      }
      if (y + 1 < frame.height()) {
        sum += color_distance(frame(x, y), frame(x, y + 1));
        ++count;
      }
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

EdgePlanes smoothed_potts_binary(const Image& guide_prev, const Image& guide_cur,
                                 const PermeabilityParams& p, double beta_scale) {
  if (!(beta_scale > 0.0)) throw std::invalid_argument("beta_scale must be positive");
  if (!guide_prev.same_shape(guide_cur)) throw std::invalid_argument("guide shape mismatch");
  const int w = guide_cur.width(), h = guide_cur.height();
  std::vector<Plane> channels(3, Plane(w, h));
  for (std::size_t i = 0; i < guide_cur.size(); ++i) {
    channels[0][i] = guide_cur[i].r;
    channels[1][i] = guide_cur[i].g;
    channels[2][i] = guide_cur[i].b;
  }
  const auto s = cross_filter(channels, nullptr, guide_cur, guide_cur, p);
  auto smooth = [&](int x, int y) {
    const std::size_t i = guide_cur.index(x, y);
    return Color{s[0][i], s[1][i], s[2][i]};
  };

  EdgePlanes out;
  out.h_fwd = Plane(std::max(w - 1, 0), h);
  out.v_fwd = Plane(w, std::max(h - 1, 0));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      out.h_fwd(x, y) = std::exp(-color_distance(smooth(x, y), smooth(x + 1, y)) / beta_scale);
    }
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.v_fwd(x, y) = std::exp(-color_distance(smooth(x, y), smooth(x, y + 1)) / beta_scale);
    }
  }
  out.h_bwd = out.h_fwd;
  out.v_bwd = out.v_fwd;
  out.h_mass = Plane(out.h_fwd.width(), out.h_fwd.height(), 1.0);
  out.v_mass = Plane(out.v_fwd.width(), out.v_fwd.height(), 1.0);
  return out;
}

NodeChannels propagate_node_channels(const NodeChannels& channels, const FrameRegions& prev,
                                     const FrameRegions& cur, const Image& guide_prev,
                                     const Image& guide_cur, const PermeabilityParams& p) {
  if (!prev.map.ids.same_shape(cur.map.ids) || !guide_prev.same_shape(prev.map.ids)) {
    throw std::invalid_argument("propagate: shape mismatch");
  }
  const auto planes = rasterize_nodes(channels, prev.map);
  const auto filtered = cross_filter(planes, nullptr, guide_prev, guide_cur, p);
  return aggregate_nodes(filtered, cur.map);
}

std::vector<BinaryField> propagate_edge_channels(const std::vector<BinaryField>& channels,
                                                 const FrameRegions& prev, const FrameRegions& cur,
                                                 const Image& guide_prev, const Image& guide_cur,
                                                 const PermeabilityParams& p) {
  if (!prev.map.ids.same_shape(cur.map.ids) || !guide_prev.same_shape(prev.map.ids)) {
    throw std::invalid_argument("propagate: shape mismatch");
  }
  const EdgeStack s = rasterize_edges(channels, prev.adjacency, prev.map);
  const EdgeGuides gp = edge_guides(guide_prev);
  const EdgeGuides gc = edge_guides(guide_cur);
  const auto h = cross_filter(s.h, &s.h_mass, gp.h, gc.h, p);
  const auto v = cross_filter(s.v, &s.v_mass, gp.v, gc.v, p);
  return aggregate_edges(h, v, channels.size(), cur.adjacency);
}

Energy propagate_energy(const Energy& energy, const FrameRegions& prev, const FrameRegions& cur,
                        const Image& guide_prev, const Image& guide_cur,
                        const PermeabilityParams& p) {
  NodeChannels nodes(2, std::vector<double>(energy.unary.size()));
  for (std::size_t i = 0; i < energy.unary.size(); ++i) {
    nodes[0][i] = energy.unary[i].fg;
    nodes[1][i] = energy.unary[i].bg;
  }
  const auto un = propagate_node_channels(nodes, prev, cur, guide_prev, guide_cur, p);
  Energy out;
  out.unary.resize(un[0].size());
  for (std::size_t i = 0; i < out.unary.size(); ++i) out.unary[i] = {un[0][i], un[1][i]};
  out.binary = propagate_edge_channels({energy.binary}, prev, cur, guide_prev, guide_cur, p).front();
  return out;
}

}  // namespace biprop
