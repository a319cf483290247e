#pragma once

// Shared generators for randomized tests.

#include <algorithm>
#include <cmath>
#include <random>

#include "biprop/core.hpp"
#include "biprop/overseg.hpp"
#include "biprop/propagate.hpp"

namespace biprop::testing {

inline Image random_image(int w, int h, std::mt19937& rng, double lo = 0.0, double hi = 255.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = {u(rng), u(rng), u(rng)};
  return img;
}

/// Integer-valued colors around a base color, as decoded from an 8-bit PNG.
inline Image noisy_image(int w, int h, std::mt19937& rng, Color base, double amplitude) {
  std::uniform_int_distribution<int> u(-static_cast<int>(amplitude), static_cast<int>(amplitude));
  Image img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = {std::clamp(base.r + u(rng), 0.0, 255.0), std::clamp(base.g + u(rng), 0.0, 255.0),
              std::clamp(base.b + u(rng), 0.0, 255.0)};
  }
  return img;
}

inline Plane random_plane(int w, int h, std::mt19937& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Plane p(w, h);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = u(rng);
  return p;
}

inline Energy random_energy(const RegionAdjacency& adj, std::mt19937& rng, double unary_hi = 10.0,
                            double binary_hi = 10.0, bool symmetric = false) {
  std::uniform_real_distribution<double> u(0.0, unary_hi), b(0.0, binary_hi);
  Energy e;
  e.unary.resize(adj.region_count());
  for (auto& c : e.unary) c = {u(rng), u(rng)};
  e.binary.resize(adj.pairs.size());
  for (auto& w : e.binary) {
    w.forward = b(rng);
    w.backward = symmetric ? w.forward : b(rng);
  }
  return e;
}

/// Rectangular blocks of bw x bh pixels as regions.
inline RegionMap block_map(int w, int h, int bw, int bh) {
  Grid<int> ids(w, h);
  const int cols = (w + bw - 1) / bw;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) ids(x, y) = (y / bh) * cols + x / bw;
  }
  return region_map_from_ids(std::move(ids));
}

/// Adjacency over n abstract nodes with each pair present with probability
/// density. Boundary lists stay empty; only solver-level code may use it.
inline RegionAdjacency random_adjacency(int n, double density, std::mt19937& rng) {
  std::bernoulli_distribution keep(density);
  RegionAdjacency adj;
  adj.neighbors.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!keep(rng)) continue;
      adj.pairs.push_back({a, b, {}});
      adj.neighbors[static_cast<std::size_t>(a)].push_back(b);
      adj.neighbors[static_cast<std::size_t>(b)].push_back(a);
    }
  }
  for (auto& nb : adj.neighbors) std::sort(nb.begin(), nb.end());
  return adj;
}

/// Replaces every weight by its floor, giving integer capacities.
inline Energy floored(Energy e) {
  for (auto& u : e.unary) u = {std::floor(u.fg), std::floor(u.bg)};
  for (auto& w : e.binary) w = {std::floor(w.forward), std::floor(w.backward)};
  return e;
}

inline FrameRegions frame_regions(RegionMap map) {
  FrameRegions r;
  r.adjacency = region_adjacency(map);
  r.map = std::move(map);
  return r;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace biprop::testing
