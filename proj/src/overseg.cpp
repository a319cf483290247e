#include "biprop/overseg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace biprop {
namespace {

struct Center {
  double r, g, b, x, y;
};

double sq(double v) { return v * v; }

double gradient_at(const Image& img, int x, int y) {
  const int w = img.width(), h = img.height();
  const Color& l = img(std::max(x - 1, 0), y);
  const Color& r = img(std::min(x + 1, w - 1), y);
  const Color& u = img(x, std::max(y - 1, 0));
  const Color& d = img(x, std::min(y + 1, h - 1));
  return sq(r.r - l.r) + sq(r.g - l.g) + sq(r.b - l.b) + sq(d.r - u.r) + sq(d.g - u.g) +
         sq(d.b - u.b);
}

struct UnionFind {
  std::vector<int> parent;
  std::vector<long> size;
  explicit UnionFind(std::size_t n) : parent(n), size(n, 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
};

// Labels 4-connected components of equal label; returns component count.
int label_components(const Grid<int>& labels, Grid<int>& comp, std::vector<long>& sizes) {
  const int w = labels.width(), h = labels.height();
  comp = Grid<int>(w, h, -1);
  sizes.clear();
  std::vector<int> stack;
  int n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (comp(x, y) >= 0) continue;
      const int lab = labels(x, y);
      long count = 0;
      comp(x, y) = n;
      stack.assign(1, static_cast<int>(labels.index(x, y)));
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        ++count;
        const int px = i % w, py = i / w;
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          if (comp(nx[k], ny[k]) >= 0 || labels(nx[k], ny[k]) != lab) continue;
          comp(nx[k], ny[k]) = n;
          stack.push_back(static_cast<int>(labels.index(nx[k], ny[k])));
        }
      }
      sizes.push_back(count);
      ++n;
    }
  }
  return n;
}

Grid<int> enforce_connectivity(const Grid<int>& labels, int cluster_count) {
  const int w = labels.width(), h = labels.height();
  Grid<int> comp;
  std::vector<long> comp_sizes;
  const int n = label_components(labels, comp, comp_sizes);
  const double min_size =
      0.25 * static_cast<double>(labels.size()) / std::max(cluster_count, 1);

  // Component adjacency lists.
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = comp(x, y);
      if (x + 1 < w && comp(x + 1, y) != c) {
        adj[c].push_back(comp(x + 1, y));
        adj[comp(x + 1, y)].push_back(c);
      }
      if (y + 1 < h && comp(x, y + 1) != c) {
        adj[c].push_back(comp(x, y + 1));
        adj[comp(x, y + 1)].push_back(c);
      }
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  // A component survives if it is its cluster's largest piece or is at least
  // min_size; every other component joins an adjacent set, preferring sets
  // that hold a survivor, then the larger set.
  std::vector<int> largest(static_cast<std::size_t>(cluster_count), -1);
  std::vector<int> comp_label(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < comp.size(); ++i) comp_label[comp[i]] = labels[i];
  for (int c = 0; c < n; ++c) {
    const int lab = comp_label[c];
    if (lab < 0 || lab >= cluster_count) continue;
    if (largest[lab] < 0 || comp_sizes[c] > comp_sizes[largest[lab]]) largest[lab] = c;
  }
  UnionFind uf(static_cast<std::size_t>(n));
  std::vector<char> anchored(static_cast<std::size_t>(n), 0);
  for (int c = 0; c < n; ++c) {
    uf.size[c] = comp_sizes[c];
    const int lab = comp_label[c];
    const bool is_largest = lab >= 0 && lab < cluster_count && largest[lab] == c;
    anchored[c] = is_largest || static_cast<double>(comp_sizes[c]) >= min_size || n == 1;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (int c = 0; c < n; ++c) {
      const int root = uf.find(c);
      if (anchored[root]) continue;
      int best = -1;
      long best_size = -1;
      bool best_anchored = false;
      for (int nb : adj[c]) {
        const int r = uf.find(nb);
        if (r == root) continue;
        const bool a = anchored[r] != 0;
        if (std::tie(a, uf.size[r]) > std::tie(best_anchored, best_size) ||
            (a == best_anchored && uf.size[r] == best_size && r < best)) {
          best = r;
          best_size = uf.size[r];
          best_anchored = a;
        }
      }
      if (best < 0) continue;
      uf.parent[root] = best;
      uf.size[best] += uf.size[root];
      changed = true;
    }
  }

  // Contiguous ids in raster order of first appearance.
  std::vector<int> relabel(static_cast<std::size_t>(n), -1);
  int next = 0;
  Grid<int> out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int r = uf.find(comp[i]);
    if (relabel[r] < 0) relabel[r] = next++;
    out[i] = relabel[r];
  }
  return out;
}

}  // namespace

RegionMap slic_segment(const Image& frame, const SlicParams& params) {
  const int w = frame.width(), h = frame.height();
  const long n_pixels = static_cast<long>(w) * h;
  if (params.k_regions < 1 || params.k_regions > n_pixels) {
    throw std::invalid_argument("slic_segment: k_regions out of range");
  }
  if (params.max_iters < 1) throw std::invalid_argument("slic_segment: max_iters must be >= 1");
  if (params.k_regions == n_pixels) return identity_region_map(w, h);

  const int nx = std::clamp(
      static_cast<int>(std::lround(std::sqrt(double(params.k_regions) * w / h))), 1, w);
  const int ny = std::clamp(static_cast<int>(std::lround(double(params.k_regions) / nx)), 1, h);
  const double step_x = double(w) / nx;
  const double step_y = double(h) / ny;
  const double spacing = std::sqrt(double(n_pixels) / (nx * ny));
  const int window = static_cast<int>(std::ceil(std::max(step_x, step_y)));

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx * ny));
  const bool perturb = std::min(step_x, step_y) >= 3.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int cx = std::min(static_cast<int>((i + 0.5) * step_x), w - 1);
      int cy = std::min(static_cast<int>((j + 0.5) * step_y), h - 1);
      if (perturb) {
        double best = gradient_at(frame, cx, cy);
        int bx = cx, by = cy;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || y < 0 || x >= w || y >= h) continue;
            const double g = gradient_at(frame, x, y);
            if (g < best) {
              best = g;
              bx = x;
              by = y;
            }
          }
        }
        cx = bx;
        cy = by;
      }
      const Color& c = frame(cx, cy);
      centers.push_back({c.r, c.g, c.b, double(cx), double(cy)});
    }
  }

  const double spatial_weight = sq(params.compactness / spacing);
  Grid<int> labels(w, h, -1);
  Grid<double> dist(w, h);
  std::vector<Center> sums(centers.size());
  std::vector<long> counts(centers.size());

  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::fill(dist.values().begin(), dist.values().end(), std::numeric_limits<double>::max());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(c.x) - window);
      const int x1 = std::min(w - 1, static_cast<int>(c.x) + window);
      const int y0 = std::max(0, static_cast<int>(c.y) - window);
      const int y1 = std::min(h - 1, static_cast<int>(c.y) + window);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Color& p = frame(x, y);
          const double d = sq(p.r - c.r) + sq(p.g - c.g) + sq(p.b - c.b) +
                           spatial_weight * (sq(x - c.x) + sq(y - c.y));
          if (d < dist(x, y)) {
            dist(x, y) = d;
            labels(x, y) = static_cast<int>(k);
          }
        }
      }
    }
    std::fill(sums.begin(), sums.end(), Center{0, 0, 0, 0, 0});
    std::fill(counts.begin(), counts.end(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int k = labels(x, y);
        if (k < 0) continue;
        const Color& p = frame(x, y);
        sums[k].r += p.r;
        sums[k].g += p.g;
        sums[k].b += p.b;
        sums[k].x += x;
        sums[k].y += y;
        ++counts[k];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      centers[k] = {sums[k].r * inv, sums[k].g * inv, sums[k].b * inv, sums[k].x * inv,
                    sums[k].y * inv};
    }
  }

  // Pixels no window reached form their own label class; connectivity
  // enforcement absorbs them.
  const int unassigned = static_cast<int>(centers.size());
  for (auto& l : labels.values()) {
    if (l < 0) l = unassigned;
  }
  return region_map_from_ids(enforce_connectivity(labels, static_cast<int>(centers.size())));
}

RegionAdjacency region_adjacency(const RegionMap& map) {
  struct Record {
    int a, b;
    BoundaryPair pair;
  };
  std::vector<Record> records;
  const int w = map.width(), h = map.height();
  auto add = [&](PixelPos p, PixelPos q) {
    const int ip = map.ids(p.x, p.y), iq = map.ids(q.x, q.y);
    if (ip == iq) return;
    if (ip < iq) {
      records.push_back({ip, iq, {p, q}});
    } else {
      records.push_back({iq, ip, {q, p}});
    }
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) add({x, y}, {x + 1, y});
      if (y + 1 < h) add({x, y}, {x, y + 1});
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const Record& l, const Record& r) {
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });

  RegionAdjacency adj;
  adj.neighbors.resize(static_cast<std::size_t>(map.region_count));
  for (const auto& rec : records) {
    if (adj.pairs.empty() || adj.pairs.back().a != rec.a || adj.pairs.back().b != rec.b) {
      adj.pairs.push_back({rec.a, rec.b, {}});
      adj.neighbors[rec.a].push_back(rec.b);
      adj.neighbors[rec.b].push_back(rec.a);
    }
    adj.pairs.back().boundary.push_back(rec.pair);
  }
  for (auto& nb : adj.neighbors) std::sort(nb.begin(), nb.end());
  return adj;
}

RegionFeatures region_features(const Image& frame, const RegionMap& map) {
  if (!frame.same_shape(map.ids)) throw std::invalid_argument("region_features: dimension mismatch");
  RegionFeatures out(static_cast<std::size_t>(map.region_count));
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      auto& f = out[static_cast<std::size_t>(map.ids(x, y))];
      const Color& c = frame(x, y);
      f.mean_color.r += c.r;
      f.mean_color.g += c.g;
      f.mean_color.b += c.b;
      f.cx += x;
      f.cy += y;
      ++f.size;
    }
  }
  for (auto& f : out) {
    if (f.size == 0) continue;
    const double inv = 1.0 / f.size;
    f.mean_color = {f.mean_color.r * inv, f.mean_color.g * inv, f.mean_color.b * inv};
    f.cx *= inv;
    f.cy *= inv;
  }
  return out;
}

bool regions_connected(const RegionMap& map) {
  Grid<int> comp;
  std::vector<long> sizes;
  return label_components(map.ids, comp, sizes) == map.region_count;
}

}  // namespace biprop
