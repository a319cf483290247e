#include "biprop/core.hpp"

#include <algorithm>
#include <cmath>

namespace biprop {

double color_distance(const Color& a, const Color& b) {
  return std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b);
}

Color midpoint(const Color& a, const Color& b) {
  return {0.5 * (a.r + b.r), 0.5 * (a.g + b.g), 0.5 * (a.b + b.b)};
}

void FrameSequence::validate() const {
  if (frames.empty()) throw std::invalid_argument("frame sequence is empty");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw std::invalid_argument("mixed dimensions");
  }
}

Label flip(Label l) {
  return l == Label::kForeground ? Label::kBackground : Label::kForeground;
}

RegionMap identity_region_map(int width, int height) {
  RegionMap map;
  map.ids = Grid<int>(width, height);
  for (std::size_t i = 0; i < map.ids.size(); ++i) map.ids[i] = static_cast<int>(i);
  map.region_count = static_cast<int>(map.ids.size());
  map.sizes.assign(map.ids.size(), 1);
  return map;
}

RegionMap region_map_from_ids(Grid<int> ids) {
  RegionMap map;
  int max_id = -1;
  for (int id : ids.values()) {
    if (id < 0) throw std::invalid_argument("negative region id");
    max_id = std::max(max_id, id);
  }
  map.region_count = max_id + 1;
  map.sizes.assign(static_cast<std::size_t>(map.region_count), 0);
  for (int id : ids.values()) ++map.sizes[static_cast<std::size_t>(id)];
  for (int s : map.sizes) {
    if (s == 0) throw std::invalid_argument("region ids are not contiguous");
  }
  map.ids = std::move(ids);
  return map;
}

long RegionAdjacency::pair_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair{a, b},
                             [](const RegionPair& p, const std::pair<int, int>& key) {
                               return std::pair{p.a, p.b} < key;
                             });
  if (it == pairs.end() || it->a != a || it->b != b) return -1;
  return it - pairs.begin();
}

double energy_of(const Labeling& labeling, const UnaryField& unary, const BinaryField& binary,
                 const RegionAdjacency& adjacency) {
  if (labeling.size() != unary.size() || binary.size() != adjacency.pairs.size() ||
      (adjacency.region_count() != 0 && adjacency.region_count() != labeling.size())) {
    throw std::invalid_argument("energy_of: mismatched node sets");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    e += labeling[i] == Label::kForeground ? unary[i].fg : unary[i].bg;
  }
  for (std::size_t k = 0; k < binary.size(); ++k) {
    const auto& pr = adjacency.pairs[k];
    const Label la = labeling[static_cast<std::size_t>(pr.a)];
    const Label lb = labeling[static_cast<std::size_t>(pr.b)];
    if (la == Label::kForeground && lb == Label::kBackground) e += binary[k].forward;
    if (la == Label::kBackground && lb == Label::kForeground) e += binary[k].backward;
  }
  return e;
}

}  // namespace biprop
