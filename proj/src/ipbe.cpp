#include "biprop/ipbe.hpp"

#include <algorithm>
#include <cmath>

namespace biprop {
namespace {

void check_lambda(const PermeabilityParams& p) {
  if (!(p.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
}

// Dual scan over blocks laid out as data[(o * along + a) * inner + i] with
// perms[(o * (along - 1) + a) * inner + i] linking a and a + 1.
void scan_blocks(double* data, std::size_t outer, std::size_t along, std::size_t inner,
                 const double* perms, std::vector<double>& fwd, std::vector<double>& bwd) {
  if (along == 0 || inner == 0) return;
  fwd.resize(along * inner);
  bwd.resize(inner);
  for (std::size_t o = 0; o < outer; ++o) {
    double* base = data + o * along * inner;
    const double* pb = perms + o * (along - 1) * inner;
    std::copy(base, base + inner, fwd.begin());
    for (std::size_t a = 1; a < along; ++a) {
      const double* x = base + a * inner;
      const double* prev = fwd.data() + (a - 1) * inner;
      const double* pr = pb + (a - 1) * inner;
      double* f = fwd.data() + a * inner;
      for (std::size_t i = 0; i < inner; ++i) f[i] = x[i] + prev[i] * pr[i];
    }
    double* last = base + (along - 1) * inner;
    const double* flast = fwd.data() + (along - 1) * inner;
    for (std::size_t i = 0; i < inner; ++i) {
      bwd[i] = last[i];
      last[i] = flast[i] + bwd[i];
    }
    for (std::size_t a = along - 1; a-- > 0;) {
      double* x = base + a * inner;
      const double* f = fwd.data() + a * inner;
      const double* pr = pb + a * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        bwd[i] = x[i] + bwd[i] * pr[i];
        x[i] = f[i] + bwd[i];
      }
    }
  }
}

void check_planes(std::span<const Plane> sources, const Plane* source_mass, const Image& prev,
                  const Image& cur) {
  if (!prev.same_shape(cur)) throw std::invalid_argument("cross_filter: guide shape mismatch");
  for (const auto& s : sources) {
    if (!s.same_shape(prev)) throw std::invalid_argument("cross_filter: plane shape mismatch");
  }
  if (source_mass && !source_mass->same_shape(prev)) {
    throw std::invalid_argument("cross_filter: mass shape mismatch");
  }
}

}  // namespace

double permeability(const Color& a, const Color& b, const PermeabilityParams& p) {
  return std::exp(-color_distance(a, b) / p.lambda);
}

std::vector<double> scan_1d(std::span<const double> values, std::span<const double> perms) {
  if (values.empty() || perms.size() + 1 != values.size()) {
    throw std::invalid_argument("scan_1d: perms must have length N - 1");
  }
  std::vector<double> out(values.begin(), values.end());
  std::vector<double> fwd, bwd;
  scan_blocks(out.data(), 1, out.size(), 1, perms.data(), fwd, bwd);
  return out;
}

CrossFilterState::CrossFilterState(std::vector<const Image*> guides, int channels)
    : guides_(std::move(guides)), channels_(channels) {
  if (guides_.empty() || channels < 0) throw std::invalid_argument("CrossFilterState: bad window");
  width_ = guides_.front()->width();
  height_ = guides_.front()->height();
  for (const Image* g : guides_) {
    if (!g->same_shape(*guides_.front())) {
      throw std::invalid_argument("CrossFilterState: guide shape mismatch");
    }
  }
  values_.assign(static_cast<std::size_t>(channels_) * guides_.size() * plane_size(), 0.0);
  masses_.assign(guides_.size() * plane_size(), 0.0);
}

std::span<double> CrossFilterState::values(int channel, int frame) {
  const std::size_t off = (static_cast<std::size_t>(channel) * guides_.size() + frame) * plane_size();
  return {values_.data() + off, plane_size()};
}

std::span<const double> CrossFilterState::values(int channel, int frame) const {
  const std::size_t off = (static_cast<std::size_t>(channel) * guides_.size() + frame) * plane_size();
  return {values_.data() + off, plane_size()};
}

std::span<double> CrossFilterState::masses(int frame) {
  return {masses_.data() + static_cast<std::size_t>(frame) * plane_size(), plane_size()};
}

std::span<const double> CrossFilterState::masses(int frame) const {
  return {masses_.data() + static_cast<std::size_t>(frame) * plane_size(), plane_size()};
}

const std::vector<double>& CrossFilterState::perms(Axis axis, const PermeabilityParams& p) const {
  const auto slot = static_cast<std::size_t>(axis);
  if (perm_lambda_[slot] == p.lambda && !perm_cache_[slot].empty()) return perm_cache_[slot];
  auto& out = perm_cache_[slot];
  out.clear();
  const int w = width_, h = height_, d = depth();
  switch (axis) {
    case Axis::kHorizontal:
      out.reserve(static_cast<std::size_t>(d) * h * std::max(w - 1, 0));
      for (int t = 0; t < d; ++t) {
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x + 1 < w; ++x) out.push_back(permeability(guide(t)(x, y), guide(t)(x + 1, y), p));
        }
      }
      break;
    case Axis::kVertical:
      out.reserve(static_cast<std::size_t>(d) * std::max(h - 1, 0) * w);
      for (int t = 0; t < d; ++t) {
        for (int y = 0; y + 1 < h; ++y) {
          for (int x = 0; x < w; ++x) out.push_back(permeability(guide(t)(x, y), guide(t)(x, y + 1), p));
        }
      }
      break;
    case Axis::kTemporal:
      out.reserve(static_cast<std::size_t>(std::max(d - 1, 0)) * plane_size());
      for (int t = 0; t + 1 < d; ++t) {
        for (std::size_t i = 0; i < plane_size(); ++i) {
          out.push_back(permeability(guide(t)[i], guide(t + 1)[i], p));
        }
      }
      break;
  }
  perm_lambda_[slot] = p.lambda;
  return out;
}

void filter_pass(CrossFilterState& state, Axis axis, const PermeabilityParams& p) {
  check_lambda(p);
  const std::size_t w = static_cast<std::size_t>(state.width());
  const std::size_t h = static_cast<std::size_t>(state.height());
  const std::size_t d = static_cast<std::size_t>(state.depth());
  if (w == 0 || h == 0) return;
  const std::vector<double>& perms = state.perms(axis, p);
  std::vector<double> fwd, bwd;

  // Each channel's volume (and the mass volume) is contiguous [frame][y][x].
  auto scan_volume = [&](double* vol) {
    switch (axis) {
      case Axis::kHorizontal: scan_blocks(vol, d * h, w, 1, perms.data(), fwd, bwd); break;
      case Axis::kVertical: scan_blocks(vol, d, h, w, perms.data(), fwd, bwd); break;
      case Axis::kTemporal: scan_blocks(vol, 1, d, w * h, perms.data(), fwd, bwd); break;
    }
  };
  for (int c = 0; c < state.channels(); ++c) scan_volume(state.values(c, 0).data());
  scan_volume(state.masses(0).data());
}

std::vector<Plane> cross_filter(std::span<const Plane> sources, const Plane* source_mass,
                                const Image& guide_prev, const Image& guide_cur,
                                const PermeabilityParams& p, const PassObserver& observer) {
  check_lambda(p);
  check_planes(sources, source_mass, guide_prev, guide_cur);
  const int channels = static_cast<int>(sources.size());
  const int w = guide_prev.width(), h = guide_prev.height();

  CrossFilterState initial({&guide_prev, &guide_cur}, channels);
  for (int c = 0; c < channels; ++c) {
    std::ranges::copy(sources[static_cast<std::size_t>(c)].values(), initial.values(c, 0).begin());
  }
  if (source_mass) {
    std::ranges::copy(source_mass->values(), initial.masses(0).begin());
  } else {
    std::ranges::fill(initial.masses(0), 1.0);
  }

  static constexpr std::array<std::array<Axis, 3>, 2> kOrders{{
      {Axis::kHorizontal, Axis::kVertical, Axis::kTemporal},
      {Axis::kVertical, Axis::kHorizontal, Axis::kTemporal},
  }};

  std::vector<Plane> out(static_cast<std::size_t>(channels), Plane(w, h));
  for (int order = 0; order < 2; ++order) {
    CrossFilterState state = initial;
    for (Axis axis : kOrders[static_cast<std::size_t>(order)]) {
      filter_pass(state, axis, p);
      if (observer) observer(order, axis, state);
    }
    const auto mass = state.masses(1);
    for (int c = 0; c < channels; ++c) {
      const auto vals = state.values(c, 1);
      auto& dst = out[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += 0.5 * vals[i] / std::max(mass[i], kMassEpsilon);
      }
    }
  }
  return out;
}

Plane cross_filter(const Plane& source, const Image& guide_prev, const Image& guide_cur,
                   const PermeabilityParams& p) {
  return std::move(cross_filter(std::span(&source, 1), nullptr, guide_prev, guide_cur, p).front());
}

std::vector<Plane> oracle_cross_filter(std::span<const Plane> sources, const Plane* source_mass,
                                       const Image& guide_prev, const Image& guide_cur,
                                       const PermeabilityParams& p) {
  check_lambda(p);
  check_planes(sources, source_mass, guide_prev, guide_cur);
  const int w = guide_prev.width(), h = guide_prev.height();

  // One-dimensional dual-scan weight between coordinates a and b of a line.
  auto row_weight = [&](int y, int a, int b) {
    if (a == b) return 2.0;
    double prod = 1.0;
    for (int x = std::min(a, b); x < std::max(a, b); ++x) {
      prod *= permeability(guide_prev(x, y), guide_prev(x + 1, y), p);
    }
    return prod;
  };
  auto col_weight = [&](int x, int a, int b) {
    if (a == b) return 2.0;
    double prod = 1.0;
    for (int y = std::min(a, b); y < std::max(a, b); ++y) {
      prod *= permeability(guide_prev(x, y), guide_prev(x, y + 1), p);
    }
    return prod;
  };

  std::vector<Plane> out(sources.size(), Plane(w, h));
  std::vector<double> num(sources.size());
  for (int order = 0; order < 2; ++order) {
    for (int yq = 0; yq < h; ++yq) {
      for (int xq = 0; xq < w; ++xq) {
        const double wt = permeability(guide_prev(xq, yq), guide_cur(xq, yq), p);
        std::ranges::fill(num, 0.0);
        double den = 0.0;
        for (int ys = 0; ys < h; ++ys) {
          for (int xs = 0; xs < w; ++xs) {
            // (H, V, T): along row ys to column xq, then down column xq.
            // (V, H, T): along column xs to row yq, then across row yq.
            const double ws = order == 0 ? row_weight(ys, xs, xq) * col_weight(xq, ys, yq)
                                         : col_weight(xs, ys, yq) * row_weight(yq, xs, xq);
            const double weight = wt * ws;
            for (std::size_t c = 0; c < sources.size(); ++c) num[c] += weight * sources[c](xs, ys);
            den += weight * (source_mass ? (*source_mass)(xs, ys) : 1.0);
          }
        }
        for (std::size_t c = 0; c < sources.size(); ++c) {
          out[c](xq, yq) += 0.5 * num[c] / std::max(den, kMassEpsilon);
        }
      }
    }
  }
  return out;
}

Plane oracle_cross_filter(const Plane& source, const Image& guide_prev, const Image& guide_cur,
                          const PermeabilityParams& p) {
  return std::move(oracle_cross_filter(std::span(&source, 1), nullptr, guide_prev, guide_cur, p).front());
}

}  // namespace biprop
