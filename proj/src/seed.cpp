#include "biprop/seed.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "biprop/overseg.hpp"

namespace biprop {
namespace {

constexpr std::uint32_t kSeedConstant = 0x5eed5eedu;
constexpr double kMinWeight = 1e-12;

double channel(const Color& c, int k) { return k == 0 ? c.r : (k == 1 ? c.g : c.b); }

void set_channel(Color& c, int k, double v) { (k == 0 ? c.r : (k == 1 ? c.g : c.b)) = v; }

double squared_distance(const Color& a, const Color& b) {
  const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
  return dr * dr + dg * dg + db * db;
}

double log_gaussian(const Color& c, const Color& mean, const Color& var) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = channel(c, k) - channel(mean, k);
    const double v = channel(var, k);
    s += -0.5 * (std::log(2.0 * std::numbers::pi * v) + d * d / v);
  }
  return s;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<Color> kmeanspp_centers(const std::vector<Color>& samples, int k, std::mt19937& rng) {
  std::vector<Color> centers;
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  centers.push_back(samples[pick(rng)]);
  std::vector<double> d2(samples.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, squared_distance(samples[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;  // fewer distinct colors than components
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng), acc = 0.0;
    std::size_t chosen = samples.size() - 1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      acc += d2[i];
      if (acc >= target && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(samples[chosen]);
  }
  return centers;
}

// Per-sample component log-joint values log(w_k) + log N(x | k).
void log_joint(const GaussianMixture& m, const Color& x, std::vector<double>& out) {
  out.resize(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    out[k] = std::log(m.weights[k]) + log_gaussian(x, m.means[k], m.variances[k]);
  }
}

}  // namespace

double GaussianMixture::log_density(const Color& c) const {
  std::vector<double> lj;
  log_joint(*this, c, lj);
  return log_sum_exp(lj);
}

GaussianMixture fit_mixture(const std::vector<Color>& samples, const SeedConfig& cfg,
                            std::vector<double>* trace) {
  if (samples.empty()) throw std::invalid_argument("fit_mixture: no samples");
  if (cfg.n_comp < 1 || cfg.em_iters < 1 || !(cfg.variance_floor > 0.0)) {
    throw std::invalid_argument("fit_mixture: invalid configuration");
  }
  std::mt19937 rng(kSeedConstant);
  const auto centers = kmeanspp_centers(samples, cfg.n_comp, rng);
  const std::size_t k_count = centers.size();
  const std::size_t n = samples.size();

  // Hard assignment to the nearest center initializes the mixture.
  std::vector<std::vector<double>> resp(n, std::vector<double>(k_count, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < k_count; ++k) {
      if (squared_distance(samples[i], centers[k]) < squared_distance(samples[i], centers[best])) {
        best = k;
      }
    }
    resp[i][best] = 1.0;
  }

  GaussianMixture m;
  m.weights.assign(k_count, 0.0);
  m.means.assign(k_count, Color{});
  m.variances.assign(k_count, Color{});
  auto m_step = [&] {
    for (std::size_t k = 0; k < k_count; ++k) {
      double nk = 0.0;
      Color mean{};
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i][k];
        mean.r += resp[i][k] * samples[i].r;
        mean.g += resp[i][k] * samples[i].g;
        mean.b += resp[i][k] * samples[i].b;
      }
      if (nk <= 0.0) {
        m.weights[k] = kMinWeight;
        if (m.variances[k].r == 0.0) {
          m.means[k] = centers[k];
          m.variances[k] = {cfg.variance_floor, cfg.variance_floor, cfg.variance_floor};
        }
        continue;
      }
      mean = {mean.r / nk, mean.g / nk, mean.b / nk};
      Color var{};
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = channel(samples[i], c) - channel(mean, c);
          s += resp[i][k] * d * d;
        }
        set_channel(var, c, std::max(s / nk, cfg.variance_floor));
      }
      m.weights[k] = std::max(nk / static_cast<double>(n), kMinWeight);
      m.means[k] = mean;
      m.variances[k] = var;
    }
    double total = 0.0;
    for (double w : m.weights) total += w;
    for (double& w : m.weights) w /= total;
  };

  m_step();
  std::vector<double> lj;
  for (int it = 0; it < cfg.em_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      log_joint(m, samples[i], lj);
      const double lse = log_sum_exp(lj);
      for (std::size_t k = 0; k < k_count; ++k) resp[i][k] = std::exp(lj[k] - lse);
    }
    m_step();
    if (trace) {
      double ll = 0.0;
      for (const auto& x : samples) ll += m.log_density(x);
      trace->push_back(ll / static_cast<double>(n));
    }
  }
  return m;
}

ColorModels fit_color_models(const std::vector<Color>& fg_samples,
                             const std::vector<Color>& bg_samples, const SeedConfig& cfg) {
  if (fg_samples.empty() || bg_samples.empty()) {
    throw std::invalid_argument("seed incomplete: both FG and BG scribbles are required");
  }
  return {fit_mixture(fg_samples, cfg), fit_mixture(bg_samples, cfg)};
}

ColorModels fit_color_models(const Image& frame, const ScribbleMask& scribbles,
                             const SeedConfig& cfg) {
  if (!frame.same_shape(scribbles)) {
    throw std::invalid_argument("scribble mask does not match the frame");
  }
  std::vector<Color> fg, bg;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (scribbles[i] == Scribble::kForeground) fg.push_back(frame[i]);
    if (scribbles[i] == Scribble::kBackground) bg.push_back(frame[i]);
  }
  return fit_color_models(fg, bg, cfg);
}

std::vector<Scribble> region_scribbles(const ScribbleMask& scribbles, const RegionMap& map) {
  if (!scribbles.same_shape(map.ids)) {
    throw std::invalid_argument("scribble mask does not match the region map");
  }
  std::vector<int> votes(static_cast<std::size_t>(map.region_count), 0);  // fg - bg
  for (std::size_t i = 0; i < scribbles.size(); ++i) {
    const auto r = static_cast<std::size_t>(map.ids[i]);
    if (scribbles[i] == Scribble::kForeground) ++votes[r];
    if (scribbles[i] == Scribble::kBackground) --votes[r];
  }
  std::vector<Scribble> out(votes.size(), Scribble::kNone);
  for (std::size_t r = 0; r < votes.size(); ++r) {
    if (votes[r] > 0) out[r] = Scribble::kForeground;
    if (votes[r] < 0) out[r] = Scribble::kBackground;
  }
  return out;
}

UnaryField scribble_unary(const Image& frame, const ColorModels& models,
                          const ScribbleMask& scribbles, const RegionMap& map,
                          const SeedConfig& cfg) {
  if (!frame.same_shape(map.ids)) throw std::invalid_argument("frame does not match region map");
  const auto regions = static_cast<std::size_t>(map.region_count);
  UnaryField u(regions);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    auto& c = u[static_cast<std::size_t>(map.ids[i])];
    c.fg -= models.fg.log_density(frame[i]);
    c.bg -= models.bg.log_density(frame[i]);
  }
  double offset = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < regions; ++r) {
    const double size = static_cast<double>(map.sizes[r]);
    u[r].fg /= size;
    u[r].bg /= size;
    offset = std::min({offset, u[r].fg, u[r].bg});
  }
  for (auto& c : u) {
    c.fg -= offset;
    c.bg -= offset;
  }
  const auto marks = region_scribbles(scribbles, map);
  for (std::size_t r = 0; r < regions; ++r) {
    if (marks[r] == Scribble::kForeground) u[r].bg = cfg.k_hard;
    if (marks[r] == Scribble::kBackground) u[r].fg = cfg.k_hard;
  }
  return u;
}

double potts_beta(const Image& frame, const RegionAdjacency& adj) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& pair : adj.pairs) {
    for (const auto& bp : pair.boundary) {
      sum += color_distance(frame(bp.p.x, bp.p.y), frame(bp.q.x, bp.q.y));
      ++count;
    }
  }
  const double beta = count ? sum / static_cast<double>(count) : 0.0;
  return beta > 0.0 ? beta : 1.0;
}

BinaryField potts_binary(const Image& frame, const RegionAdjacency& adj, const RegionMap& map,
                         double gamma_smooth) {
  if (!(gamma_smooth > 0.0)) throw std::invalid_argument("gamma_smooth must be positive");
  const auto features = region_features(frame, map);
  const double beta = potts_beta(frame, adj);
  BinaryField out(adj.pairs.size());
  for (std::size_t k = 0; k < adj.pairs.size(); ++k) {
    const auto& pr = adj.pairs[k];
    const double d = color_distance(features[static_cast<std::size_t>(pr.a)].mean_color,
                                    features[static_cast<std::size_t>(pr.b)].mean_color);
    const double w = gamma_smooth * std::exp(-d / beta);
    out[k] = {w, w};
  }
  return out;
}

}  // namespace biprop
