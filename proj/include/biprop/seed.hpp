#pragma once

// First-frame energies from user scribbles: Gaussian mixture color models
// for the unary costs, contrast-sensitive Potts weights for the binary
// costs, and large finite terminal costs as hard constraints.

#include <vector>

#include "biprop/core.hpp"

namespace biprop {

struct SeedConfig {
  int n_comp = 5;
  double k_hard = 1e6;
  double variance_floor = 1.0;
  int em_iters = 10;
};

/// Mixture of axis-aligned Gaussians over RGB.
struct GaussianMixture {
  std::vector<double> weights;  // positive, sum to 1
  std::vector<Color> means;
  std::vector<Color> variances;  // per channel, >= variance floor

  std::size_t size() const { return weights.size(); }
  double log_density(const Color& c) const;
};

struct ColorModels {
  GaussianMixture fg;
  GaussianMixture bg;
};

/// k-means++ seeding (fixed generator seed) followed by em_iters EM rounds.
/// When trace is given, the mean log-likelihood after every round is appended.
GaussianMixture fit_mixture(const std::vector<Color>& samples, const SeedConfig& cfg,
                            std::vector<double>* trace = nullptr);

/// Throws std::invalid_argument unless both labels are scribbled.
ColorModels fit_color_models(const Image& frame, const ScribbleMask& scribbles,
                             const SeedConfig& cfg);

/// Models fitted to explicit color samples, e.g. pooled over several frames.
ColorModels fit_color_models(const std::vector<Color>& fg_samples,
                             const std::vector<Color>& bg_samples, const SeedConfig& cfg);

/// Scribbled label per region by majority of scribbled pixels; ties and
/// unscribbled regions give kNone.
std::vector<Scribble> region_scribbles(const ScribbleMask& scribbles, const RegionMap& map);

/// Mean negative log density per region under each model, shifted by a
/// common offset to be nonnegative, then hard constraints: cost_bg = k_hard
/// on FG-scribbled regions, cost_fg = k_hard on BG-scribbled regions.
UnaryField scribble_unary(const Image& frame, const ColorModels& models,
                          const ScribbleMask& scribbles, const RegionMap& map,
                          const SeedConfig& cfg);

/// Mean color distance over all boundary pixel pairs; 1 when that is zero.
double potts_beta(const Image& frame, const RegionAdjacency& adj);

/// gamma_smooth * exp(-color_distance(mean_a, mean_b) / beta), symmetric.
BinaryField potts_binary(const Image& frame, const RegionAdjacency& adj, const RegionMap& map,
                         double gamma_smooth = 50.0);

}  // namespace biprop
