#pragma once

#include <vector>

#include "micrometric/image.hpp"
#include "micrometric/local_stats.hpp"
#include "micrometric/metric_config.hpp"

namespace micrometric {

struct SsimComponents {
  double luminance = 0.0;
  double contrast = 0.0;
  double structure = 0.0;
};

// Luminance, contrast and structure of one window:
//   l  = (2 ux uy + c1) / (ux^2 + uy^2 + c1)
//   c  = (2 sx sy + c2) / (sx^2 + sy^2 + c2)
//   st = (sxy + c3) / (sx sy + c3)
// With c3 = c2/2 the product equals the fused SSIM expression.
SsimComponents ssim_components(const WindowStats& stats, const SsimConstants& constants);

// Fused per-window SSIM, the two-factor form.
double ssim_value(const WindowStats& stats, const SsimConstants& constants);

// Per-window component maps over the valid region plus the aggregate mean.
struct SsimBreakdown {
  int valid_height = 0;
  int valid_width = 0;
  std::vector<double> luminance_map;
  std::vector<double> contrast_map;
  std::vector<double> structure_map;
  std::vector<double> ssim_map;
  double mssim = 0.0;

  double mean_luminance() const;
  double mean_contrast() const;
  double mean_structure() const;
};

// Windowed SSIM between x and y with full decomposition; mssim is the
// fixed-order compensated mean of the SSIM map. Throws on dimension mismatch
// or images smaller than the window.
SsimBreakdown mssim(const Image& x, const Image& y, const MetricConfig& config);

// Same, on precomputed statistics.
SsimBreakdown mssim_from_stats(const StatsGrid& stats, const SsimConstants& constants);

// Mean over a window pool of SSIM(x, alpha * y), the prediction-scaling
// objective: the y statistics enter as (alpha uy, alpha^2 vy, alpha vxy).
// With alpha = 1 this is exactly the mean of the fused SSIM expression.
double scaled_ssim_objective(const StatsSet& stats, double alpha, double c1, double c2);

// Single-window term of the objective.
double scaled_ssim_value(const WindowStats& stats, double alpha, double c1, double c2);

}  // namespace micrometric
