#pragma once

#include <vector>

#include "micrometric/image.hpp"
#include "micrometric/metric_config.hpp"

namespace micrometric {

struct DatasetCalibration;

// The canonical MS-SSIM exponents (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
// sum to 1.0001 as published; they are normalized here so the weights sum to
// exactly one.
std::vector<double> canonical_level_weights();

struct MsSsimConfig {
  MetricConfig base;
  int levels = 5;
  // Positive, must sum to 1 and match `levels`.
  std::vector<double> level_weights = canonical_level_weights();
};

// 2x2 average pooling followed by factor-2 decimation; a trailing odd row or
// column is dropped. Requires both dimensions >= 2.
Image downsample(const Image& img);

// Multiscale SSIM: the mean contrast-structure product at every level but the
// last, the full SSIM mean at the last, combined as
//   prod_j mcs_j^{w_j} * mssim_L^{w_L}.
// Negative level means are floored at kLevelFloor before exponentiation.
double ms_ssim(const Image& x, const Image& y, const MsSsimConfig& config);

inline constexpr double kLevelFloor = 1e-6;

struct MsSsimDetail {
  double value = 0.0;
  std::vector<double> level_cs;  // mean CS product, levels 1..L-1
  double last_level_ssim = 0.0;
  int floored_levels = 0;
};

MsSsimDetail ms_ssim_detailed(const Image& x, const Image& y, const MsSsimConfig& config);

// MS-SSIM on the calibrated operands:
//   ms_ssim((gt - beta_gt)/max_gt, alpha * (pred - beta_pred)/max_gt).
double micro_ms3im(const Image& gt, const Image& pred, const DatasetCalibration& calibration,
                   const MsSsimConfig& config);

}  // namespace micrometric
