#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "micrometric/calibration.hpp"
#include "micrometric/image.hpp"
#include "micrometric/local_stats.hpp"
#include "micrometric/metric_config.hpp"

namespace micrometric {

// Every SSIM component has the shape (a + c_i) / (b + c_i). The saturation
// factor Delta = min(|c_i / a|, |c_i / b|) measures how far the stabilizer
// dominates the data terms; per component:
//   luminance: a = 2 ux uy,   b = ux^2 + uy^2
//   contrast:  a = 2 sx sy,   b = sx^2 + sy^2
//   structure: a = sxy,       b = sx sy
// |a| and |b| are floored at kSaturationFloor before dividing; floored
// windows are counted as clamped.
inline constexpr double kSaturationFloor = 1e-30;

struct SaturationMaps {
  int height = 0;
  int width = 0;
  std::vector<double> luminance;
  std::vector<double> contrast;
  std::vector<double> structure;
  std::size_t clamped_luminance = 0;
  std::size_t clamped_contrast = 0;
  std::size_t clamped_structure = 0;
};

SaturationMaps saturation_map(const StatsGrid& stats, const SsimConstants& constants);

struct ComponentSaturation {
  double mean_delta = 0.0;
  double std_delta = 0.0;
  std::size_t clamped_windows = 0;
};

struct ImageSaturation {
  double luminance = 0.0;
  double contrast = 0.0;
  double structure = 0.0;
};

// Mean and (population) standard deviation over the per-image mean Delta,
// per component. With a calibration the statistics come from the calibrated
// operands, i.e. the same preprocessing that MicroSSIM scores.
struct SaturationReport {
  ComponentSaturation luminance;
  ComponentSaturation contrast;
  ComponentSaturation structure;
  std::size_t total_windows = 0;
  std::vector<ImageSaturation> per_image;
};

SaturationReport saturation_report(std::span<const Image> gt_set, std::span<const Image> pred_set,
                                   const MetricConfig& config, const DatasetCalibration* calibration = nullptr);

}  // namespace micrometric
