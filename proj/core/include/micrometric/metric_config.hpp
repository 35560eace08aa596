#pragma once

#include <optional>
#include <string>

#include "micrometric/image.hpp"
#include "micrometric/window.hpp"

namespace micrometric {

// How the data range gamma, and through it the stabilizer constants
// c1 = (k1*gamma)^2, c2 = (k2*gamma)^2, c3 = c2/2, are resolved.
enum class DataRangeKind {
  explicit_value,   // gamma given directly
  gt_image_range,   // max - min of the ground-truth image of the pair
  gt_dataset_range, // max - min pooled over the ground-truth set
  dtype_range,      // 2^bits - 1 from a stated or recorded bit depth
};

struct DataRangePolicy {
  DataRangeKind kind = DataRangeKind::gt_image_range;
  double value = 0.0;  // explicit_value
  int bit_depth = 0;   // dtype_range; 0 = take the image's recorded depth

  static DataRangePolicy explicit_range(double gamma) {
    return {DataRangeKind::explicit_value, gamma, 0};
  }
  static DataRangePolicy image_range() { return {DataRangeKind::gt_image_range, 0.0, 0}; }
  static DataRangePolicy dataset_range() { return {DataRangeKind::gt_dataset_range, 0.0, 0}; }
  static DataRangePolicy dtype(int bits = 0) { return {DataRangeKind::dtype_range, 0.0, bits}; }
};

// Weighted-window variance uses the plain weighted second moment by default.
// `sample` applies the K/(K-1) correction and is only defined for uniform
// windows.
enum class VarianceMode { population, sample };

struct MetricConfig {
  Window window = make_window(WindowKind::gaussian, 11, 1.5);
  double k1 = 0.01;
  double k2 = 0.03;
  DataRangePolicy data_range = DataRangePolicy::image_range();
  VarianceMode variance_mode = VarianceMode::population;

  // Pooled ground-truth range, filled in by dataset-level callers; required
  // when data_range.kind == gt_dataset_range.
  std::optional<double> dataset_range;
};

// Resolved stabilizers for one comparison.
struct SsimConstants {
  double gamma = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

SsimConstants constants_for_range(double gamma, double k1, double k2);

// Resolves gamma against the policy (using `gt` for image-range and recorded
// bit depth) and derives the constants. Throws std::invalid_argument when the
// policy cannot be resolved or gamma is not positive.
SsimConstants resolve_constants(const MetricConfig& config, const Image& gt);

}  // namespace micrometric
