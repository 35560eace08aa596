#include "micrometric/metric_config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace micrometric {

SsimConstants constants_for_range(double gamma, double k1, double k2) {
  if (!(gamma > 0.0)) throw std::invalid_argument("data range gamma must be positive, got " + std::to_string(gamma));
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("k1 and k2 must be positive");
  SsimConstants c;
  c.gamma = gamma;
  c.c1 = (k1 * gamma) * (k1 * gamma);
  c.c2 = (k2 * gamma) * (k2 * gamma);
  c.c3 = c.c2 / 2.0;
  return c;
}

SsimConstants resolve_constants(const MetricConfig& config, const Image& gt) {
  double gamma = 0.0;
  switch (config.data_range.kind) {
    case DataRangeKind::explicit_value:
      gamma = config.data_range.value;
      break;
    case DataRangeKind::gt_image_range:
      gamma = gt.max_value() - gt.min_value();
      if (!(gamma > 0.0)) throw std::invalid_argument("gt_image_range: ground-truth image is constant");
      break;
    case DataRangeKind::gt_dataset_range:
      if (!config.dataset_range.has_value()) {
        throw std::invalid_argument("gt_dataset_range requires MetricConfig::dataset_range to be set");
      }
      gamma = *config.dataset_range;
      break;
    case DataRangeKind::dtype_range: {
      // Integer detector data tops out at 16 bits; float sources record 32
      // and have no dtype range.
      const int bits = config.data_range.bit_depth > 0 ? config.data_range.bit_depth : gt.bit_depth();
      if (bits <= 0 || bits > 16) {
        throw std::invalid_argument("dtype_range: no usable integer bit depth (stated or recorded)");
      }
      gamma = std::ldexp(1.0, bits) - 1.0;
      break;
    }
  }
  return constants_for_range(gamma, config.k1, config.k2);
}

}  // namespace micrometric
