#pragma once

#include <utility>

#include "micrometric/image.hpp"
#include "micrometric/metric_config.hpp"
#include "micrometric/ssim.hpp"

namespace micrometric {

// Least-squares intensity transform scale * pred + offset ~ gt.
struct AffineFit {
  double scale = 0.0;
  double offset = 0.0;
  double residual_mse = 0.0;
};

// Closed-form normal-equations solution; throws std::invalid_argument when
// the prediction is constant.
AffineFit fit_affine_mse(const Image& gt, const Image& pred);

// SSIM on the raw, untransformed pair.
double vanilla_ssim(const Image& gt, const Image& pred, const MetricConfig& config);
SsimBreakdown vanilla_ssim_breakdown(const Image& gt, const Image& pred, const MetricConfig& config);

// Each image standardized by its own mean and standard deviation, gamma
// resolved on the standardized ground truth (explicit policies are honored).
// Throws when either image has zero standard deviation.
double zscore_ssim(const Image& gt, const Image& pred, const MetricConfig& config);
SsimBreakdown zscore_ssim_breakdown(const Image& gt, const Image& pred, const MetricConfig& config);

struct CareOptions {
  // Convert both images to zero mean and fit only the multiplicative scalar.
  bool zero_mean_scalar = false;
};

// Per-pair MSE-fit rescaling of the prediction, then SSIM against the raw
// ground truth.
std::pair<double, AffineFit> care_ssim(const Image& gt, const Image& pred, const MetricConfig& config,
                                       const CareOptions& options = {});
std::pair<SsimBreakdown, AffineFit> care_ssim_breakdown(const Image& gt, const Image& pred,
                                                        const MetricConfig& config, const CareOptions& options = {});

}  // namespace micrometric
