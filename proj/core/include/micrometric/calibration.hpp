#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "micrometric/image.hpp"
#include "micrometric/local_stats.hpp"
#include "micrometric/metric_config.hpp"
#include "micrometric/ssim.hpp"

namespace micrometric {

// Dataset-level transform learned once per (ground truth, prediction) set:
// background offsets from a pooled percentile, the ground-truth maximum for
// downscaling, and the scalar alpha maximizing the mean SSIM objective.
struct DatasetCalibration {
  double beta_gt = 0.0;
  double beta_pred = 0.0;
  double max_gt = 0.0;
  double alpha = 1.0;
  double percentile = 3.0;
  bool fitted = false;

  // Fit context, persisted so scoring reproduces the fit's constants.
  double data_range = 0.0;  // gamma of the preprocessed ground truth
  double k1 = 0.01;
  double k2 = 0.03;
  WindowKind window_kind = WindowKind::gaussian;
  int window_side = 11;
  double window_sigma = 1.5;
  std::string input_digest;  // FNV-1a over the pooled inputs
  std::string tool_version;

  // Window/constants implied by the stored context.
  MetricConfig metric_config() const;
};

struct FitReport {
  double alpha = 0.0;
  double objective_at_alpha = 0.0;
  double closed_form_seed = 0.0;
  int iterations = 0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  double derivative_at_alpha = 0.0;
  bool boundary_warning = false;
};

// Exact nearest-rank percentile of all pixels pooled across the collection.
double estimate_offset(std::span<const Image> images, double percentile);

// Global maximum over the collection.
double estimate_max(std::span<const Image> gt_images);

// Per-pixel (v - offset) / scale.
Image preprocess(const Image& img, double offset, double scale);

// Closed-form argmax of the c1 = c2 = 0 objective for one window:
// sqrt((sx * ux) / (sy * uy)). Requires strictly positive means, variances
// and covariance; throws ClosedFormUndefined otherwise.
double closed_form_alpha(const WindowStats& stats);

// Derivative of the single-window objective with respect to alpha, the
// four-term expression evaluated literally.
double ssim_alpha_derivative(const WindowStats& stats, double alpha, double c1, double c2);

// Mean derivative over a window pool.
double objective_derivative(const StatsSet& stats, double alpha, double c1, double c2);

struct CalibrationOptions {
  double bracket_low = 1e-3;
  double bracket_high = 1e3;
  // Every stride-th window position feeds the pooled fit; 0 picks the
  // smallest stride keeping the pool under ~2M windows.
  int stats_stride = 0;
};

// Maximizes the mean objective over [low, high]: closed-form median seed,
// golden-section refinement to a 1e-6-relative bracket, then a derivative
// bisection polish inside the final bracket. The report certifies local
// optimality.
FitReport fit_alpha(const StatsSet& stats, double c1, double c2, double low = 1e-3, double high = 1e3);

struct CalibrationResult {
  DatasetCalibration calibration;
  FitReport fit;
};

// Full dataset-level fit: offsets, max, preprocessed window statistics,
// alpha. Collections must be equal length, non-empty, pairwise matching in
// dimensions.
CalibrationResult calibrate(std::span<const Image> gt_set, std::span<const Image> pred_set,
                            const MetricConfig& config, double percentile = 3.0,
                            const CalibrationOptions& options = {});

// SSIM of the calibrated operands:
//   mssim((gt - beta_gt)/max_gt, alpha * (pred - beta_pred)/max_gt)
// with gamma taken from the calibration unless the config overrides it.
SsimBreakdown micro_ssim(const Image& gt, const Image& pred, const DatasetCalibration& calibration,
                         const MetricConfig& config);

// Convenience form using the window and constants stored at fit time.
SsimBreakdown micro_ssim(const Image& gt, const Image& pred, const DatasetCalibration& calibration);

// Flat key-value text serialization; doubles carry 17 significant digits so
// the file round-trips bit-exactly.
std::string serialize_calibration(const DatasetCalibration& calibration);
DatasetCalibration parse_calibration(const std::string& text);
void save_calibration(const DatasetCalibration& calibration, const std::filesystem::path& path);
DatasetCalibration load_calibration(const std::filesystem::path& path);

// Digest used to tie reports to the calibration inputs.
std::string pooled_input_digest(std::span<const Image> gt_set, std::span<const Image> pred_set, double percentile);

}  // namespace micrometric
