#include "micrometric/saturation.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "micrometric/errors.hpp"
#include "micrometric/parallel.hpp"

namespace micrometric {

namespace {

inline double delta_of(double c, double a, double b, bool* clamped) {
  double abs_a = std::fabs(a);
  double abs_b = std::fabs(b);
  if (abs_a < kSaturationFloor || abs_b < kSaturationFloor) {
    *clamped = true;
    abs_a = std::max(abs_a, kSaturationFloor);
    abs_b = std::max(abs_b, kSaturationFloor);
  }
  return std::min(c / abs_a, c / abs_b);
}

}  // namespace

SaturationMaps saturation_map(const StatsGrid& stats, const SsimConstants& constants) {
  if (stats.count() == 0) throw std::invalid_argument("saturation_map: empty stats grid");
  SaturationMaps maps;
  maps.height = stats.height();
  maps.width = stats.width();
  const std::size_t n = stats.count();
  maps.luminance.resize(n);
  maps.contrast.resize(n);
  maps.structure.resize(n);

  std::atomic<std::size_t> clamped_l{0}, clamped_c{0}, clamped_s{0};
  parallel::parallel_for(n, [&](std::size_t b, std::size_t e) {
    std::size_t cl = 0, cc = 0, cs = 0;
    for (std::size_t i = b; i < e; ++i) {
      const WindowStats w = stats.at(i);
      const double sx = std::sqrt(w.vx);
      const double sy = std::sqrt(w.vy);
      bool fl = false, fc = false, fs = false;
      maps.luminance[i] = delta_of(constants.c1, 2.0 * w.ux * w.uy, w.ux * w.ux + w.uy * w.uy, &fl);
      maps.contrast[i] = delta_of(constants.c2, 2.0 * sx * sy, w.vx + w.vy, &fc);
      maps.structure[i] = delta_of(constants.c3, w.vxy, sx * sy, &fs);
      cl += fl;
      cc += fc;
      cs += fs;
    }
    clamped_l += cl;
    clamped_c += cc;
    clamped_s += cs;
  });
  maps.clamped_luminance = clamped_l.load();
  maps.clamped_contrast = clamped_c.load();
  maps.clamped_structure = clamped_s.load();
  return maps;
}

SaturationReport saturation_report(std::span<const Image> gt_set, std::span<const Image> pred_set,
                                   const MetricConfig& config, const DatasetCalibration* calibration) {
  if (gt_set.empty() || gt_set.size() != pred_set.size()) {
    throw std::invalid_argument("saturation_report: collections must be non-empty and matched");
  }
  if (calibration != nullptr && !calibration->fitted) {
    throw InvalidState("saturation_report: calibration is not fitted");
  }

  SaturationReport report;
  report.per_image.reserve(gt_set.size());
  std::size_t clamped_l = 0, clamped_c = 0, clamped_s = 0;
  for (std::size_t i = 0; i < gt_set.size(); ++i) {
    SsimConstants constants;
    StatsGrid stats;
    if (calibration != nullptr) {
      const Image x = preprocess(gt_set[i], calibration->beta_gt, calibration->max_gt);
      Image y = preprocess(pred_set[i], calibration->beta_pred, calibration->max_gt);
      for (double& v : y.pixels()) v *= calibration->alpha;
      MetricConfig effective = config;
      if (effective.data_range.kind == DataRangeKind::gt_dataset_range && !effective.dataset_range) {
        effective.dataset_range = calibration->data_range;
      }
      constants = resolve_constants(effective, x);
      stats = local_statistics(x, y, effective.window, effective.variance_mode);
    } else {
      constants = resolve_constants(config, gt_set[i]);
      stats = local_statistics(gt_set[i], pred_set[i], config.window, config.variance_mode);
    }
    const SaturationMaps maps = saturation_map(stats, constants);
    report.per_image.push_back({parallel::deterministic_mean(maps.luminance),
                                parallel::deterministic_mean(maps.contrast),
                                parallel::deterministic_mean(maps.structure)});
    report.total_windows += stats.count();
    clamped_l += maps.clamped_luminance;
    clamped_c += maps.clamped_contrast;
    clamped_s += maps.clamped_structure;
  }

  auto summarize = [&](auto member) {
    ComponentSaturation out;
    const double n = static_cast<double>(report.per_image.size());
    double mean = 0.0;
    for (const ImageSaturation& s : report.per_image) mean += s.*member;
    mean /= n;
    double var = 0.0;
    for (const ImageSaturation& s : report.per_image) {
      const double d = s.*member - mean;
      var += d * d;
    }
    out.mean_delta = mean;
    out.std_delta = std::sqrt(var / n);
    return out;
  };
  report.luminance = summarize(&ImageSaturation::luminance);
  report.contrast = summarize(&ImageSaturation::contrast);
  report.structure = summarize(&ImageSaturation::structure);
  report.luminance.clamped_windows = clamped_l;
  report.contrast.clamped_windows = clamped_c;
  report.structure.clamped_windows = clamped_s;
  return report;
}

}  // namespace micrometric
