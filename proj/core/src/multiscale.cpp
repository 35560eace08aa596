#include "micrometric/multiscale.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "micrometric/calibration.hpp"
#include "micrometric/errors.hpp"
#include "micrometric/local_stats.hpp"
#include "micrometric/parallel.hpp"
#include "micrometric/ssim.hpp"

namespace micrometric {

std::vector<double> canonical_level_weights() {
  std::vector<double> w = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double total = 0.0;
  for (const double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

Image downsample(const Image& img) {
  if (img.height() < 2 || img.width() < 2) {
    throw std::invalid_argument("downsample requires dimensions >= 2, got " + std::to_string(img.height()) + "x" +
                                std::to_string(img.width()));
  }
  const int oh = img.height() / 2;
  const int ow = img.width() / 2;
  Image out(oh, ow);
  out.set_bit_depth(img.bit_depth());
  parallel::parallel_for(static_cast<std::size_t>(oh), [&](std::size_t rb, std::size_t re) {
    for (std::size_t r = rb; r < re; ++r) {
      const int rr = static_cast<int>(r) * 2;
      for (int c = 0; c < ow; ++c) {
        const int cc = c * 2;
        out(static_cast<int>(r), c) =
            0.25 * (img(rr, cc) + img(rr, cc + 1) + img(rr + 1, cc) + img(rr + 1, cc + 1));
      }
    }
  });
  return out;
}

namespace {

void validate_config(const MsSsimConfig& config) {
  if (config.levels < 1) throw std::invalid_argument("ms_ssim: levels must be >= 1");
  if (static_cast<int>(config.level_weights.size()) != config.levels) {
    throw std::invalid_argument("ms_ssim: expected " + std::to_string(config.levels) + " level weights, got " +
                                std::to_string(config.level_weights.size()));
  }
  double total = 0.0;
  for (const double w : config.level_weights) {
    if (!(w > 0.0)) throw std::invalid_argument("ms_ssim: level weights must be positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("ms_ssim: level weights must sum to 1, got " + std::to_string(total));
  }
}

// Mean contrast-structure product over the valid region.
double mean_cs(const StatsGrid& stats, double c2) {
  const double* vx = stats.vx.data();
  const double* vy = stats.vy.data();
  const double* vxy = stats.vxy.data();
  const double total = parallel::deterministic_sum(stats.count(), [&](std::size_t b, std::size_t e) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double v = (2.0 * vxy[i] + c2) / (vx[i] + vy[i] + c2);
      const double t = sum + v;
      if (std::fabs(sum) >= std::fabs(v)) {
        comp += (sum - t) + v;
      } else {
        comp += (v - t) + sum;
      }
      sum = t;
    }
    return sum + comp;
  });
  return total / static_cast<double>(stats.count());
}

}  // namespace

MsSsimDetail ms_ssim_detailed(const Image& x, const Image& y, const MsSsimConfig& config) {
  validate_config(config);
  const int side = config.base.window.side();

  // Reject configurations where any level is smaller than the window before
  // doing any work, naming the failing level.
  int h = x.height(), w = x.width();
  for (int level = 1; level <= config.levels; ++level) {
    if (h < side || w < side) {
      throw std::invalid_argument("ms_ssim: level " + std::to_string(level) + " is " + std::to_string(h) + "x" +
                                  std::to_string(w) + ", smaller than the " + std::to_string(side) + "-pixel window");
    }
    h /= 2;
    w /= 2;
  }

  const SsimConstants constants = resolve_constants(config.base, x);

  MsSsimDetail detail;
  Image cur_x = x;
  Image cur_y = y;
  double log_value = 0.0;
  for (int level = 1; level <= config.levels; ++level) {
    const double weight = config.level_weights[static_cast<std::size_t>(level - 1)];
    const StatsGrid stats = local_statistics(cur_x, cur_y, config.base.window, config.base.variance_mode);
    double level_mean;
    if (level == config.levels) {
      const SsimBreakdown b = mssim_from_stats(stats, constants);
      detail.last_level_ssim = b.mssim;
      level_mean = b.mssim;
    } else {
      level_mean = mean_cs(stats, constants.c2);
      detail.level_cs.push_back(level_mean);
    }
    if (level_mean < kLevelFloor) {
      level_mean = kLevelFloor;
      ++detail.floored_levels;
    }
    log_value += weight * std::log(level_mean);
    if (level < config.levels) {
      cur_x = downsample(cur_x);
      cur_y = downsample(cur_y);
    }
  }
  detail.value = std::exp(log_value);
  return detail;
}

double ms_ssim(const Image& x, const Image& y, const MsSsimConfig& config) {
  return ms_ssim_detailed(x, y, config).value;
}

double micro_ms3im(const Image& gt, const Image& pred, const DatasetCalibration& calibration,
                   const MsSsimConfig& config) {
  if (!calibration.fitted) throw InvalidState("micro_ms3im: calibration is not fitted");
  const Image x = preprocess(gt, calibration.beta_gt, calibration.max_gt);
  Image y = preprocess(pred, calibration.beta_pred, calibration.max_gt);
  for (double& v : y.pixels()) v *= calibration.alpha;

  MsSsimConfig effective = config;
  if (effective.base.data_range.kind == DataRangeKind::gt_dataset_range && !effective.base.dataset_range) {
    effective.base.dataset_range = calibration.data_range;
  }
  return ms_ssim(x, y, effective);
}

}  // namespace micrometric
