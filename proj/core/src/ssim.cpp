#include "micrometric/ssim.hpp"

#include <cmath>
#include <stdexcept>

#include "micrometric/parallel.hpp"

namespace micrometric {

SsimComponents ssim_components(const WindowStats& stats, const SsimConstants& constants) {
  const double sx = std::sqrt(stats.vx);
  const double sy = std::sqrt(stats.vy);
  SsimComponents out;
  out.luminance = (2.0 * stats.ux * stats.uy + constants.c1) / (stats.ux * stats.ux + stats.uy * stats.uy + constants.c1);
  out.contrast = (2.0 * sx * sy + constants.c2) / (stats.vx + stats.vy + constants.c2);
  out.structure = (stats.vxy + constants.c3) / (sx * sy + constants.c3);
  return out;
}

double ssim_value(const WindowStats& stats, const SsimConstants& constants) {
  return (2.0 * stats.ux * stats.uy + constants.c1) * (2.0 * stats.vxy + constants.c2) /
         ((stats.ux * stats.ux + stats.uy * stats.uy + constants.c1) * (stats.vx + stats.vy + constants.c2));
}

double SsimBreakdown::mean_luminance() const { return parallel::deterministic_mean(luminance_map); }
double SsimBreakdown::mean_contrast() const { return parallel::deterministic_mean(contrast_map); }
double SsimBreakdown::mean_structure() const { return parallel::deterministic_mean(structure_map); }

SsimBreakdown mssim_from_stats(const StatsGrid& stats, const SsimConstants& constants) {
  SsimBreakdown out;
  out.valid_height = stats.height();
  out.valid_width = stats.width();
  const std::size_t n = stats.count();
  out.luminance_map.resize(n);
  out.contrast_map.resize(n);
  out.structure_map.resize(n);
  out.ssim_map.resize(n);

  parallel::parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const WindowStats w = stats.at(i);
      const SsimComponents comp = ssim_components(w, constants);
      out.luminance_map[i] = comp.luminance;
      out.contrast_map[i] = comp.contrast;
      out.structure_map[i] = comp.structure;
      out.ssim_map[i] = ssim_value(w, constants);
    }
  });
  out.mssim = parallel::deterministic_mean(out.ssim_map);
  return out;
}

SsimBreakdown mssim(const Image& x, const Image& y, const MetricConfig& config) {
  const SsimConstants constants = resolve_constants(config, x);
  const StatsGrid stats = local_statistics(x, y, config.window, config.variance_mode);
  return mssim_from_stats(stats, constants);
}

double scaled_ssim_value(const WindowStats& s, double alpha, double c1, double c2) {
  return (2.0 * alpha * s.ux * s.uy + c1) * (2.0 * alpha * s.vxy + c2) /
         ((alpha * alpha * s.vy + s.vx + c2) * (alpha * alpha * s.uy * s.uy + s.ux * s.ux + c1));
}

double scaled_ssim_objective(const StatsSet& stats, double alpha, double c1, double c2) {
  if (stats.empty()) throw std::invalid_argument("scaled_ssim_objective: empty stats set");
  if (!(alpha > 0.0)) throw std::invalid_argument("scaled_ssim_objective: alpha must be positive");
  const double a2 = alpha * alpha;
  const double* ux = stats.ux.data();
  const double* uy = stats.uy.data();
  const double* vx = stats.vx.data();
  const double* vy = stats.vy.data();
  const double* vxy = stats.vxy.data();
  const double total = parallel::deterministic_sum(stats.size(), [&](std::size_t b, std::size_t e) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double v = (2.0 * alpha * ux[i] * uy[i] + c1) * (2.0 * alpha * vxy[i] + c2) /
                       ((a2 * vy[i] + vx[i] + c2) * (a2 * uy[i] * uy[i] + ux[i] * ux[i] + c1));
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
  return total / static_cast<double>(stats.size());
}

}  // namespace micrometric
