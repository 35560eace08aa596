#include "micrometric/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "micrometric/parallel.hpp"

namespace micrometric {

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population
};

Moments image_moments(const Image& img) {
  Moments m;
  m.mean = img.mean_value();
  const double* p = img.data();
  const double mean = m.mean;
  const double ss = parallel::deterministic_sum(img.size(), [&](std::size_t b, std::size_t e) {
    double sum = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double d = p[i] - mean;
      sum += d * d;
    }
    return sum;
  });
  m.variance = ss / static_cast<double>(img.size());
  return m;
}

}  // namespace

AffineFit fit_affine_mse(const Image& gt, const Image& pred) {
  if (gt.height() != pred.height() || gt.width() != pred.width()) {
    throw std::invalid_argument("fit_affine_mse: image dimensions differ");
  }
  const Moments mg = image_moments(gt);
  const Moments mp = image_moments(pred);
  if (!(mp.variance > 0.0)) {
    throw std::invalid_argument("fit_affine_mse: prediction is constant, normal equations are degenerate");
  }
  const double* g = gt.data();
  const double* p = pred.data();
  const double cov = parallel::deterministic_sum(gt.size(), [&](std::size_t b, std::size_t e) {
                       double sum = 0.0;
                       for (std::size_t i = b; i < e; ++i) sum += (p[i] - mp.mean) * (g[i] - mg.mean);
                       return sum;
                     }) /
                     static_cast<double>(gt.size());

  AffineFit fit;
  fit.scale = cov / mp.variance;
  fit.offset = mg.mean - fit.scale * mp.mean;
  const double scale = fit.scale, offset = fit.offset;
  fit.residual_mse = parallel::deterministic_sum(gt.size(), [&](std::size_t b, std::size_t e) {
                       double sum = 0.0;
                       for (std::size_t i = b; i < e; ++i) {
                         const double r = scale * p[i] + offset - g[i];
                         sum += r * r;
                       }
                       return sum;
                     }) /
                     static_cast<double>(gt.size());
  return fit;
}

SsimBreakdown vanilla_ssim_breakdown(const Image& gt, const Image& pred, const MetricConfig& config) {
  return mssim(gt, pred, config);
}

double vanilla_ssim(const Image& gt, const Image& pred, const MetricConfig& config) {
  return vanilla_ssim_breakdown(gt, pred, config).mssim;
}

SsimBreakdown zscore_ssim_breakdown(const Image& gt, const Image& pred, const MetricConfig& config) {
  const Moments mg = image_moments(gt);
  const Moments mp = image_moments(pred);
  if (!(mg.variance > 0.0) || !(mp.variance > 0.0)) {
    throw std::invalid_argument("zscore_ssim: images must be non-constant");
  }
  const double sg = std::sqrt(mg.variance);
  const double sp = std::sqrt(mp.variance);

  Image zg(gt.height(), gt.width());
  Image zp(pred.height(), pred.width());
  const double* g = gt.data();
  const double* p = pred.data();
  double* zgp = zg.data();
  double* zpp = zp.data();
  parallel::parallel_for(gt.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) zgp[i] = (g[i] - mg.mean) / sg;
  });
  parallel::parallel_for(pred.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) zpp[i] = (p[i] - mp.mean) / sp;
  });

  MetricConfig effective = config;
  if (effective.data_range.kind != DataRangeKind::explicit_value) {
    // dtype or raw-image ranges are meaningless after standardization.
    effective.data_range = DataRangePolicy::image_range();
    effective.dataset_range.reset();
  }
  return mssim(zg, zp, effective);
}

double zscore_ssim(const Image& gt, const Image& pred, const MetricConfig& config) {
  return zscore_ssim_breakdown(gt, pred, config).mssim;
}

std::pair<SsimBreakdown, AffineFit> care_ssim_breakdown(const Image& gt, const Image& pred,
                                                        const MetricConfig& config, const CareOptions& options) {
  SsimBreakdown breakdown;
  AffineFit fit;
  if (options.zero_mean_scalar) {
    const Moments mg = image_moments(gt);
    const Moments mp = image_moments(pred);
    if (!(mp.variance > 0.0)) throw std::invalid_argument("care_ssim: prediction is constant");
    // Zero-mean both sides, fit only the scalar: argmin_s ||s*p0 - g0||^2.
    const double* g = gt.data();
    const double* p = pred.data();
    const double cov = parallel::deterministic_sum(gt.size(), [&](std::size_t b, std::size_t e) {
                         double sum = 0.0;
                         for (std::size_t i = b; i < e; ++i) sum += (p[i] - mp.mean) * (g[i] - mg.mean);
                         return sum;
                       }) /
                       static_cast<double>(gt.size());
    fit.scale = cov / mp.variance;
    fit.offset = -fit.scale * mp.mean;  // implied by the zero-mean convention

    Image g0(gt.height(), gt.width());
    Image ps(pred.height(), pred.width());
    double* g0p = g0.data();
    double* psp = ps.data();
    const double scale = fit.scale;
    parallel::parallel_for(gt.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        g0p[i] = g[i] - mg.mean;
        psp[i] = scale * (p[i] - mp.mean);
      }
    });
    fit.residual_mse = parallel::deterministic_sum(gt.size(), [&](std::size_t b, std::size_t e) {
                         double sum = 0.0;
                         for (std::size_t i = b; i < e; ++i) {
                           const double r = psp[i] - g0p[i];
                           sum += r * r;
                         }
                         return sum;
                       }) /
                       static_cast<double>(gt.size());
    MetricConfig effective = config;
    if (effective.data_range.kind != DataRangeKind::explicit_value) {
      effective.data_range = DataRangePolicy::image_range();
      effective.dataset_range.reset();
    }
    breakdown = mssim(g0, ps, effective);
  } else {
    fit = fit_affine_mse(gt, pred);
    Image transformed(pred.height(), pred.width());
    const double* p = pred.data();
    double* t = transformed.data();
    const double scale = fit.scale, offset = fit.offset;
    parallel::parallel_for(pred.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) t[i] = scale * p[i] + offset;
    });
    transformed.set_bit_depth(pred.bit_depth());
    breakdown = mssim(gt, transformed, config);
  }
  return {std::move(breakdown), fit};
}

std::pair<double, AffineFit> care_ssim(const Image& gt, const Image& pred, const MetricConfig& config,
                                       const CareOptions& options) {
  auto [breakdown, fit] = care_ssim_breakdown(gt, pred, config, options);
  return {breakdown.mssim, fit};
}

}  // namespace micrometric
