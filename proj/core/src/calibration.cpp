#include "micrometric/calibration.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "micrometric/errors.hpp"
#include "micrometric/parallel.hpp"
#include "micrometric/percentile.hpp"
#include "micrometric/version.hpp"

namespace micrometric {

MetricConfig DatasetCalibration::metric_config() const {
  MetricConfig config;
  config.window = window_kind == WindowKind::gaussian ? make_window(WindowKind::gaussian, window_side, window_sigma)
                                                      : make_window(WindowKind::uniform, window_side);
  config.k1 = k1;
  config.k2 = k2;
  config.data_range = DataRangePolicy::dataset_range();
  config.dataset_range = data_range;
  return config;
}

double estimate_offset(std::span<const Image> images, double percentile) {
  if (images.empty()) throw std::invalid_argument("estimate_offset: empty image collection");
  std::size_t total = 0;
  for (const Image& img : images) total += img.size();
  std::vector<double> pool;
  pool.reserve(total);
  for (const Image& img : images) pool.insert(pool.end(), img.pixels().begin(), img.pixels().end());
  return nearest_rank_percentile(std::move(pool), percentile);
}

double estimate_max(std::span<const Image> gt_images) {
  if (gt_images.empty()) throw std::invalid_argument("estimate_max: empty image collection");
  double best = gt_images.front().max_value();
  for (const Image& img : gt_images.subspan(1)) best = std::max(best, img.max_value());
  return best;
}

Image preprocess(const Image& img, double offset, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("preprocess: scale must be positive");
  Image out(img.height(), img.width());
  out.set_bit_depth(0);
  const double* src = img.data();
  double* dst = out.data();
  parallel::parallel_for(img.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) dst[i] = (src[i] - offset) / scale;
  });
  return out;
}

double closed_form_alpha(const WindowStats& stats) {
  if (!(stats.ux > 0.0) || !(stats.uy > 0.0) || !(stats.vx > 0.0) || !(stats.vy > 0.0) || !(stats.vxy > 0.0)) {
    throw ClosedFormUndefined("closed-form alpha requires positive means, variances and covariance");
  }
  const double sx = std::sqrt(stats.vx);
  const double sy = std::sqrt(stats.vy);
  return std::sqrt((sx * stats.ux) / (sy * stats.uy));
}

double ssim_alpha_derivative(const WindowStats& s, double alpha, double c1, double c2) {
  const double num_l = 2.0 * alpha * s.ux * s.uy + c1;   // luminance-side numerator
  const double num_s = 2.0 * alpha * s.vxy + c2;         // structure-side numerator
  const double den_s = alpha * alpha * s.vy + c2 + s.vx;
  const double den_l = alpha * alpha * s.uy * s.uy + c1 + s.ux * s.ux;
  return -2.0 * alpha * s.vy * num_s * num_l / (den_s * den_s * den_l) -
         2.0 * alpha * s.uy * s.uy * num_s * num_l / (den_s * den_l * den_l) +
         2.0 * s.vxy * num_l / (den_s * den_l) +
         2.0 * s.ux * s.uy * num_s / (den_s * den_l);
}

double objective_derivative(const StatsSet& stats, double alpha, double c1, double c2) {
  if (stats.empty()) throw std::invalid_argument("objective_derivative: empty stats set");
  const double total = parallel::deterministic_sum(stats.size(), [&](std::size_t b, std::size_t e) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double v = ssim_alpha_derivative(stats.at(i), alpha, c1, c2);
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

namespace {

// Median of the per-window closed-form alpha over windows satisfying the
// positivity preconditions; 1.0 when none qualify. The median resists the
// heavy right tail from near-empty windows.
double closed_form_seed(const StatsSet& stats) {
  std::vector<double> candidates;
  candidates.reserve(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const WindowStats s = stats.at(i);
    if (s.ux > 0.0 && s.uy > 0.0 && s.vx > 0.0 && s.vy > 0.0 && s.vxy > 0.0) {
      const double sx = std::sqrt(s.vx);
      const double sy = std::sqrt(s.vy);
      candidates.push_back(std::sqrt((sx * s.ux) / (sy * s.uy)));
    }
  }
  if (candidates.empty()) return 1.0;
  const std::size_t mid = candidates.size() / 2;
  std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(mid), candidates.end());
  return candidates[mid];
}

}  // namespace

FitReport fit_alpha(const StatsSet& stats, double c1, double c2, double low, double high) {
  if (stats.empty()) throw std::invalid_argument("fit_alpha: empty stats set");
  if (!(low > 0.0) || !(low < high)) throw std::invalid_argument("fit_alpha: need 0 < low < high");

  FitReport report;
  report.closed_form_seed = closed_form_seed(stats);

  // Expand the bracket geometrically if the seed falls outside, capped at
  // [1e-6, 1e6].
  while (report.closed_form_seed < low && low > 1e-6) low = std::max(1e-6, low / 10.0);
  while (report.closed_form_seed > high && high < 1e6) high = std::min(1e6, high * 10.0);

  int evaluations = 0;
  auto objective = [&](double alpha) {
    ++evaluations;
    const double value = scaled_ssim_objective(stats, alpha, c1, c2);
    if (!std::isfinite(value)) {
      throw NumericError("fit_alpha: objective is not finite at alpha = " + std::to_string(alpha));
    }
    return value;
  };

  // Work on t = ln(alpha) so bracket width is relative to alpha.
  const double t_low = std::log(low);
  const double t_high = std::log(high);
  double t_seed = std::clamp(std::log(report.closed_form_seed), t_low, t_high);

  // Bracket the maximum around the seed by stepping outward.
  double ta = t_seed, tb = t_seed;
  double fa, fb;
  double tm = t_seed, fm = objective(std::exp(t_seed));
  {
    double step = 0.5;
    ta = std::max(t_low, t_seed - step);
    tb = std::min(t_high, t_seed + step);
    fa = ta < t_seed ? objective(std::exp(ta)) : fm;
    fb = tb > t_seed ? objective(std::exp(tb)) : fm;
    while (fa > fm && ta > t_low) {
      tb = tm;
      fb = fm;
      tm = ta;
      fm = fa;
      step *= 2.0;
      ta = std::max(t_low, tm - step);
      fa = objective(std::exp(ta));
    }
    while (fb > fm && tb < t_high) {
      ta = tm;
      fa = fm;
      tm = tb;
      fm = fb;
      step *= 2.0;
      tb = std::min(t_high, tm + step);
      fb = objective(std::exp(tb));
    }
  }
  report.boundary_warning = (fa > fm && ta <= t_low) || (fb > fm && tb >= t_high);

  // Golden-section on [ta, tb] until the bracket is 1e-6 wide in t.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = tb - inv_phi * (tb - ta);
  double x2 = ta + inv_phi * (tb - ta);
  double f1 = objective(std::exp(x1));
  double f2 = objective(std::exp(x2));
  while (tb - ta > 1e-6) {
    if (f1 >= f2) {
      tb = x2;
      x2 = x1;
      f2 = f1;
      x1 = tb - inv_phi * (tb - ta);
      f1 = objective(std::exp(x1));
    } else {
      ta = x1;
      x1 = x2;
      f1 = f2;
      x2 = ta + inv_phi * (tb - ta);
      f2 = objective(std::exp(x2));
    }
  }
  double alpha = std::exp(0.5 * (ta + tb));

  // Polish: bisect the aggregated derivative's sign change inside the final
  // bracket, which pins the root far below the golden-section resolution.
  if (!report.boundary_warning) {
    double pa = std::exp(ta) * (1.0 - 1e-9);
    double pb = std::exp(tb) * (1.0 + 1e-9);
    double ga = objective_derivative(stats, pa, c1, c2);
    double gb = objective_derivative(stats, pb, c1, c2);
    // Widen slightly if the 1e-6 bracket landed past the sign change.
    for (int widen = 0; widen < 40 && !(ga >= 0.0 && gb <= 0.0); ++widen) {
      if (ga < 0.0) {
        pa = std::max(low, pa * (1.0 - 1e-5 * (1 << std::min(widen, 16))));
        ga = objective_derivative(stats, pa, c1, c2);
      }
      if (gb > 0.0) {
        pb = std::min(high, pb * (1.0 + 1e-5 * (1 << std::min(widen, 16))));
        gb = objective_derivative(stats, pb, c1, c2);
      }
    }
    if (ga >= 0.0 && gb <= 0.0) {
      for (int iter = 0; iter < 200 && pb - pa > 4.0 * std::numeric_limits<double>::epsilon() * pb; ++iter) {
        const double pm = 0.5 * (pa + pb);
        const double gm = objective_derivative(stats, pm, c1, c2);
        ++evaluations;
        if (gm >= 0.0) {
          pa = pm;
        } else {
          pb = pm;
        }
      }
      alpha = 0.5 * (pa + pb);
    }
  }

  report.alpha = alpha;
  report.objective_at_alpha = scaled_ssim_objective(stats, alpha, c1, c2);
  report.derivative_at_alpha = objective_derivative(stats, alpha, c1, c2);
  report.bracket_low = std::exp(ta);
  report.bracket_high = std::exp(tb);
  report.iterations = evaluations;
  return report;
}

namespace {

void check_paired_sets(std::span<const Image> gt_set, std::span<const Image> pred_set) {
  if (gt_set.empty() || pred_set.empty()) throw std::invalid_argument("calibrate: empty image set");
  if (gt_set.size() != pred_set.size()) {
    throw std::invalid_argument("calibrate: set sizes differ (" + std::to_string(gt_set.size()) + " vs " +
                                std::to_string(pred_set.size()) + ")");
  }
  for (std::size_t i = 0; i < gt_set.size(); ++i) {
    if (gt_set[i].height() != pred_set[i].height() || gt_set[i].width() != pred_set[i].width()) {
      throw std::invalid_argument("calibrate: pair " + std::to_string(i) + " dimensions differ");
    }
  }
}

int auto_stride(std::span<const Image> gt_set, int window_side) {
  std::size_t total_windows = 0;
  for (const Image& img : gt_set) {
    const std::size_t vh = static_cast<std::size_t>(img.height() - window_side + 1);
    const std::size_t vw = static_cast<std::size_t>(img.width() - window_side + 1);
    total_windows += vh * vw;
  }
  constexpr std::size_t kTargetPool = 2'000'000;
  int stride = 1;
  while (total_windows / (static_cast<std::size_t>(stride) * static_cast<std::size_t>(stride)) > kTargetPool) {
    ++stride;
  }
  return stride;
}

}  // namespace

std::string pooled_input_digest(std::span<const Image> gt_set, std::span<const Image> pred_set, double percentile) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  mix(&percentile, sizeof(percentile));
  for (std::span<const Image> set : {gt_set, pred_set}) {
    for (const Image& img : set) {
      const int h = img.height(), w = img.width();
      mix(&h, sizeof(h));
      mix(&w, sizeof(w));
      mix(img.data(), img.size() * sizeof(double));
    }
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return buf;
}

CalibrationResult calibrate(std::span<const Image> gt_set, std::span<const Image> pred_set,
                            const MetricConfig& config, double percentile, const CalibrationOptions& options) {
  check_paired_sets(gt_set, pred_set);

  DatasetCalibration cal;
  cal.percentile = percentile;
  cal.beta_gt = estimate_offset(gt_set, percentile);
  cal.beta_pred = estimate_offset(pred_set, percentile);
  cal.max_gt = estimate_max(gt_set);
  if (!(cal.max_gt > cal.beta_gt)) {
    throw NumericError("calibrate: ground-truth maximum does not exceed the background offset");
  }

  const int stride = options.stats_stride > 0 ? options.stats_stride : auto_stride(gt_set, config.window.side());

  // Preprocess pair by pair, pooling strided window statistics and the
  // preprocessed ground-truth extrema for the dataset gamma.
  StatsSet stats;
  double pre_min = std::numeric_limits<double>::infinity();
  double pre_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gt_set.size(); ++i) {
    const Image gtp = preprocess(gt_set[i], cal.beta_gt, cal.max_gt);
    const Image predp = preprocess(pred_set[i], cal.beta_pred, cal.max_gt);
    pre_min = std::min(pre_min, gtp.min_value());
    pre_max = std::max(pre_max, gtp.max_value());
    stats.append(local_statistics(gtp, predp, config.window, config.variance_mode), stride);
  }

  double gamma = 0.0;
  switch (config.data_range.kind) {
    case DataRangeKind::explicit_value:
      gamma = config.data_range.value;
      break;
    case DataRangeKind::dtype_range: {
      const int bits = config.data_range.bit_depth > 0 ? config.data_range.bit_depth : gt_set[0].bit_depth();
      if (bits <= 0 || bits > 16) throw std::invalid_argument("calibrate: dtype_range without a usable bit depth");
      gamma = std::ldexp(1.0, bits) - 1.0;
      break;
    }
    case DataRangeKind::gt_image_range:
    case DataRangeKind::gt_dataset_range:
      gamma = pre_max - pre_min;
      break;
  }
  const SsimConstants constants = constants_for_range(gamma, config.k1, config.k2);

  const FitReport fit = fit_alpha(stats, constants.c1, constants.c2, options.bracket_low, options.bracket_high);

  cal.alpha = fit.alpha;
  cal.data_range = gamma;
  cal.k1 = config.k1;
  cal.k2 = config.k2;
  cal.window_kind = config.window.kind();
  cal.window_side = config.window.side();
  cal.window_sigma = config.window.sigma();
  cal.input_digest = pooled_input_digest(gt_set, pred_set, percentile);
  cal.tool_version = kToolVersion;
  cal.fitted = true;
  return {cal, fit};
}

SsimBreakdown micro_ssim(const Image& gt, const Image& pred, const DatasetCalibration& calibration,
                         const MetricConfig& config) {
  if (!calibration.fitted) throw InvalidState("micro_ssim: calibration is not fitted");
  const Image x = preprocess(gt, calibration.beta_gt, calibration.max_gt);
  Image y = preprocess(pred, calibration.beta_pred, calibration.max_gt);
  for (double& v : y.pixels()) v *= calibration.alpha;

  MetricConfig effective = config;
  if (effective.data_range.kind == DataRangeKind::gt_dataset_range && !effective.dataset_range) {
    effective.dataset_range = calibration.data_range;
  }
  return mssim(x, y, effective);
}

SsimBreakdown micro_ssim(const Image& gt, const Image& pred, const DatasetCalibration& calibration) {
  return micro_ssim(gt, pred, calibration, calibration.metric_config());
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_calibration(const DatasetCalibration& cal) {
  std::ostringstream out;
  out << "beta_gt " << format_double(cal.beta_gt) << "\n";
  out << "beta_pred " << format_double(cal.beta_pred) << "\n";
  out << "max_gt " << format_double(cal.max_gt) << "\n";
  out << "alpha " << format_double(cal.alpha) << "\n";
  out << "percentile " << format_double(cal.percentile) << "\n";
  out << "k1 " << format_double(cal.k1) << "\n";
  out << "k2 " << format_double(cal.k2) << "\n";
  out << "window_kind " << window_kind_name(cal.window_kind) << "\n";
  out << "window_side " << cal.window_side << "\n";
  out << "sigma " << format_double(cal.window_sigma) << "\n";
  out << "data_range " << format_double(cal.data_range) << "\n";
  out << "input_digest " << (cal.input_digest.empty() ? "-" : cal.input_digest) << "\n";
  out << "tool_version " << (cal.tool_version.empty() ? kToolVersion : cal.tool_version) << "\n";
  return out.str();
}

DatasetCalibration parse_calibration(const std::string& text) {
  std::map<std::string, std::string> fields;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size()) {
      throw ParseError("calibration line is not 'key value'", line_no);
    }
    fields[line.substr(0, space)] = line.substr(space + 1);
  }
  auto require = [&](const char* key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ParseError(std::string("calibration file is missing field '") + key + "'");
    return it->second;
  };
  auto to_double = [&](const char* key) {
    const std::string& s = require(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw ParseError(std::string("calibration field '") + key + "' is not a finite number: " + s);
    }
    return v;
  };

  DatasetCalibration cal;
  cal.beta_gt = to_double("beta_gt");
  cal.beta_pred = to_double("beta_pred");
  cal.max_gt = to_double("max_gt");
  cal.alpha = to_double("alpha");
  cal.percentile = to_double("percentile");
  cal.k1 = to_double("k1");
  cal.k2 = to_double("k2");
  cal.window_kind = window_kind_from_name(require("window_kind"));
  cal.window_side = static_cast<int>(to_double("window_side"));
  cal.window_sigma = to_double("sigma");
  cal.data_range = to_double("data_range");
  cal.input_digest = require("input_digest") == "-" ? "" : require("input_digest");
  cal.tool_version = require("tool_version");
  if (!(cal.alpha > 0.0)) throw ParseError("calibration alpha must be positive");
  if (!(cal.max_gt > cal.beta_gt)) throw ParseError("calibration requires max_gt > beta_gt");
  cal.fitted = true;
  return cal;
}

void save_calibration(const DatasetCalibration& cal, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open calibration file for writing: " + path.string());
  out << serialize_calibration(cal);
  if (!out) throw FormatError("failed writing calibration file: " + path.string());
}

DatasetCalibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open calibration file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_calibration(buf.str());
}

}  // namespace micrometric
