#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "micrometric/calibration.hpp"
#include "micrometric/errors.hpp"
#include "micrometric/rng.hpp"
#include "micrometric/ssim.hpp"
#include "micrometric/synthetic.hpp"
#include "test_support.hpp"

using namespace micrometric;

namespace {

// Log-spaced argmax scan of the single-set objective.
double grid_argmax(const StatsSet& stats, double c1, double c2, double lo, double hi, int points) {
  double best_alpha = lo;
  double best_value = -2.0;
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double alpha = lo * std::exp(step * static_cast<double>(i));
    const double value = scaled_ssim_objective(stats, alpha, c1, c2);
    if (value > best_value) {
      best_value = value;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

WindowStats random_valid_stats(Xoshiro256pp& rng) {
  WindowStats s;
  s.ux = rng.uniform(0.05, 3.0);
  s.uy = rng.uniform(0.05, 3.0);
  s.vx = rng.uniform(1e-4, 2.0);
  s.vy = rng.uniform(1e-4, 2.0);
  s.vxy = rng.uniform(0.05, 1.0) * std::sqrt(s.vx * s.vy);
  return s;
}

}  // namespace

TEST_CASE("estimate_offset nearest-rank behavior") {
  SUBCASE("single constant image") {
    const Image c = testutil::constant_image(4, 4, 42.5);
    const std::vector<Image> set{c};
    CHECK(estimate_offset(set, 0.0) == 42.5);
    CHECK(estimate_offset(set, 3.0) == 42.5);
    CHECK(estimate_offset(set, 100.0) == 42.5);
  }
  SUBCASE("pooled 0..99 percentile 3 selects rank 3") {
    std::vector<double> values(100);
    for (int i = 0; i < 100; ++i) values[static_cast<std::size_t>(i)] = 99.0 - i;  // unsorted on purpose
    const std::vector<Image> set{Image(10, 10, values)};
    CHECK(estimate_offset(set, 3.0) == 3.0);
    CHECK(estimate_offset(set, 0.0) == 0.0);
    CHECK(estimate_offset(set, 100.0) == 99.0);
    CHECK(estimate_offset(set, 9.0) == 9.0);
  }
  SUBCASE("pooling across images") {
    const std::vector<Image> set{testutil::constant_image(2, 2, 1.0), testutil::constant_image(2, 2, 5.0)};
    CHECK(estimate_offset(set, 0.0) == 1.0);
    CHECK(estimate_offset(set, 50.0) == 5.0);  // rank floor(0.5*8)=4 -> fifth smallest
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(estimate_offset({}, 3.0), std::invalid_argument);
    const std::vector<Image> set{testutil::constant_image(2, 2, 0.0)};
    CHECK_THROWS_AS(estimate_offset(set, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_offset(set, 101.0), std::invalid_argument);
  }
}

TEST_CASE("estimate_max pools the global maximum") {
  std::vector<Image> set;
  Image a = testutil::constant_image(3, 3, 1.0);
  a(1, 1) = 4095.0;
  set.push_back(a);
  CHECK(estimate_max(set) == 4095.0);
  Image b = testutil::constant_image(3, 3, 10.0);
  b(0, 0) = 200.0;
  set.push_back(b);
  CHECK(estimate_max(set) == 4095.0);
  CHECK(estimate_max(std::vector<Image>{b}) == 200.0);
  CHECK_THROWS_AS(estimate_max({}), std::invalid_argument);
}

TEST_CASE("estimate_max matches the generator's recorded peak") {
  SynthParams params;
  params.height = 64;
  params.width = 64;
  params.seed = 7;
  const SynthPair pair = generate_pair(params);
  const std::vector<Image> set{pair.gt};
  CHECK(estimate_max(set) == pair.meta.gt_peak);
}

TEST_CASE("preprocess applies (v - offset) / scale") {
  SUBCASE("identity") {
    const Image x = testutil::random_image(4, 4, 3);
    const Image out = preprocess(x, 0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(out.pixels()[i] == x.pixels()[i]);
  }
  SUBCASE("constant goes to zero") {
    const Image out = preprocess(testutil::constant_image(3, 3, 102.0), 102.0, 7.0);
    for (const double v : out.pixels()) CHECK(v == 0.0);
  }
  SUBCASE("arithmetic") {
    Image x = testutil::constant_image(1, 1, 5102.0);
    CHECK(preprocess(x, 102.0, 5000.0)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(preprocess(testutil::constant_image(2, 2, 0.0), 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("closed-form alpha") {
  SUBCASE("identical stats give one") {
    const WindowStats s{1.0, 1.0, 0.3, 0.3, 0.3};
    CHECK(closed_form_alpha(s) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("halved prediction gives two") {
    // uy = ux/2, vy = vx/4 so sy = sx/2.
    const WindowStats s{1.0, 0.5, 0.4, 0.1, 0.2};
    CHECK(closed_form_alpha(s) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("matches the grid argmax of the unstabilized objective") {
    Xoshiro256pp rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
      StatsSet stats;
      stats.push_back(random_valid_stats(rng));
      const double cf = closed_form_alpha(stats.at(0));
      const double got = grid_argmax(stats, 0.0, 0.0, cf / 10.0, cf * 10.0, 100000);
      const double step = std::log(100.0) / 99999.0;
      CHECK(std::fabs(std::log(got / cf)) <= step * 1.0001);
    }
  }
  SUBCASE("rejects non-positive inputs") {
    CHECK_THROWS_AS(closed_form_alpha({0.0, 1.0, 0.1, 0.1, 0.05}), ClosedFormUndefined);
    CHECK_THROWS_AS(closed_form_alpha({1.0, 1.0, 0.1, 0.1, -0.05}), ClosedFormUndefined);
    CHECK_THROWS_AS(closed_form_alpha({1.0, 1.0, 0.0, 0.1, 0.05}), ClosedFormUndefined);
  }
}

TEST_CASE("alpha derivative") {
  Xoshiro256pp rng(77);
  SUBCASE("vanishes at the closed form root when c1 = c2 = 0") {
    for (int trial = 0; trial < 50; ++trial) {
      const WindowStats s = random_valid_stats(rng);
      const double cf = closed_form_alpha(s);
      const double d = ssim_alpha_derivative(s, cf, 0.0, 0.0);
      // Relative to the magnitude of the expression's terms.
      const double scale = std::fabs(scaled_ssim_value(s, cf, 0.0, 0.0)) / cf;
      CHECK(std::fabs(d) <= 1e-10 * std::max(1.0, scale));
    }
  }
  SUBCASE("matches central finite differences") {
    for (int trial = 0; trial < 200; ++trial) {
      const WindowStats s = random_valid_stats(rng);
      const double alpha = rng.uniform(0.2, 5.0);
      const double c1 = rng.uniform(0.0, 1e-2);
      const double c2 = rng.uniform(0.0, 1e-2);
      const double h = 1e-6 * alpha;
      const double fd = (scaled_ssim_value(s, alpha + h, c1, c2) - scaled_ssim_value(s, alpha - h, c1, c2)) / (2.0 * h);
      const double an = ssim_alpha_derivative(s, alpha, c1, c2);
      CHECK(std::fabs(fd - an) <= 1e-5 * std::max({std::fabs(fd), std::fabs(an), 1e-3}));
    }
  }
  SUBCASE("sign pattern around the unique maximum") {
    for (int trial = 0; trial < 50; ++trial) {
      const WindowStats s = random_valid_stats(rng);
      const double cf = closed_form_alpha(s);
      CHECK(ssim_alpha_derivative(s, cf / 2.0, 0.0, 0.0) > 0.0);
      CHECK(ssim_alpha_derivative(s, cf * 2.0, 0.0, 0.0) < 0.0);
    }
  }
}

TEST_CASE("fit_alpha") {
  const SsimConstants k = constants_for_range(1.0, 0.01, 0.03);
  SUBCASE("identity stats peak at one") {
    const Image x = testutil::random_image(24, 24, 5);
    StatsSet stats;
    stats.append(local_statistics(x, x, make_window(WindowKind::gaussian, 7, 1.5)));
    const FitReport fit = fit_alpha(stats, k.c1, k.c2);
    CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.objective_at_alpha == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(fit.boundary_warning);
  }
  SUBCASE("closed-form consistency on a single window") {
    Xoshiro256pp rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      StatsSet stats;
      stats.push_back(random_valid_stats(rng));
      const double cf = closed_form_alpha(stats.at(0));
      const FitReport fit = fit_alpha(stats, 0.0, 0.0);
      CHECK(fit.alpha == doctest::Approx(cf).epsilon(1e-6));
      CHECK(fit.closed_form_seed == doctest::Approx(cf).epsilon(1e-12));
    }
  }
  SUBCASE("report certifies a local maximum") {
    const Image x = testutil::random_image(32, 32, 8, 0.0, 2.0);
    Image y = x;
    for (double& v : y.pixels()) v = v / 3.0 + 0.05;
    StatsSet stats;
    stats.append(local_statistics(x, y, make_window(WindowKind::gaussian, 7, 1.5)));
    const FitReport fit = fit_alpha(stats, k.c1, k.c2);
    const double up = scaled_ssim_objective(stats, fit.alpha * 1.01, k.c1, k.c2);
    const double down = scaled_ssim_objective(stats, fit.alpha * 0.99, k.c1, k.c2);
    CHECK(fit.objective_at_alpha >= up);
    CHECK(fit.objective_at_alpha >= down);
    CHECK(std::fabs(fit.derivative_at_alpha) <= 1e-6 * std::max(1.0, std::fabs(fit.objective_at_alpha)));
    // And it agrees with a dense grid scan within one step.
    const double got = grid_argmax(stats, k.c1, k.c2, fit.alpha / 10.0, fit.alpha * 10.0, 100000);
    CHECK(std::fabs(std::log(got / fit.alpha)) <= std::log(100.0) / 99999.0 * 1.0001);
  }
  SUBCASE("rejects empty sets and bad brackets") {
    StatsSet stats;
    CHECK_THROWS_AS(fit_alpha(stats, 0.0, 0.0), std::invalid_argument);
    stats.push_back({1.0, 1.0, 0.1, 0.1, 0.05});
    CHECK_THROWS_AS(fit_alpha(stats, 0.0, 0.0, 1.0, 0.5), std::invalid_argument);
  }
}

TEST_CASE("calibrate recovers the generator's transform") {
  SynthParams params;
  params.height = 128;
  params.width = 128;
  params.n_blobs = 12;
  params.scale = 5.0;
  params.beta_gt = 100.0;
  params.beta_pred = 110.0;
  params.poisson_gain = 0.0;
  params.read_noise_sigma = 0.0;

  std::vector<Image> gt_set, pred_set;
  for (int i = 0; i < 10; ++i) {
    params.seed = 1000 + static_cast<std::uint64_t>(i);
    SynthPair pair = generate_pair(params);
    gt_set.push_back(std::move(pair.gt));
    pred_set.push_back(std::move(pair.low));
  }

  MetricConfig config;
  config.data_range = DataRangePolicy::dataset_range();
  const CalibrationResult result = calibrate(gt_set, pred_set, config);
  CHECK(result.calibration.fitted);
  CHECK(result.calibration.beta_gt == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(result.calibration.beta_pred == doctest::Approx(110.0).epsilon(1e-9));
  CHECK(result.calibration.alpha == doctest::Approx(5.0).epsilon(0.01));

  for (std::size_t i = 0; i < gt_set.size(); ++i) {
    const SsimBreakdown b = micro_ssim(gt_set[i], pred_set[i], result.calibration);
    CHECK(b.mssim >= 0.999);
  }
}

TEST_CASE("calibrate on identical sets gives alpha one") {
  std::vector<Image> set;
  for (int i = 0; i < 3; ++i) set.push_back(testutil::random_image(32, 32, 300 + static_cast<std::uint64_t>(i), 50.0, 800.0));
  MetricConfig config;
  config.window = make_window(WindowKind::gaussian, 7, 1.5);
  config.data_range = DataRangePolicy::dataset_range();
  const CalibrationResult result = calibrate(set, set, config);
  CHECK(result.calibration.beta_gt == result.calibration.beta_pred);
  CHECK(result.calibration.alpha == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("calibrate validates its inputs") {
  const std::vector<Image> a{testutil::random_image(16, 16, 1)};
  const std::vector<Image> b{testutil::random_image(16, 16, 2), testutil::random_image(16, 16, 3)};
  const std::vector<Image> c{testutil::random_image(18, 16, 4)};
  MetricConfig config;
  config.window = make_window(WindowKind::uniform, 7);
  CHECK_THROWS_AS(calibrate({}, {}, config), std::invalid_argument);
  CHECK_THROWS_AS(calibrate(a, b, config), std::invalid_argument);
  CHECK_THROWS_AS(calibrate(a, c, config), std::invalid_argument);
}

TEST_CASE("joint offset invariance of MicroSSIM after recalibration") {
  SynthParams params;
  params.height = 96;
  params.width = 96;
  params.n_blobs = 8;
  params.scale = 3.0;
  params.read_noise_sigma = 6.0;
  params.poisson_gain = 1.0;

  std::vector<Image> gt_set, pred_set;
  for (int i = 0; i < 4; ++i) {
    params.seed = 40 + static_cast<std::uint64_t>(i);
    SynthPair pair = generate_pair(params);
    gt_set.push_back(std::move(pair.gt));
    pred_set.push_back(std::move(pair.low));
  }
  MetricConfig config;
  config.window = make_window(WindowKind::gaussian, 7, 1.5);
  config.data_range = DataRangePolicy::dataset_range();
  const CalibrationResult base = calibrate(gt_set, pred_set, config);
  std::vector<double> base_scores;
  for (std::size_t i = 0; i < gt_set.size(); ++i) {
    base_scores.push_back(micro_ssim(gt_set[i], pred_set[i], base.calibration, config).mssim);
  }

  for (const double d : {100.0, 10000.0}) {
    std::vector<Image> gt_shift = gt_set, pred_shift = pred_set;
    for (auto& img : gt_shift)
      for (double& v : img.pixels()) v += d;
    for (auto& img : pred_shift)
      for (double& v : img.pixels()) v += d;
    const CalibrationResult shifted = calibrate(gt_shift, pred_shift, config);
    for (std::size_t i = 0; i < gt_set.size(); ++i) {
      const double score = micro_ssim(gt_shift[i], pred_shift[i], shifted.calibration, config).mssim;
      CHECK(std::fabs(score - base_scores[i]) <= 1e-9);
    }
  }
}

TEST_CASE("micro_ssim requires a fitted calibration") {
  const Image x = testutil::random_image(16, 16, 9);
  DatasetCalibration cal;
  CHECK_THROWS_AS(micro_ssim(x, x, cal, MetricConfig{}), InvalidState);
}

TEST_CASE("micro_ssim identity under trivial calibration") {
  const Image x = testutil::random_image(24, 24, 10, 100.0, 4000.0);
  DatasetCalibration cal;
  cal.beta_gt = 100.0;
  cal.beta_pred = 100.0;
  cal.max_gt = 4000.0;
  cal.alpha = 1.0;
  cal.data_range = 1.0;
  cal.window_side = 7;
  cal.window_sigma = 1.5;
  cal.fitted = true;
  CHECK(micro_ssim(x, x, cal).mssim == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("calibration serialization round-trips bit-exactly") {
  DatasetCalibration cal;
  cal.beta_gt = 102.12345678901234;
  cal.beta_pred = 110.98765432109876;
  cal.max_gt = 40961.5;
  cal.alpha = 5.0000047683715821;
  cal.percentile = 3.0;
  cal.k1 = 0.01;
  cal.k2 = 0.03;
  cal.window_kind = WindowKind::gaussian;
  cal.window_side = 11;
  cal.window_sigma = 1.5;
  cal.data_range = 0.99750623441396513;
  cal.input_digest = "0123456789abcdef";
  cal.tool_version = "0.1.0";
  cal.fitted = true;

  const std::string text = serialize_calibration(cal);
  const DatasetCalibration back = parse_calibration(text);
  CHECK(back.beta_gt == cal.beta_gt);
  CHECK(back.beta_pred == cal.beta_pred);
  CHECK(back.max_gt == cal.max_gt);
  CHECK(back.alpha == cal.alpha);
  CHECK(back.percentile == cal.percentile);
  CHECK(back.k1 == cal.k1);
  CHECK(back.k2 == cal.k2);
  CHECK(back.window_kind == cal.window_kind);
  CHECK(back.window_side == cal.window_side);
  CHECK(back.window_sigma == cal.window_sigma);
  CHECK(back.data_range == cal.data_range);
  CHECK(back.input_digest == cal.input_digest);
  CHECK(back.fitted);
  // Serializing again reproduces the same bytes.
  CHECK(serialize_calibration(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "micrometric_cal_roundtrip.txt";
  save_calibration(cal, path);
  const DatasetCalibration loaded = load_calibration(path);
  CHECK(serialize_calibration(loaded) == text);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_calibration("beta_gt"), ParseError);
  CHECK_THROWS_AS(parse_calibration("beta_gt 1\n"), ParseError);  // missing fields
}
