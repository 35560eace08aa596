#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "micrometric/calibration.hpp"
#include "micrometric/errors.hpp"
#include "micrometric/multiscale.hpp"
#include "micrometric/rng.hpp"
#include "micrometric/ssim.hpp"
#include "micrometric/synthetic.hpp"
#include "test_support.hpp"

using namespace micrometric;

TEST_CASE("downsample basics") {
  SUBCASE("constant stays constant at half size") {
    const Image c = testutil::constant_image(8, 6, 3.5);
    const Image d = downsample(c);
    CHECK(d.height() == 4);
    CHECK(d.width() == 3);
    for (const double v : d.pixels()) CHECK(v == 3.5);
  }
  SUBCASE("2x2 checker averages") {
    Image x(2, 2, {0.0, 1.0, 1.0, 0.0});
    const Image d = downsample(x);
    CHECK(d.height() == 1);
    CHECK(d.width() == 1);
    CHECK(d(0, 0) == 0.5);
  }
  SUBCASE("odd trailing row and column are dropped") {
    const Image x = testutil::random_image(5, 5, 1);
    const Image d = downsample(x);
    CHECK(d.height() == 2);
    CHECK(d.width() == 2);
  }
  CHECK_THROWS_AS(downsample(testutil::constant_image(1, 4, 0.0)), std::invalid_argument);
}

namespace {

MsSsimConfig small_config(int levels) {
  MsSsimConfig config;
  config.base.window = make_window(WindowKind::gaussian, 7, 1.5);
  config.base.data_range = DataRangePolicy::explicit_range(1.0);
  config.levels = levels;
  if (levels == 1) {
    config.level_weights = {1.0};
  } else if (levels == 3) {
    config.level_weights = {0.25, 0.25, 0.5};
  }
  return config;
}

}  // namespace

TEST_CASE("ms_ssim identity and symmetry") {
  const Image x = testutil::random_image(96, 96, 3);
  CHECK(ms_ssim(x, x, small_config(3)) == doctest::Approx(1.0).epsilon(1e-9));

  Image y = x;
  Xoshiro256pp rng(33);
  for (double& v : y.pixels()) v += 0.05 * rng.normal();
  const MsSsimConfig config = small_config(3);
  CHECK(std::fabs(ms_ssim(x, y, config) - ms_ssim(y, x, config)) <= 1e-12);
}

TEST_CASE("single level degenerates to mssim") {
  const Image x = testutil::random_image(32, 32, 4);
  Image y = x;
  Xoshiro256pp rng(5);
  for (double& v : y.pixels()) v += 0.05 * rng.normal();
  const MsSsimConfig config = small_config(1);
  const double ms = ms_ssim(x, y, config);
  const double plain = mssim(x, y, config.base).mssim;
  CHECK(std::fabs(ms - plain) <= 1e-9);
}

TEST_CASE("score decreases with added noise") {
  SynthParams params;
  params.height = 256;
  params.width = 256;
  params.n_blobs = 20;
  params.scale = 1.0;
  params.beta_gt = 0.0;
  params.beta_pred = 0.0;
  params.poisson_gain = 0.0;
  params.read_noise_sigma = 0.0;
  params.seed = 99;
  const SynthPair clean = generate_pair(params);
  const double range = clean.gt.max_value() - clean.gt.min_value();

  MsSsimConfig config;
  config.base.window = make_window(WindowKind::gaussian, 11, 1.5);
  config.base.data_range = DataRangePolicy::explicit_range(range);

  Xoshiro256pp rng(123);
  double previous = 2.0;
  for (const double sigma_frac : {0.0, 0.05, 0.1}) {
    Image noisy = clean.gt;
    if (sigma_frac > 0.0) {
      for (double& v : noisy.pixels()) v += sigma_frac * range * rng.normal();
    }
    const double score = ms_ssim(clean.gt, noisy, config);
    CHECK(score < previous);
    previous = score;
  }
}

TEST_CASE("rejects configurations the pyramid cannot support") {
  const Image x = testutil::random_image(32, 32, 6);
  MsSsimConfig config = small_config(3);
  // 32 -> 16 -> 8 with a 7-pixel window fits; 4 levels would need 4 >= 7.
  CHECK_NOTHROW(ms_ssim(x, x, config));
  config.levels = 4;
  config.level_weights = {0.25, 0.25, 0.25, 0.25};
  CHECK_THROWS_WITH_AS(ms_ssim(x, x, config), doctest::Contains("level 4"), std::invalid_argument);
}

TEST_CASE("weights must be positive and sum to one") {
  const Image x = testutil::random_image(64, 64, 7);
  MsSsimConfig config = small_config(3);
  config.level_weights = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(ms_ssim(x, x, config), std::invalid_argument);
  config.level_weights = {1.5, -0.25, -0.25};
  CHECK_THROWS_AS(ms_ssim(x, x, config), std::invalid_argument);
}

TEST_CASE("micro_ms3im behaviors") {
  SynthParams params;
  params.height = 160;
  params.width = 160;
  params.n_blobs = 14;
  params.scale = 4.0;
  params.beta_gt = 100.0;
  params.beta_pred = 110.0;
  params.poisson_gain = 0.0;
  params.read_noise_sigma = 0.0;

  std::vector<Image> gt_set, pred_set;
  for (int i = 0; i < 6; ++i) {
    params.seed = 500 + static_cast<std::uint64_t>(i);
    SynthPair pair = generate_pair(params);
    gt_set.push_back(std::move(pair.gt));
    pred_set.push_back(std::move(pair.low));
  }
  MetricConfig base;
  base.window = make_window(WindowKind::gaussian, 7, 1.5);
  base.data_range = DataRangePolicy::dataset_range();
  const CalibrationResult result = calibrate(gt_set, pred_set, base);

  MsSsimConfig config;
  config.base = base;
  config.levels = 3;
  config.level_weights = {0.25, 0.25, 0.5};

  SUBCASE("unfitted calibration is rejected") {
    DatasetCalibration blank;
    CHECK_THROWS_AS(micro_ms3im(gt_set[0], pred_set[0], blank, config), InvalidState);
  }
  SUBCASE("identity under trivial calibration") {
    DatasetCalibration cal;
    cal.beta_gt = 0.0;
    cal.beta_pred = 0.0;
    cal.max_gt = 1.0;
    cal.alpha = 1.0;
    cal.data_range = 1.0;
    cal.fitted = true;
    CHECK(micro_ms3im(gt_set[0], gt_set[0], cal, config) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("linear transform recovery") {
    for (std::size_t i = 0; i < gt_set.size(); ++i) {
      CHECK(micro_ms3im(gt_set[i], pred_set[i], result.calibration, config) >= 0.999);
    }
  }
  SUBCASE("uniform noise scores near zero") {
    const Image noise = generate_uniform_noise(160, 160, 0.0, gt_set[0].max_value(), 77);
    CHECK(micro_ms3im(gt_set[0], noise, result.calibration, config) < 0.1);
  }
}
