#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace micrometric::cli {

// Shared metric/window knobs, filled from command-line flags.
struct MetricFlags {
  std::string window = "gaussian11";  // gaussianN | uniformN
  double k1 = 0.01;
  double k2 = 0.03;
  std::string data_range = "auto";  // auto | dtype | <number>
};

struct CalibrateArgs {
  std::string manifest;
  std::string out;
  double percentile = 3.0;
  MetricFlags metric;
  int stride = 0;  // 0 = auto
};

struct ScoreArgs {
  std::string manifest;
  std::string calibration;  // optional
  std::string out;
  std::string csv;  // optional CSV projection
  std::string metrics = "microssim";
  double percentile = 3.0;
  int ms_levels = 5;
  MetricFlags metric;
};

struct DiagnoseArgs {
  std::string manifest;
  std::string calibration;  // optional; fitted in-process when absent
  std::string out_dir;
  double percentile = 3.0;
  MetricFlags metric;
  std::vector<double> offsets = {0.0, 100.0, 1000.0, 10000.0};
  int alpha_grid_points = 401;
  int stride = 0;
};

struct SynthArgs {
  std::string out_dir;
  int pairs = 5;
  int height = 512;
  int width = 512;
  int n_blobs = 25;
  double amp_low = 500.0;
  double amp_high = 4000.0;
  double sigma_low = 3.0;
  double sigma_high = 9.0;
  double beta_gt = 100.0;
  double beta_pred = 110.0;
  double scale = 5.0;
  double poisson_gain = 1.0;
  double read_noise = 5.0;
  std::uint64_t seed = 1;
  std::string format = "mfr";  // mfr | pgm16 | tiff16
};

// Command bodies; they throw, main() maps exceptions to exit codes.
void run_calibrate(const CalibrateArgs& args);
void run_score(const ScoreArgs& args);
void run_diagnose(const DiagnoseArgs& args);
void run_synth(const SynthArgs& args);

}  // namespace micrometric::cli
