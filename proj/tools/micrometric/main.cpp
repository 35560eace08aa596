#include <exception>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "micrometric/errors.hpp"
#include "micrometric/parallel.hpp"
#include "micrometric/version.hpp"
#include "commands.hpp"

namespace {

using namespace micrometric;
using namespace micrometric::cli;

void add_metric_flags(CLI::App* cmd, MetricFlags* flags) {
  cmd->add_option("--window", flags->window, "Sliding window: gaussian11 or uniform7")->capture_default_str();
  cmd->add_option("--k1", flags->k1, "Luminance stabilizer coefficient")->capture_default_str();
  cmd->add_option("--k2", flags->k2, "Contrast/structure stabilizer coefficient")->capture_default_str();
  cmd->add_option("--data-range", flags->data_range, "Data range gamma: auto, dtype, or a positive number")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microscopy-adapted SSIM metrics: dataset-calibrated scoring, saturation diagnostics, synthetic data"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)")->capture_default_str();

  CalibrateArgs cal_args;
  CLI::App* cal = app.add_subcommand("calibrate", "Fit dataset offsets, downscale and alpha; write a calibration file");
  cal->add_option("--manifest", cal_args.manifest, "Pair manifest (JSON lines)")->required();
  cal->add_option("--out", cal_args.out, "Calibration output path")->required();
  cal->add_option("--percentile", cal_args.percentile, "Background percentile")->capture_default_str();
  cal->add_option("--stride", cal_args.stride, "Window subsampling stride for the fit (0 = auto)")
      ->capture_default_str();
  add_metric_flags(cal, &cal_args.metric);

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "Score every pair with the selected metrics");
  score->add_option("--manifest", score_args.manifest, "Pair manifest (JSON lines)")->required();
  score->add_option("--calibration", score_args.calibration, "Calibration file (required for microssim/microms3im)");
  score->add_option("--out", score_args.out, "JSON report output path")->required();
  score->add_option("--csv", score_args.csv, "Optional CSV projection of the report");
  score->add_option("--metric", score_args.metrics,
                    "Comma-separated: microssim,microms3im,ssim,zscore-ssim,care-ssim,ms-ssim")
      ->capture_default_str();
  score->add_option("--percentile", score_args.percentile, "Background percentile")->capture_default_str();
  score->add_option("--levels", score_args.ms_levels, "Pyramid levels for ms-ssim/microms3im (1-5)")
      ->capture_default_str();
  add_metric_flags(score, &score_args.metric);

  DiagnoseArgs diag_args;
  CLI::App* diag = app.add_subcommand("diagnose", "Saturation per pipeline variant, offset sweep, alpha sweep");
  diag->add_option("--manifest", diag_args.manifest, "Pair manifest (JSON lines)")->required();
  diag->add_option("--calibration", diag_args.calibration, "Calibration file (fitted in-process when omitted)");
  diag->add_option("--out", diag_args.out_dir, "Output directory")->required();
  diag->add_option("--percentile", diag_args.percentile, "Background percentile")->capture_default_str();
  diag->add_option("--offsets", diag_args.offsets, "Shared offsets for the luminance sweep")->capture_default_str();
  diag->add_option("--alpha-grid", diag_args.alpha_grid_points, "Points in the alpha sweep grid")
      ->capture_default_str();
  diag->add_option("--stride", diag_args.stride, "Window subsampling stride (0 = auto)")->capture_default_str();
  add_metric_flags(diag, &diag_args.metric);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic (ground truth, low-SNR) dataset");
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--pairs", synth_args.pairs, "Number of pairs")->capture_default_str();
  synth->add_option("--height", synth_args.height, "Image height")->capture_default_str();
  synth->add_option("--width", synth_args.width, "Image width")->capture_default_str();
  synth->add_option("--blobs", synth_args.n_blobs, "Gaussian bumps per image")->capture_default_str();
  synth->add_option("--amp-low", synth_args.amp_low, "Bump amplitude range low")->capture_default_str();
  synth->add_option("--amp-high", synth_args.amp_high, "Bump amplitude range high")->capture_default_str();
  synth->add_option("--sigma-low", synth_args.sigma_low, "Bump width range low (pixels)")->capture_default_str();
  synth->add_option("--sigma-high", synth_args.sigma_high, "Bump width range high (pixels)")->capture_default_str();
  synth->add_option("--beta-gt", synth_args.beta_gt, "Ground-truth detector offset")->capture_default_str();
  synth->add_option("--beta-pred", synth_args.beta_pred, "Low-SNR detector offset")->capture_default_str();
  synth->add_option("--scale", synth_args.scale, "High/low SNR intensity ratio")->capture_default_str();
  synth->add_option("--poisson-gain", synth_args.poisson_gain, "Shot-noise gain (0 disables)")->capture_default_str();
  synth->add_option("--read-noise", synth_args.read_noise, "Gaussian read-noise sigma")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Base RNG seed")->capture_default_str();
  synth->add_option("--format", synth_args.format, "Image format: mfr, pgm16, or tiff16")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  parallel::set_max_threads(threads);

  try {
    if (cal->parsed()) {
      run_calibrate(cal_args);
    } else if (score->parsed()) {
      run_score(score_args);
    } else if (diag->parsed()) {
      run_diagnose(diag_args);
    } else if (synth->parsed()) {
      run_synth(synth_args);
    }
  } catch (const InvalidState& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
