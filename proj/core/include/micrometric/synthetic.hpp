#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "micrometric/image.hpp"

namespace micrometric {

// Seeded generator of (high-SNR ground truth, low-SNR pseudo-prediction)
// pairs with known offsets, known intensity scale and Poisson-Gaussian noise.
struct SynthParams {
  int height = 512;
  int width = 512;
  int n_blobs = 25;
  std::pair<double, double> amplitude_range = {500.0, 4000.0};
  std::pair<double, double> sigma_range = {3.0, 9.0};  // blob widths, pixels
  double beta_gt = 100.0;
  double beta_pred = 110.0;
  double scale = 5.0;  // high-SNR / low-SNR signal ratio
  double poisson_gain = 1.0;
  double read_noise_sigma = 5.0;
  std::uint64_t seed = 1;
};

struct SynthMetadata {
  double beta_gt = 0.0;
  double beta_pred = 0.0;
  double scale = 0.0;
  double clean_peak = 0.0;  // max of the clean signal
  double gt_peak = 0.0;     // max pixel of the generated ground truth
  double low_peak = 0.0;    // max pixel of the generated low-SNR image
  std::uint64_t seed = 0;
  std::string rng_algorithm;
};

struct SynthPair {
  Image gt;
  Image low;
  SynthMetadata meta;
};

// gt = beta_gt + sum of Gaussian bumps; low = beta_pred + shot-noised
// (clean/scale) plus Gaussian read noise. Identical parameters and seed give
// bit-identical buffers.
SynthPair generate_pair(const SynthParams& params);

// I.i.d. uniform pixels in [low, high); deterministic in the seed.
Image generate_uniform_noise(int height, int width, double low, double high, std::uint64_t seed);

}  // namespace micrometric
