#include "micrometric/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "micrometric/parallel.hpp"

namespace micrometric {

namespace {

void check_dims(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("image dimensions must be positive, got " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
}

}  // namespace

Image::Image(int height, int width) : height_(height), width_(width) {
  check_dims(height, width);
  pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0.0);
}

Image::Image(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  check_dims(height, width);
  if (pixels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw std::invalid_argument("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  for (const double v : pixels_) {
    if (!std::isfinite(v)) throw std::invalid_argument("image contains a non-finite pixel value");
  }
}

double Image::min_value() const { return *std::min_element(pixels_.begin(), pixels_.end()); }

double Image::max_value() const { return *std::max_element(pixels_.begin(), pixels_.end()); }

double Image::mean_value() const { return parallel::deterministic_mean(pixels_); }

}  // namespace micrometric
