#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace micrometric {

// 2D grid of real-valued intensities, row-major. Values may be negative
// after preprocessing; NaN/Inf are rejected at construction.
class Image {
public:
  Image() = default;

  // Zero-filled image.
  Image(int height, int width);

  // Takes ownership of row-major pixel data; pixels.size() must equal
  // height * width and every value must be finite.
  Image(int height, int width, std::vector<double> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double operator()(int row, int col) const {
    return pixels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col)];
  }
  double& operator()(int row, int col) {
    return pixels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col)];
  }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }
  const double* data() const { return pixels_.data(); }
  double* data() { return pixels_.data(); }

  // Source bit depth when decoded from an integer format, 0 when unknown.
  // Drives the dtype_range data-range policy.
  int bit_depth() const { return bit_depth_; }
  void set_bit_depth(int bits) { bit_depth_ = bits; }

  double min_value() const;
  double max_value() const;
  double mean_value() const;

private:
  int height_ = 0;
  int width_ = 0;
  int bit_depth_ = 0;
  std::vector<double> pixels_;
};

}  // namespace micrometric
