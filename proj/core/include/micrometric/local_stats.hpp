#pragma once

#include <cstddef>
#include <vector>

#include "micrometric/image.hpp"
#include "micrometric/metric_config.hpp"
#include "micrometric/window.hpp"

namespace micrometric {

// Weighted local statistics of one window position.
struct WindowStats {
  double ux = 0.0;   // local mean of x
  double uy = 0.0;   // local mean of y
  double vx = 0.0;   // local variance of x (>= 0, clamped)
  double vy = 0.0;   // local variance of y (>= 0, clamped)
  double vxy = 0.0;  // local covariance
};

// Per-window statistics over the valid region (window fully inside the
// image), stored as parallel arrays.
class StatsGrid {
public:
  StatsGrid() = default;
  StatsGrid(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t count() const { return ux.size(); }

  WindowStats at(std::size_t i) const { return {ux[i], uy[i], vx[i], vy[i], vxy[i]}; }

  std::vector<double> ux, uy, vx, vy, vxy;

private:
  int height_ = 0;
  int width_ = 0;
};

// Flat pool of window statistics drawn from one or more grids; the unit the
// scale-factor objective is evaluated on.
struct StatsSet {
  std::vector<double> ux, uy, vx, vy, vxy;

  std::size_t size() const { return ux.size(); }
  bool empty() const { return ux.empty(); }
  WindowStats at(std::size_t i) const { return {ux[i], uy[i], vx[i], vy[i], vxy[i]}; }

  void push_back(const WindowStats& s);
  // Appends every stride-th window position (both axes) of the grid.
  void append(const StatsGrid& grid, int stride = 1);
  void reserve(std::size_t n);
};

// Weighted mean/variance/covariance at every valid window position. The two
// images must have identical dimensions, each at least the window side.
// Variances are the plain weighted second moment, clamped at zero; the sample
// mode applies K/(K-1) and requires a uniform window.
StatsGrid local_statistics(const Image& x, const Image& y, const Window& window,
                           VarianceMode mode = VarianceMode::population);

// Just the weighted local mean over the valid region, row-major.
std::vector<double> local_mean(const Image& img, const Window& window);

}  // namespace micrometric
