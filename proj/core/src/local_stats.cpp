#include "micrometric/local_stats.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "micrometric/parallel.hpp"

namespace micrometric {

StatsGrid::StatsGrid(int height, int width) : height_(height), width_(width) {
  const auto n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  ux.assign(n, 0.0);
  uy.assign(n, 0.0);
  vx.assign(n, 0.0);
  vy.assign(n, 0.0);
  vxy.assign(n, 0.0);
}

void StatsSet::push_back(const WindowStats& s) {
  ux.push_back(s.ux);
  uy.push_back(s.uy);
  vx.push_back(s.vx);
  vy.push_back(s.vy);
  vxy.push_back(s.vxy);
}

void StatsSet::append(const StatsGrid& grid, int stride) {
  if (stride < 1) throw std::invalid_argument("stats stride must be >= 1");
  for (int r = 0; r < grid.height(); r += stride) {
    for (int c = 0; c < grid.width(); c += stride) {
      const auto i = static_cast<std::size_t>(r) * static_cast<std::size_t>(grid.width()) + static_cast<std::size_t>(c);
      ux.push_back(grid.ux[i]);
      uy.push_back(grid.uy[i]);
      vx.push_back(grid.vx[i]);
      vy.push_back(grid.vy[i]);
      vxy.push_back(grid.vxy[i]);
    }
  }
}

void StatsSet::reserve(std::size_t n) {
  ux.reserve(n);
  uy.reserve(n);
  vx.reserve(n);
  vy.reserve(n);
  vxy.reserve(n);
}

namespace {

// Horizontal then vertical pass of the separable window over `plane`
// (in: H x W), producing the valid-region convolution (out: (H-s+1) x (W-s+1)).
// `mid` is shared scratch of size H x (W-s+1).
void separable_valid_convolve(const double* plane, int height, int width, std::span<const double> factor,
                              double* mid, double* out) {
  const int side = static_cast<int>(factor.size());
  const int out_w = width - side + 1;
  const int out_h = height - side + 1;

  parallel::parallel_for(static_cast<std::size_t>(height), [&](std::size_t rb, std::size_t re) {
    for (std::size_t r = rb; r < re; ++r) {
      const double* row = plane + r * static_cast<std::size_t>(width);
      double* mrow = mid + r * static_cast<std::size_t>(out_w);
      for (int c = 0; c < out_w; ++c) {
        double acc = 0.0;
        for (int k = 0; k < side; ++k) acc += factor[static_cast<std::size_t>(k)] * row[c + k];
        mrow[c] = acc;
      }
    }
  });

  parallel::parallel_for(static_cast<std::size_t>(out_h), [&](std::size_t rb, std::size_t re) {
    for (std::size_t r = rb; r < re; ++r) {
      double* orow = out + r * static_cast<std::size_t>(out_w);
      std::fill(orow, orow + out_w, 0.0);
      for (int k = 0; k < side; ++k) {
        const double w = factor[static_cast<std::size_t>(k)];
        const double* mrow = mid + (r + static_cast<std::size_t>(k)) * static_cast<std::size_t>(out_w);
        for (int c = 0; c < out_w; ++c) orow[c] += w * mrow[c];
      }
    }
  });
}

}  // namespace

std::vector<double> local_mean(const Image& img, const Window& window) {
  const int side = window.side();
  if (img.height() < side || img.width() < side) {
    throw std::invalid_argument("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                                " is smaller than the " + std::to_string(side) + "x" + std::to_string(side) +
                                " window");
  }
  const int out_h = img.height() - side + 1;
  const int out_w = img.width() - side + 1;
  std::vector<double> out(static_cast<std::size_t>(out_h) * static_cast<std::size_t>(out_w));
  std::vector<double> mid(static_cast<std::size_t>(img.height()) * static_cast<std::size_t>(out_w));
  separable_valid_convolve(img.data(), img.height(), img.width(), window.factor(), mid.data(), out.data());
  return out;
}

StatsGrid local_statistics(const Image& x, const Image& y, const Window& window, VarianceMode mode) {
  if (x.height() != y.height() || x.width() != y.width()) {
    throw std::invalid_argument("image dimensions differ: " + std::to_string(x.height()) + "x" +
                                std::to_string(x.width()) + " vs " + std::to_string(y.height()) + "x" +
                                std::to_string(y.width()));
  }
  const int side = window.side();
  if (x.height() < side || x.width() < side) {
    throw std::invalid_argument("image " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                                " is smaller than the " + std::to_string(side) + "x" + std::to_string(side) +
                                " window");
  }
  if (mode == VarianceMode::sample && window.kind() != WindowKind::uniform) {
    throw std::invalid_argument("sample variance mode is only defined for uniform windows");
  }

  const int height = x.height();
  const int width = x.width();
  const int out_h = height - side + 1;
  const int out_w = width - side + 1;
  const auto n_in = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  const auto n_out = static_cast<std::size_t>(out_h) * static_cast<std::size_t>(out_w);

  StatsGrid grid(out_h, out_w);

  // Moment planes: x^2, y^2, x*y share one buffer each pass.
  std::vector<double> plane(n_in);
  std::vector<double> mid(static_cast<std::size_t>(height) * static_cast<std::size_t>(out_w));

  separable_valid_convolve(x.data(), height, width, window.factor(), mid.data(), grid.ux.data());
  separable_valid_convolve(y.data(), height, width, window.factor(), mid.data(), grid.uy.data());

  const double* xs = x.data();
  const double* ys = y.data();

  auto fill_plane = [&](auto&& gen) {
    parallel::parallel_for(n_in, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) plane[i] = gen(i);
    });
  };

  fill_plane([&](std::size_t i) { return xs[i] * xs[i]; });
  separable_valid_convolve(plane.data(), height, width, window.factor(), mid.data(), grid.vx.data());
  fill_plane([&](std::size_t i) { return ys[i] * ys[i]; });
  separable_valid_convolve(plane.data(), height, width, window.factor(), mid.data(), grid.vy.data());
  fill_plane([&](std::size_t i) { return xs[i] * ys[i]; });
  separable_valid_convolve(plane.data(), height, width, window.factor(), mid.data(), grid.vxy.data());

  // Second moments -> central moments; rounding can push a variance a hair
  // below zero, clamp it.
  double correction = 1.0;
  if (mode == VarianceMode::sample) {
    const double k = static_cast<double>(window.pixel_count());
    correction = k / (k - 1.0);
  }
  double* uxp = grid.ux.data();
  double* uyp = grid.uy.data();
  double* vxp = grid.vx.data();
  double* vyp = grid.vy.data();
  double* vxyp = grid.vxy.data();
  parallel::parallel_for(n_out, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double mx = uxp[i];
      const double my = uyp[i];
      vxp[i] = std::max(0.0, (vxp[i] - mx * mx) * correction);
      vyp[i] = std::max(0.0, (vyp[i] - my * my) * correction);
      vxyp[i] = (vxyp[i] - mx * my) * correction;
    }
  });

  return grid;
}

}  // namespace micrometric
