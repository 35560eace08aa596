#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace micrometric {

enum class WindowKind { gaussian, uniform };

// Odd, normalized sliding window. Both kinds are outer products of a 1-D
// factor, which the statistics kernel exploits for separable convolution;
// weights() materializes the full side x side grid.
class Window {
public:
  Window() = default;
  Window(WindowKind kind, int side, double sigma, std::vector<double> factor);

  WindowKind kind() const { return kind_; }
  int side() const { return side_; }
  double sigma() const { return sigma_; }
  int pixel_count() const { return side_ * side_; }

  // 1-D factor, sums to 1.
  std::span<const double> factor() const { return factor_; }

  // Full 2-D weights, row-major, sum to 1 within 1e-12.
  std::vector<double> weights() const;

private:
  WindowKind kind_ = WindowKind::gaussian;
  int side_ = 0;
  double sigma_ = 0.0;
  std::vector<double> factor_;
};

// Builds a normalized window. `side` must be odd and >= 3; gaussian windows
// require sigma > 0 and sample exp(-(dx^2+dy^2)/(2 sigma^2)) at integer
// offsets before normalizing.
Window make_window(WindowKind kind, int side, std::optional<double> sigma = std::nullopt);

const char* window_kind_name(WindowKind kind);
WindowKind window_kind_from_name(std::string_view name);

}  // namespace micrometric
