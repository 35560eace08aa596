#include "micrometric/window.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace micrometric {

Window::Window(WindowKind kind, int side, double sigma, std::vector<double> factor)
    : kind_(kind), side_(side), sigma_(sigma), factor_(std::move(factor)) {}

std::vector<double> Window::weights() const {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_));
  for (int r = 0; r < side_; ++r) {
    for (int c = 0; c < side_; ++c) {
      w.push_back(factor_[static_cast<std::size_t>(r)] * factor_[static_cast<std::size_t>(c)]);
    }
  }
  return w;
}

Window make_window(WindowKind kind, int side, std::optional<double> sigma) {
  if (side < 3 || side % 2 == 0) {
    throw std::invalid_argument("window side must be odd and >= 3, got " + std::to_string(side));
  }
  std::vector<double> factor(static_cast<std::size_t>(side));
  double sigma_value = 0.0;
  if (kind == WindowKind::gaussian) {
    if (!sigma.has_value() || *sigma <= 0.0) {
      throw std::invalid_argument("gaussian window requires sigma > 0");
    }
    sigma_value = *sigma;
    const int half = side / 2;
    double total = 0.0;
    for (int i = 0; i < side; ++i) {
      const double dx = static_cast<double>(i - half);
      factor[static_cast<std::size_t>(i)] = std::exp(-(dx * dx) / (2.0 * sigma_value * sigma_value));
      total += factor[static_cast<std::size_t>(i)];
    }
    for (auto& f : factor) f /= total;
  } else {
    const double w = 1.0 / static_cast<double>(side);
    for (auto& f : factor) f = w;
  }
  return Window(kind, side, sigma_value, std::move(factor));
}

const char* window_kind_name(WindowKind kind) {
  return kind == WindowKind::gaussian ? "gaussian" : "uniform";
}

WindowKind window_kind_from_name(std::string_view name) {
  if (name == "gaussian") return WindowKind::gaussian;
  if (name == "uniform") return WindowKind::uniform;
  throw std::invalid_argument("unknown window kind: " + std::string(name));
}

}  // namespace micrometric
