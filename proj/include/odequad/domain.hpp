#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "odequad/errors.hpp"

namespace odequad {

class DomainInterval {
 public:
  DomainInterval(double lo, double hi, bool lo_open = false, bool hi_open = false)
      : lo_(lo), hi_(hi), lo_open_(lo_open), hi_open_(hi_open) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw ConstructionError("invalid domain interval [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    }
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool lo_open() const noexcept { return lo_open_; }
  bool hi_open() const noexcept { return hi_open_; }
  double length() const noexcept { return hi_ - lo_; }

  bool contains(double x) const noexcept {
    const bool above = lo_open_ ? x > lo_ : x >= lo_;
    const bool below = hi_open_ ? x < hi_ : x <= hi_;
    return above && below;
  }

  // n equispaced points; open ends are nudged inward by a hair.
  std::vector<double> linspace(int n) const {
    std::vector<double> pts;
    if (n <= 0) return pts;
    if (n == 1) {
      pts.push_back(0.5 * (lo_ + hi_));
      return pts;
    }
    const double a = lo_open_ ? lo_ + 1e-9 * length() : lo_;
    const double b = hi_open_ ? hi_ - 1e-9 * length() : hi_;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pts.push_back(i == n - 1 ? b : a + (b - a) * i / (n - 1));
    }
    return pts;
  }

  // Chebyshev points of the first kind mapped into the interior.
  std::vector<double> chebyshev(int n) const {
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(n));
    const double mid = 0.5 * (lo_ + hi_);
    const double half = 0.5 * length();
    for (int i = n - 1; i >= 0; --i) {
      pts.push_back(mid + half * std::cos(std::numbers::pi * (i + 0.5) / n));
    }
    return pts;
  }

  friend bool operator==(const DomainInterval&, const DomainInterval&) = default;

 private:
  double lo_;
  double hi_;
  bool lo_open_;
  bool hi_open_;
};

}  // namespace odequad
