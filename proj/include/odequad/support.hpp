#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "odequad/domain.hpp"
#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/roots.hpp"

namespace odequad {

inline constexpr int kNonvanishingSamples = 201;

// Throws ConstructionError when `e` vanishes (or is undefined) somewhere in
// the domain; zeros are located by sign sampling plus bracketing.
inline void require_nonvanishing(const Expression& e, const DomainInterval& domain, const std::string& what) {
  for (double x : domain.linspace(kNonvanishingSamples)) {
    double v = 0.0;
    try {
      v = e(x);
    } catch (const DomainError& err) {
      throw ConstructionError(what + " is undefined at x = " + format_number(x) + " (" + err.what() + ")");
    }
    if (v == 0.0) throw ConstructionError(what + " vanishes at x = " + format_number(x));
  }
  const auto zeros = sign_change_zeros([&e](double x) { return e(x); }, domain, kNonvanishingSamples);
  if (!zeros.empty()) {
    throw ConstructionError(what + " vanishes at x = " + format_number(zeros.front()) + " inside the domain");
  }
}

// Max |e| over the points, ignoring points where e is undefined.
inline double max_abs(const Expression& e, const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) {
    try {
      m = std::max(m, std::fabs(e(x)));
    } catch (const DomainError&) {
    }
  }
  return m;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Fourth-order central differences at steps h and h/2 (h scaled to |x|),
// combined by one Richardson step into a sixth-order estimate.
inline double central_derivative(const std::function<double(double)>& f, double x) {
  auto d4 = [&f, x](double h) {
    return (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
  };
  const double h = 5e-4 * (1.0 + std::fabs(x));
  const double coarse = d4(h);
  const double fine = d4(0.5 * h);
  return fine + (fine - coarse) / 15.0;
}

}  // namespace odequad
