#pragma once

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "odequad/domain.hpp"
#include "odequad/errors.hpp"

namespace odequad {

// Root of f inside [a, b]; f(a) and f(b) must differ in sign.
inline double bracket_root(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-14) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw ConstructionError("bracket_root: interval does not bracket a root");
  std::uintmax_t max_iter = 200;
  auto tol = [rel_tol](double l, double r) { return std::fabs(r - l) <= rel_tol * (std::fabs(l) + std::fabs(r)) + 1e-300; };
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
  return 0.5 * (lo + hi);
}

// Zeros of f on the domain located by sign sampling on n equispaced points and
// refined by bracketing. Points where f throws are skipped.
inline std::vector<double> sign_change_zeros(const std::function<double(double)>& f,
                                             const DomainInterval& domain, int n) {
  std::vector<double> zeros;
  const auto xs = domain.linspace(n);
  bool have_prev = false;
  double prev_x = 0.0;
  double prev_v = 0.0;
  for (double x : xs) {
    double v = 0.0;
    try {
      v = f(x);
    } catch (const Error&) {
      have_prev = false;
      continue;
    }
    if (!std::isfinite(v)) {
      have_prev = false;
      continue;
    }
    if (v == 0.0) {
      zeros.push_back(x);
    } else if (have_prev && prev_v != 0.0 && ((prev_v > 0.0) != (v > 0.0))) {
      try {
        zeros.push_back(bracket_root(f, prev_x, x));
      } catch (const Error&) {
        zeros.push_back(0.5 * (prev_x + x));
      }
    }
    have_prev = true;
    prev_x = x;
    prev_v = v;
  }
  return zeros;
}

}  // namespace odequad
