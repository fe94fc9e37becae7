#pragma once

// Test-only helpers: reference values from Boost (never used by the library
// itself), random instance generators, and constant realignment.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "odequad/odequad.hpp"

namespace testsupport {

using odequad::ClosedFormSolution;
using odequad::Expression;

inline double reference_integral(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

inline double ei(double x) { return boost::math::expint(x); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen_); }
  double sign() { return integer(0, 1) == 0 ? -1.0 : 1.0; }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline std::string num(double v) { return "(" + odequad::format_number(v) + ")"; }

// Smooth functions that stay in [1/2, 5/2] or so on [0, 2].
inline Expression random_positive(Rng& r) {
  const double a = r.uniform(0.2, 1.0);
  const double b = r.uniform(-0.5, 0.5);
  switch (r.integer(0, 4)) {
    case 0: return odequad::parse("1 + " + num(a) + "*x^2");
    case 1: return odequad::parse("exp(" + num(b) + "*x)");
    case 2: return odequad::parse("2 + sin(" + num(a) + "*x + " + num(b) + ")");
    case 3: return odequad::parse("1 + " + num(a) + "*x");
    default: return odequad::parse("sqrt(1 + " + num(a) + "*x^2)");
  }
}

inline Expression random_smooth(Rng& r) {
  const double a = r.uniform(-1.0, 1.0);
  const double b = r.uniform(-1.0, 1.0);
  switch (r.integer(0, 4)) {
    case 0: return odequad::parse(num(a) + " + " + num(b) + "*x");
    case 1: return odequad::parse(num(a) + "*sin(x)");
    case 2: return odequad::parse(num(a) + "*x^2 + " + num(b));
    case 3: return odequad::parse(num(a) + "*exp(" + num(0.5 * b) + "*x)");
    default: return odequad::parse(num(a) + "*atan(x) + " + num(b));
  }
}

// Random expression tree of bounded depth over operations that are defined
// everywhere (no division, logs or roots of arbitrary arguments).
inline Expression random_tree(Rng& r, int depth) {
  using namespace odequad;
  if (depth <= 0 || r.integer(0, 3) == 0) {
    return r.integer(0, 1) == 0 ? var_x() : constant(std::round(r.uniform(-3.0, 3.0) * 4.0) / 4.0);
  }
  const Expression a = random_tree(r, depth - 1);
  switch (r.integer(0, 9)) {
    case 0: return a + random_tree(r, depth - 1);
    case 1: return a - random_tree(r, depth - 1);
    case 2: return a * random_tree(r, depth - 1);
    case 3: return a / (constant(2.0) + fn::sin(random_tree(r, depth - 1)));
    case 4: return fn::sin(a);
    case 5: return fn::cos(a);
    case 6: return fn::atan(a);
    case 7: return fn::exp(fn::sin(a));
    case 8: return fn::sqrt(constant(1.0) + pow(a, 2.0));
    default: return pow(a, static_cast<double>(r.integer(2, 3)));
  }
}

// Relative sup-norm deviation: max |a - b| / max |b| on the points.
inline double sup_relative(const std::function<double(double)>& a, const std::function<double(double)>& b,
                           const std::vector<double>& xs) {
  double num_max = 0.0;
  double den_max = 0.0;
  for (double x : xs) {
    const double bv = b(x);
    num_max = std::max(num_max, std::fabs(a(x) - bv));
    den_max = std::max(den_max, std::fabs(bv));
  }
  return num_max / std::max(den_max, 1e-300);
}

// A one-constant Riccati general solution is a Moebius function of its
// constant, so three evaluations fix the constant matching `target` at x.
inline double realign_mobius(const ClosedFormSolution& sol, double x, double target,
                             std::array<double, 3> probes = {-1.25, 0.5, 1.75}) {
  std::array<double, 3> y{};
  for (int i = 0; i < 3; ++i) y[static_cast<std::size_t>(i)] = sol({probes[static_cast<std::size_t>(i)]}, x);
  const auto [c0, c1, c2] = probes;
  const double rho = (target - y[0]) * (y[1] - y[2]) / ((target - y[2]) * (y[1] - y[0]));
  const double den = (c1 - c2) - rho * (c1 - c0);
  if (den == 0.0) return INFINITY;
  return (c0 * (c1 - c2) - rho * c2 * (c1 - c0)) / den;
}

// Constants (K1, K2) of a two-constant linear solution matching y and y' at x.
inline std::vector<double> fit_linear2(const ClosedFormSolution& sol, double x, double y, double dy) {
  const double a11 = sol({1.0, 0.0}, x);
  const double a12 = sol({0.0, 1.0}, x);
  const double a21 = sol.deriv({1.0, 0.0}, x);
  const double a22 = sol.deriv({0.0, 1.0}, x);
  const double det = a11 * a22 - a12 * a21;
  return {(y * a22 - a12 * dy) / det, (a11 * dy - a21 * y) / det};
}

}  // namespace testsupport
