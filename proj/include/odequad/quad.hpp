#pragma once

// Adaptive quadrature and cumulative antiderivatives.
//
// integrate() is a globally adaptive Gauss-Kronrod (7/15) scheme: the panel
// with the largest |K15 - G7| estimate is bisected until the summed estimate
// drops below tol * (1 + |result|).
//
// Antiderivative keeps a sorted list of checkpoints x_k with cached values
// F(x_k) = integral from x0 to x_k. Consecutive checkpoints bound panels that
// passed the same error test; a query is answered from the nearest checkpoint
// with one Kronrod rule over the partial panel. Because the partial rule is a
// smooth function of the query point, values can be finite-differenced.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <string>
#include <vector>

#include "odequad/errors.hpp"

namespace odequad {

using RealFunction = std::function<double(double)>;

inline constexpr double kDefaultQuadTol = 1e-10;

namespace detail {

// Gauss-Kronrod 15-point nodes (positive half) and weights; every second
// node is a 7-point Gauss node.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct RuleResult {
  double value;
  double error;
};

inline double sample(const RealFunction& f, double x) {
  double v = 0.0;
  try {
    v = f(x);
  } catch (const DomainError& e) {
    throw QuadratureError(std::string("integrand undefined at x = ") + std::to_string(x) + ": " + e.what());
  }
  if (!std::isfinite(v)) {
    throw QuadratureError("non-finite integrand sample at x = " + std::to_string(x));
  }
  return v;
}

inline RuleResult gauss_kronrod15(const RealFunction& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = sample(f, center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[static_cast<std::size_t>(j)];
    const double pair = sample(f, center - dx) + sample(f, center + dx);
    kronrod += kWgk[static_cast<std::size_t>(j)] * pair;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * pair;
  }
  return {kronrod * half, std::fabs((kronrod - gauss) * half)};
}

}  // namespace detail

struct QuadratureOptions {
  double tol = kDefaultQuadTol;
  int max_depth = 50;
  int max_panels = 20000;
};

// Integral of f over [a, b]; integrate(f, b, a) == -integrate(f, a, b).
inline double integrate(const RealFunction& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, opt);

  struct Panel {
    double a, b, value, error;
    int depth;
    bool operator<(const Panel& o) const { return error < o.error; }
  };

  std::priority_queue<Panel> panels;
  const auto first = detail::gauss_kronrod15(f, a, b);
  panels.push({a, b, first.value, first.error, 0});
  double total = first.value;
  double total_error = first.error;
  int count = 1;

  while (total_error > opt.tol * (1.0 + std::fabs(total))) {
    Panel worst = panels.top();
    panels.pop();
    if (worst.depth >= opt.max_depth || count >= opt.max_panels) {
      throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", " +
                            std::to_string(b) + "]; error estimate " + std::to_string(total_error));
    }
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::gauss_kronrod15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push({worst.a, mid, left.value, left.error, worst.depth + 1});
    panels.push({mid, worst.b, right.value, right.error, worst.depth + 1});
    ++count;
    // Re-sum occasionally so cancellation in the running totals cannot drift.
    if (count % 64 == 0) {
      auto copy = panels;
      total = 0.0;
      total_error = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_error += copy.top().error;
        copy.pop();
      }
    }
  }
  return total;
}

inline double integrate(const RealFunction& f, double a, double b, double tol) {
  QuadratureOptions opt;
  opt.tol = tol;
  return integrate(f, a, b, opt);
}

class Antiderivative {
 public:
  // Panels never straddle a breakpoint, so an integrand evaluated with
  // cancellation near one is never sampled across it.
  Antiderivative(RealFunction integrand, double x0, double tol = kDefaultQuadTol,
                 std::vector<double> breakpoints = {})
      : f_(std::move(integrand)), x0_(x0), tol_(tol), breaks_(std::move(breakpoints)) {
    std::sort(breaks_.begin(), breaks_.end());
    checkpoints_.emplace(x0_, 0.0);
  }

  Antiderivative(const Antiderivative&) = delete;
  Antiderivative& operator=(const Antiderivative&) = delete;

  double basepoint() const noexcept { return x0_; }
  double tolerance() const noexcept { return tol_; }
  const RealFunction& integrand() const noexcept { return f_; }

  double operator()(double x) const { return value(x); }

  // Integral of the integrand from the basepoint to x.
  double value(double x) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!std::isfinite(x)) throw QuadratureError("antiderivative queried at non-finite x");
    if (x > checkpoints_.rbegin()->first) extend_to(x);
    if (x < checkpoints_.begin()->first) extend_to(x);

    auto hit = checkpoints_.find(x);
    if (hit != checkpoints_.end()) return hit->second;
    auto right = checkpoints_.upper_bound(x);
    auto left = std::prev(right);
    const auto& near = (right == checkpoints_.end() || x - left->first <= right->first - x) ? *left : *right;
    return near.second + partial(near.first, x);
  }

  std::size_t checkpoint_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return checkpoints_.size();
  }

 private:
  double partial(double from, double to) const {
    if (from < to) return detail::gauss_kronrod15(f_, from, to).value;
    return -detail::gauss_kronrod15(f_, to, from).value;
  }

  // Adds validated panels from the outermost checkpoint until x is covered.
  void extend_to(double x) const {
    const bool rightward = x > checkpoints_.rbegin()->first;
    double c = rightward ? checkpoints_.rbegin()->first : checkpoints_.begin()->first;
    double v = rightward ? checkpoints_.rbegin()->second : checkpoints_.begin()->second;
    double h = std::min(std::fabs(x - c), step_);
    const double min_step = 1e-13 * (1.0 + std::fabs(c) + std::fabs(x));
    while (rightward ? c < x : c > x) {
      const double remaining = std::fabs(x - c);
      if (h > remaining) h = remaining;
      double a = rightward ? c : c - h;
      double b = rightward ? c + h : c;
      bool at_break = false;
      if (rightward) {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), a);
        if (it != breaks_.end() && *it < b) b = *it, at_break = true;
      } else {
        auto it = std::lower_bound(breaks_.begin(), breaks_.end(), b);
        if (it != breaks_.begin() && *std::prev(it) > a) a = *std::prev(it), at_break = true;
      }
      const auto r = detail::gauss_kronrod15(f_, a, b);
      if (r.error <= 0.1 * tol_ * (1.0 + std::fabs(v) + std::fabs(r.value))) {
        v += rightward ? r.value : -r.value;
        c = (h == remaining && !at_break) ? x : (rightward ? b : a);
        checkpoints_.emplace(c, v);
        if (checkpoints_.size() > kMaxCheckpoints) {
          throw QuadratureError("antiderivative exceeded checkpoint budget");
        }
        step_ = std::max(step_, h);
        h *= 2.0;
      } else {
        h *= 0.5;
        step_ = h;
        if (h < min_step) {
          throw QuadratureError("antiderivative step underflow near x = " + std::to_string(c));
        }
      }
    }
  }

  static constexpr std::size_t kMaxCheckpoints = 200000;

  RealFunction f_;
  double x0_;
  double tol_;
  mutable std::mutex mu_;
  std::vector<double> breaks_;
  mutable std::map<double, double> checkpoints_;
  mutable double step_{0.25};
};

using AntiderivativePtr = std::shared_ptr<const Antiderivative>;

inline AntiderivativePtr antiderivative(RealFunction f, double x0, double tol = kDefaultQuadTol,
                                        std::vector<double> breakpoints = {}) {
  return std::make_shared<const Antiderivative>(std::move(f), x0, tol, std::move(breakpoints));
}

}  // namespace odequad
