#pragma once

// Independent checks for closed-form solutions: an explicit Runge-Kutta
// integrator (Dormand-Prince 5(4)) and a residual evaluator that
// differentiates the candidate numerically, never through its own
// derivative formulas.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "odequad/domain.hpp"
#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/reducible.hpp"
#include "odequad/riccati.hpp"
#include "odequad/solution.hpp"

namespace odequad {

using VectorField = std::function<void(double x, std::span<const double> y, std::span<double> dydx)>;

struct IVPResult {
  std::vector<double> xs;
  std::vector<std::vector<double>> ys;
  double error_estimate{0.0};  // largest accepted scaled local error (<= 1)
  bool success{false};
  std::size_t steps{0};
  std::size_t rejected{0};
};

struct IVPOptions {
  double rtol{1e-10};
  double atol{1e-12};
  double initial_step{0.0};  // 0 picks one from the span
  std::size_t max_steps{2'000'000};
};

namespace detail {

struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - b* (fifth minus fourth order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

// Integrates y' = rhs(x, y) from x0 to x_end (either direction), landing
// exactly on every sample point in between. Throws IntegrationError on step
// underflow or a non-finite field with the last good abscissa attached.
inline IVPResult solve_ivp(const VectorField& rhs, double x0, std::vector<double> y0, double x_end,
                           const IVPOptions& opt, std::vector<double> samples = {}) {
  using DP = detail::DormandPrince;
  const std::size_t n = y0.size();
  const double dir = x_end >= x0 ? 1.0 : -1.0;
  IVPResult out;
  std::erase_if(samples, [&](double s) { return dir * (s - x0) < 0.0 || dir * (s - x_end) > 0.0; });
  std::sort(samples.begin(), samples.end(), [dir](double a, double b) { return dir * a < dir * b; });
  if (samples.empty() || samples.back() != x_end) samples.push_back(x_end);

  std::vector<double> y = std::move(y0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
  double x = x0;
  std::size_t next = 0;
  while (next < samples.size() && samples[next] == x0) {
    out.xs.push_back(x0);
    out.ys.push_back(y);
    ++next;
  }
  if (x0 == x_end) {
    out.success = true;
    return out;
  }

  const double span = std::fabs(x_end - x0);
  double h = opt.initial_step > 0.0 ? opt.initial_step : 1e-4 * span;
  rhs(x, y, k1);
  bool last_rejected = false;

  auto stage = [&](std::vector<double>& dst, std::initializer_list<std::pair<const std::vector<double>*, double>> terms,
                   double hh) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& [k, a] : terms) s += a * (*k)[i];
      dst[i] = y[i] + hh * s;
    }
  };

  while (next < samples.size()) {
    if (out.steps + out.rejected > opt.max_steps) {
      throw IntegrationError("step budget exhausted", x);
    }
    const double target = samples[next];
    double step = dir * std::min(h, std::fabs(target - x));
    const bool lands = std::fabs(target - x) <= h;

    stage(tmp, {{&k1, DP::a21}}, step);
    rhs(x + DP::c2 * step, tmp, k2);
    stage(tmp, {{&k1, DP::a31}, {&k2, DP::a32}}, step);
    rhs(x + DP::c3 * step, tmp, k3);
    stage(tmp, {{&k1, DP::a41}, {&k2, DP::a42}, {&k3, DP::a43}}, step);
    rhs(x + DP::c4 * step, tmp, k4);
    stage(tmp, {{&k1, DP::a51}, {&k2, DP::a52}, {&k3, DP::a53}, {&k4, DP::a54}}, step);
    rhs(x + DP::c5 * step, tmp, k5);
    stage(tmp, {{&k1, DP::a61}, {&k2, DP::a62}, {&k3, DP::a63}, {&k4, DP::a64}, {&k5, DP::a65}}, step);
    rhs(x + step, tmp, k6);
    stage(ynew, {{&k1, DP::b1}, {&k3, DP::b3}, {&k4, DP::b4}, {&k5, DP::b5}, {&k6, DP::b6}}, step);
    rhs(x + step, ynew, k7);

    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = step * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] + DP::e6 * k6[i] +
                               DP::e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      if (!std::isfinite(ynew[i]) || !std::isfinite(e) || !std::isfinite(k7[i])) finite = false;
      err = std::max(err, std::fabs(e) / sc);
    }

    if (finite && err <= 1.0) {
      x = lands ? target : x + step;
      y = ynew;
      k1 = k7;
      ++out.steps;
      out.error_estimate = std::max(out.error_estimate, err);
      if (lands) {
        out.xs.push_back(x);
        out.ys.push_back(y);
        ++next;
      }
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      // A step clipped to land on a sample does not shrink the working step.
      const bool clipped = std::fabs(step) < h;
      if (!clipped) h = std::fabs(step) * (last_rejected ? std::min(grow, 1.0) : grow);
      last_rejected = false;
    } else {
      ++out.rejected;
      h = std::fabs(step) * (finite ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2);
      last_rejected = true;
      if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x))) {
        throw IntegrationError("step size underflow near x = " + format_number(x), x);
      }
    }
  }
  out.success = true;
  return out;
}

inline IVPResult solve_ivp(const VectorField& rhs, double x0, std::vector<double> y0, double x_end, double tol,
                           std::vector<double> samples = {}) {
  IVPOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  return solve_ivp(rhs, x0, std::move(y0), x_end, opt, std::move(samples));
}

// ---------------------------------------------------------------------------
// Finite differences

// Fornberg's weights: w[k][j] is the weight of f(nodes[j]) in the k-th
// derivative at z, for k = 0..m.
inline std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> nodes, int m) {
  const std::size_t n = nodes.size();
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m) + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          const auto ku = static_cast<std::size_t>(k);
          c[ku][i] = c1 * (k * c[ku - 1][i - 1] - c5 * c[ku][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        const auto ku = static_cast<std::size_t>(k);
        c[ku][j] = (c4 * c[ku][j] - k * c[ku - 1][j]) / c3;
      }
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Equations in explicit form y^(n) = F(x, y, ..., y^(n-1)).

struct ExplicitODE {
  int order;
  std::function<double(double, std::span<const double>)> highest;
  // Largest magnitude among the equation's individual terms, given
  // (y, ..., y^(n)); used to normalize residuals.
  std::function<double(double, std::span<const double>)> term_scale;
  DomainInterval domain;
};

inline ExplicitODE as_explicit(const RiccatiEquation& eq) {
  auto highest = [eq](double x, std::span<const double> d) { return eq.rhs(x, d[0]); };
  auto scale = [eq](double x, std::span<const double> d) {
    const double y = d[0];
    return std::max({std::fabs(d[1]), std::fabs(eq.P(x)), std::fabs(eq.Q(x) * y), std::fabs(eq.R(x) * y * y)});
  };
  return {1, highest, scale, eq.domain};
}

inline ExplicitODE as_explicit(const LinearODE& ode) {
  const int n = ode.order;
  auto highest = [ode, n](double x, std::span<const double> d) {
    double v = ode.forcing ? (*ode.forcing)(x) : 0.0;
    for (int i = 0; i < n; ++i) v -= ode.coeffs[static_cast<std::size_t>(i)](x) * d[static_cast<std::size_t>(n - 1 - i)];
    return v;
  };
  auto scale = [ode, n](double x, std::span<const double> d) {
    double s = std::fabs(d[static_cast<std::size_t>(n)]);
    if (ode.forcing) s = std::max(s, std::fabs((*ode.forcing)(x)));
    for (int i = 0; i < n; ++i) {
      s = std::max(s, std::fabs(ode.coeffs[static_cast<std::size_t>(i)](x) * d[static_cast<std::size_t>(n - 1 - i)]));
    }
    return s;
  };
  return {n, highest, scale, ode.domain};
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyOptions {
  int points{101};
  double tol{1e-6};
  bool ivp_anchor{false};
  double ivp_tol{1e-11};  // integrator tolerance, not the agreement threshold
  double guard_band{1e-3};  // half-width around poles, relative to the domain length
  double step{0.0};  // finite-difference step; 0 picks one from the domain length
};

struct VerificationReport {
  double max_residual{0.0};  // max |residual| / max term magnitude on the grid
  double worst_x{0.0};
  double term_scale{0.0};
  bool ivp_checked{false};
  double max_ivp_deviation{0.0};  // max |y_ivp - y| / max |y| on the anchored segment
  int points_used{0};
  int points_excluded{0};
  std::string grid;
  std::vector<std::string> notes;
  double tol{0.0};
  bool pass{false};
};

namespace detail {

// Seven nodes for first and second derivatives, nine for third.
inline int stencil_size(int order) { return order >= 3 ? 9 : 7; }

inline double fd_step(const DomainInterval& d, int order, double requested) {
  if (requested > 0.0) return requested;
  switch (order) {
    case 1: return 1e-3 * d.length();
    case 2: return 2e-3 * d.length();
    default: return 1e-2 * d.length();
  }
}

struct Derivatives {
  std::vector<double> d;  // y, y', ..., y^(order)
  bool ok{false};
};

// Derivatives of the solution at x from a centered stencil, or one shifted to
// stay inside the domain, always outside the pole guard bands. Near a pole the step shrinks so
// that the stencil stays small against the distance to it.
inline Derivatives stencil_derivatives(const std::function<double(double)>& y, double x, int order, double h,
                                       const DomainInterval& dom, const std::vector<double>& poles, double guard) {
  const double lo = dom.lo_open() ? dom.lo() + 1e-9 * dom.length() : dom.lo();
  const double hi = dom.hi_open() ? dom.hi() - 1e-9 * dom.length() : dom.hi();
  for (double p : poles) h = std::min(h, std::fabs(x - p) / 50.0);
  const int size = stencil_size(order);
  const int half = size / 2;
  std::vector<double> nodes(static_cast<std::size_t>(size));
  std::vector<double> vals(static_cast<std::size_t>(size));
  for (int k = 0; k <= 2 * half; ++k) {
    const int s = (k % 2 == 1 ? 1 : -1) * ((k + 1) / 2);  // 0, 1, -1, 2, -2, ...
    bool fits = true;
    for (int j = 0; j < size; ++j) {
      const double t = x + (j - half + s) * h;
      nodes[static_cast<std::size_t>(j)] = t;
      // The centered stencil may reach past the ends when the evaluator is
      // defined there; shifted ones must stay inside.
      if (k > 0 && (t < lo - 1e-12 * dom.length() || t > hi + 1e-12 * dom.length())) fits = false;
      for (double p : poles) {
        if (std::fabs(t - p) <= guard) fits = false;
      }
    }
    if (!fits) continue;
    try {
      for (int j = 0; j < size; ++j) vals[static_cast<std::size_t>(j)] = y(nodes[static_cast<std::size_t>(j)]);
    } catch (const Error&) {
      continue;
    }
    const auto w = fornberg_weights(x, nodes, order);
    Derivatives out;
    out.d.assign(static_cast<std::size_t>(order) + 1, 0.0);
    out.d[0] = y(x);
    for (int m = 1; m <= order; ++m) {
      double acc = 0.0;
      for (int j = 0; j < size; ++j) {
        acc += w[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] * vals[static_cast<std::size_t>(j)];
      }
      out.d[static_cast<std::size_t>(m)] = acc;
    }
    out.ok = true;
    return out;
  }
  return {};
}

}  // namespace detail

inline VerificationReport verify(const ClosedFormSolution& sol, const ExplicitODE& eq, Constants constants,
                                 const VerifyOptions& opt = {}) {
  const DomainInterval& dom = eq.domain;
  const int order = eq.order;
  VerificationReport rep;
  rep.tol = opt.tol;
  rep.grid = std::to_string(opt.points) + " equispaced points on [" + format_number(dom.lo()) + ", " +
             format_number(dom.hi()) + "]";
  const std::vector<double> c(constants.begin(), constants.end());
  const auto y = [&sol, &c](double x) { return sol(c, x); };
  const double guard = opt.guard_band * dom.length();
  const double h = detail::fd_step(dom, order, opt.step);

  std::vector<double> poles;
  try {
    poles = sol.pole_locations(c);
  } catch (const Error& e) {
    rep.notes.push_back(std::string("pole search failed: ") + e.what());
  }
  for (double p : poles) rep.notes.push_back("pole excluded near x = " + format_number(p));

  struct Sample {
    double x;
    std::vector<double> d;
  };
  std::vector<Sample> samples;
  std::vector<double> excluded;
  for (double x : dom.linspace(opt.points)) {
    bool near_pole = false;
    for (double p : poles) near_pole = near_pole || std::fabs(x - p) <= guard;
    if (near_pole) {
      excluded.push_back(x);
      continue;
    }
    detail::Derivatives der;
    try {
      der = detail::stencil_derivatives(y, x, order, h, dom, poles, guard);
      // Halve the step while the residual still moves by more than a percent
      // of the tolerance; stop once roundoff makes it move more, not less.
      auto residual_of = [&](const detail::Derivatives& d) {
        return d.d[static_cast<std::size_t>(order)] - eq.highest(x, d.d);
      };
      double hx = h;
      double last_change = std::numeric_limits<double>::infinity();
      for (int halving = 0; der.ok && halving < 5; ++halving) {
        hx *= 0.5;
        auto finer = detail::stencil_derivatives(y, x, order, hx, dom, poles, guard);
        if (!finer.ok) break;
        const double change = std::fabs(residual_of(finer) - residual_of(der));
        if (!(change < last_change)) break;
        last_change = change;
        der = std::move(finer);
        if (change <= 1e-2 * opt.tol * std::max(eq.term_scale(x, der.d), 1e-300)) break;
      }
    } catch (const PoleError& e) {
      poles.push_back(e.x());
      rep.notes.push_back("pole excluded near x = " + format_number(e.x()));
    } catch (const DomainError&) {
    }
    if (!der.ok) {
      excluded.push_back(x);
      continue;
    }
    samples.push_back({x, std::move(der.d)});
  }
  rep.points_used = static_cast<int>(samples.size());
  rep.points_excluded = static_cast<int>(excluded.size());
  if (samples.empty()) throw VerificationError("every grid point was excluded as a pole");

  double scale = 0.0;
  for (const auto& s : samples) scale = std::max(scale, eq.term_scale(s.x, s.d));
  rep.term_scale = scale;
  const double denom = scale > 0.0 ? scale : 1.0;
  for (const auto& s : samples) {
    const double r = std::fabs(s.d[static_cast<std::size_t>(order)] - eq.highest(s.x, s.d)) / denom;
    if (!(r <= rep.max_residual)) {
      rep.max_residual = r;
      rep.worst_x = s.x;
    }
  }

  if (opt.ivp_anchor) {
    // Anchor at the first usable point; follow the trajectory until the
    // first excluded point.
    const double x0 = samples.front().x;
    std::vector<double> state(samples.front().d.begin(), samples.front().d.begin() + order);
    state[0] = y(x0);
    if (order >= 2 && sol.has_derivative()) state[1] = sol.deriv(c, x0);
    double stop = std::numeric_limits<double>::infinity();
    for (double e : excluded) {
      if (e > x0) {
        stop = e;
        break;
      }
    }
    for (double p : poles) {
      if (p > x0) stop = std::min(stop, p - guard);
    }
    std::vector<double> targets;
    double ymax = 0.0;
    for (const auto& s : samples) {
      if (s.x > stop) break;
      targets.push_back(s.x);
      ymax = std::max(ymax, std::fabs(s.d[0]));
    }
    auto field = [&eq, order](double x, std::span<const double> st, std::span<double> out) {
      for (int i = 0; i + 1 < order; ++i) out[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(i) + 1];
      out[static_cast<std::size_t>(order) - 1] = eq.highest(x, st);
    };
    rep.ivp_checked = true;
    try {
      IVPOptions io;
      io.rtol = opt.ivp_tol;
      io.atol = opt.ivp_tol * std::max(ymax, 1e-300);
      const auto res = solve_ivp(field, x0, state, targets.back(), io, targets);
      for (std::size_t i = 0; i < res.xs.size(); ++i) {
        const double dev = std::fabs(res.ys[i][0] - y(res.xs[i])) / std::max(ymax, 1e-300);
        rep.max_ivp_deviation = std::max(rep.max_ivp_deviation, dev);
      }
    } catch (const Error& e) {
      rep.notes.push_back(std::string("oracle integration failed: ") + e.what());
      rep.max_ivp_deviation = std::numeric_limits<double>::infinity();
    }
  }

  rep.pass = rep.max_residual <= opt.tol && (!rep.ivp_checked || rep.max_ivp_deviation <= opt.tol);
  return rep;
}

inline VerificationReport verify(const ClosedFormSolution& sol, const ExplicitODE& eq,
                                 std::initializer_list<double> constants, const VerifyOptions& opt = {}) {
  return verify(sol, eq, Constants(constants.begin(), constants.size()), opt);
}

template <class Equation>
  requires requires(const Equation& e) { as_explicit(e); }
inline VerificationReport verify(const ClosedFormSolution& sol, const Equation& eq, Constants constants,
                                 const VerifyOptions& opt = {}) {
  return verify(sol, as_explicit(eq), constants, opt);
}

template <class Equation>
  requires requires(const Equation& e) { as_explicit(e); }
inline VerificationReport verify(const ClosedFormSolution& sol, const Equation& eq,
                                 std::initializer_list<double> constants, const VerifyOptions& opt = {}) {
  return verify(sol, as_explicit(eq), Constants(constants.begin(), constants.size()), opt);
}

}  // namespace odequad
