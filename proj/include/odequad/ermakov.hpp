#pragma once

// u'' + a u' + b u = alpha w(x) / u^3, w = c e^{-2 int a}.
//
// With y1, y2 solving the homogeneous part and W0 their Wronskian at
// domain.lo, u = vE (E = e^{-1/2 int a}) turns the equation into Pinney's
// v'' + I v = alpha w(lo) / v^3, whose solutions are
//
//   u^2 = m y1^2 + 2 n y1 y2 + p y2^2,   m p - n^2 = alpha w(lo) / W0^2.
//
// The free constants are (K1, K2) with m = K1^2, n = K1 K2; p follows from
// the constraint.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "odequad/bridge.hpp"
#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/oracle.hpp"
#include "odequad/quad.hpp"
#include "odequad/reducible.hpp"
#include "odequad/roots.hpp"
#include "odequad/solution.hpp"

namespace odequad {

struct ErmakovProblem {
  Expression a;
  Expression b;
  double alpha{0.0};
  DomainInterval domain;
  // Explicit weight w(x); when absent w = e^{-2 int a} based at domain.lo.
  std::optional<Expression> weight{};
  // Reducible spec whose equation is u'' + a u' + b u = 0.
  std::optional<ReducibleSpec> homogeneous{};
};

inline LinearODE homogeneous_part(const ErmakovProblem& p) { return LinearODE{2, {p.a, p.b}, std::nullopt, p.domain}; }

inline RealFunction ermakov_weight(const ErmakovProblem& p, double tol = kDefaultQuadTol) {
  if (p.weight) {
    const Expression w = *p.weight;
    return [w](double x) { return w(x); };
  }
  const Expression a = p.a;
  const auto a_int = antiderivative([a](double x) { return a(x); }, p.domain.lo(), tol);
  return [a_int](double x) { return std::exp(-2.0 * a_int->value(x)); };
}

inline ExplicitODE as_explicit(const ErmakovProblem& p) {
  const RealFunction w = ermakov_weight(p);
  const Expression a = p.a;
  const Expression b = p.b;
  const double alpha = p.alpha;
  auto highest = [a, b, alpha, w](double x, std::span<const double> d) {
    const double u = d[0];
    return -a(x) * d[1] - b(x) * u + alpha * w(x) / (u * u * u);
  };
  auto scale = [a, b, alpha, w](double x, std::span<const double> d) {
    const double u = d[0];
    return std::max({std::fabs(d[2]), std::fabs(a(x) * d[1]), std::fabs(b(x) * u),
                     std::fabs(alpha * w(x) / (u * u * u))});
  };
  return {2, highest, scale, p.domain};
}

namespace detail {

inline double max_coefficient_gap(const LinearODE& x, const LinearODE& y) {
  double worst = 0.0;
  for (double t : x.domain.linspace(101)) {
    for (std::size_t i = 0; i < 2; ++i) {
      const double want = y.coeffs[i](t);
      worst = std::max(worst, std::fabs(x.coeffs[i](t) - want) / (1.0 + std::fabs(want)));
    }
  }
  return worst;
}

// A fundamental pair of u'' + a u' + b u = 0 from the reducible family.
inline FundamentalSystem ermakov_pair(const ErmakovProblem& p, double tol) {
  const LinearODE hom = homogeneous_part(p);
  if (p.homogeneous) {
    const ReducibleSpec& spec = *p.homogeneous;
    if (spec.order != 2) throw ConstructionError("the homogeneous part must be second order");
    const double gap = max_coefficient_gap(build_equation(spec), hom);
    if (gap > 1e-9) {
      throw ConstructionError("supplied spec does not reproduce u'' + a u' + b u = 0 (gap " + format_number(gap) + ")");
    }
    return fundamental_system(spec, characteristic_roots(spec), tol);
  }

  if (auto rec = recognize_fundamental_pair(hom, tol)) return std::move(rec->basis);
  throw ConstructionError("homogeneous part is not recognized as a reducible equation; supply a spec");
}

}  // namespace detail

inline ClosedFormSolution solve_ermakov(const ErmakovProblem& p, double tol = kDefaultQuadTol) {
  auto basis = std::make_shared<const FundamentalSystem>(detail::ermakov_pair(p, tol));
  const double lo = p.domain.lo();
  const double w0 = wronskian(*basis, lo);
  double pair_scale = 0.0;
  for (double x : p.domain.linspace(101)) {
    const auto& b = *basis;
    pair_scale = std::max(pair_scale, std::fabs(b[0].value(x) * b[1].derivative(x)) +
                                          std::fabs(b[1].value(x) * b[0].derivative(x)));
  }
  if (std::fabs(w0) <= 1e-12 * pair_scale) throw ConstructionError("fundamental pair has a vanishing Wronskian");

  if (p.alpha == 0.0) {
    ClosedFormSolution sol = superpose(*basis, "ermakov.homogeneous", p.domain);
    return sol;
  }

  const double alpha_eff = p.alpha * ermakov_weight(p, tol)(lo);
  const double target = alpha_eff / (w0 * w0);

  struct Quadratic {
    double m, n, p;
  };
  // Solves m p - n^2 = target for p by bracketing.
  auto coefficients = [target](Constants c) {
    const double m = c[0] * c[0];
    const double n = c[0] * c[1];
    if (m == 0.0) throw ConstructionError("K1 = 0 leaves the Ermakov constraint without a solution");
    auto g = [m, n, target](double q) { return m * q - n * n - target; };
    double lo_p = -1.0;
    double hi_p = 1.0;
    while (g(lo_p) > 0.0) lo_p *= 2.0;
    while (g(hi_p) < 0.0) hi_p *= 2.0;
    return Quadratic{m, n, bracket_root(g, lo_p, hi_p, 1e-15)};
  };
  auto square = [basis, coefficients](Constants c, double x) {
    const auto q = coefficients(c);
    const double y1 = (*basis)[0].value(x);
    const double y2 = (*basis)[1].value(x);
    return std::pair{q, q.m * y1 * y1 + 2.0 * q.n * y1 * y2 + q.p * y2 * y2};
  };
  auto value = [square](Constants c, double x) {
    const double s = square(c, x).second;
    if (!(s > 0.0)) throw DomainError("u^2 <= 0 at x = " + format_number(x));
    return std::sqrt(s);
  };
  auto deriv = [basis, square](Constants c, double x) {
    const auto [q, s] = square(c, x);
    if (!(s > 0.0)) throw DomainError("u^2 <= 0 at x = " + format_number(x));
    const auto& b = *basis;
    const double y1 = b[0].value(x);
    const double y2 = b[1].value(x);
    const double d1 = b[0].derivative(x);
    const double d2 = b[1].derivative(x);
    return (q.m * y1 * d1 + q.n * (d1 * y2 + y1 * d2) + q.p * y2 * d2) / std::sqrt(s);
  };
  ClosedFormSolution sol{{"K1", "K2"}, value, deriv, {}, "ermakov.pinney-quadratic-form", p.domain};

  // Residual gate on a representative member.
  const ExplicitODE eq = as_explicit(p);
  for (const auto& c : {std::array{1.0, 0.0}, std::array{1.0, 1.0}, std::array{1.0, -1.0}}) {
    bool positive = true;
    for (double x : p.domain.linspace(101)) positive = positive && square(c, x).second > 0.0;
    if (!positive) continue;
    VerifyOptions opt;
    const auto rep = verify(sol, eq, c, opt);
    if (!rep.pass) {
      throw VerificationError("Ermakov construction failed its residual gate (residual " +
                              format_number(rep.max_residual) + ")");
    }
    return sol;
  }
  throw ConstructionError("u^2 is not positive on the domain for this sign of alpha");
}

}  // namespace odequad
