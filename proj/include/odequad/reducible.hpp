#pragma once

// Linear equations admitting the operator phi(x) d/dx + sigma(x) y d/dy.
// For order 2 they have the form
//
//   phi^2 y'' + (A + phi' - 2 sigma) phi y' + (B - A sigma + sigma^2 - phi sigma') y = F
//
// and y = exp(int (sigma + lambda)/phi) solves the homogeneous equation
// whenever lambda^2 + A lambda + B = 0. The third-order family works the same
// way with the cubic lambda^3 + A lambda^2 + B lambda + C = 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "odequad/domain.hpp"
#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/quad.hpp"
#include "odequad/solution.hpp"
#include "odequad/support.hpp"

namespace odequad {

struct ReducibleSpec {
  Expression phi;
  Expression sigma;
  double A{0.0};
  double B{0.0};
  double C{0.0};  // order 3 only
  int order{2};
  std::optional<Expression> forcing{};
  DomainInterval domain;
};

// Monic linear equation y^(n) + c[0] y^(n-1) + ... + c[n-1] y = forcing.
struct LinearODE {
  int order;
  std::vector<Expression> coeffs;
  std::optional<Expression> forcing;
  DomainInterval domain;
  // Un-normalized form (leading coefficient first) when built from a spec.
  std::vector<Expression> display{};
  std::optional<Expression> display_forcing{};

  const Expression& f() const { return coeffs.at(0); }
  const Expression& g() const { return coeffs.at(1); }
  const Expression& h() const { return coeffs.at(2); }

  // Left-hand side minus forcing, given y, y', ..., y^(n).
  double residual(double x, std::span<const double> derivs) const {
    double r = derivs[static_cast<std::size_t>(order)];
    for (int i = 0; i < order; ++i) {
      r += coeffs[static_cast<std::size_t>(i)](x) * derivs[static_cast<std::size_t>(order - 1 - i)];
    }
    if (forcing) r -= (*forcing)(x);
    return r;
  }
};

inline std::string derivative_symbol(int n) {
  switch (n) {
    case 0: return "y";
    case 1: return "y'";
    case 2: return "y''";
    case 3: return "y'''";
    default: return "y^(" + std::to_string(n) + ")";
  }
}

inline std::string to_string(const LinearODE& ode, bool display_form = false) {
  std::string s;
  if (display_form && !ode.display.empty()) {
    for (int i = 0; i <= ode.order; ++i) {
      if (i > 0) s += " + ";
      s += to_string(ode.display[static_cast<std::size_t>(i)]) + "*" + derivative_symbol(ode.order - i);
    }
    s += " = " + (ode.display_forcing ? to_string(*ode.display_forcing) : std::string("0"));
    return s;
  }
  s = derivative_symbol(ode.order);
  for (int i = 0; i < ode.order; ++i) {
    s += " + " + to_string(ode.coeffs[static_cast<std::size_t>(i)]) + "*" + derivative_symbol(ode.order - 1 - i);
  }
  s += " = " + (ode.forcing ? to_string(*ode.forcing) : std::string("0"));
  return s;
}

inline void validate(const ReducibleSpec& spec) {
  if (spec.order != 2 && spec.order != 3) {
    throw ConstructionError("order must be 2 or 3, got " + std::to_string(spec.order));
  }
  require_nonvanishing(spec.phi, spec.domain, "phi");
}

inline LinearODE build_equation(const ReducibleSpec& spec) {
  validate(spec);
  const Expression& phi = spec.phi;
  const Expression& sigma = spec.sigma;
  const Expression dphi = differentiate(phi);
  const Expression dsigma = differentiate(sigma);
  const double A = spec.A;
  const double B = spec.B;

  if (spec.order == 2) {
    const Expression lead = pow(phi, 2.0);
    const Expression first = A + dphi - 2.0 * sigma;
    const Expression zeroth = B - A * sigma + pow(sigma, 2.0) - phi * dsigma;
    LinearODE ode{2, {first / phi, zeroth / lead}, std::nullopt, spec.domain};
    if (spec.forcing) ode.forcing = *spec.forcing / lead;
    ode.display = {lead, first * phi, zeroth};
    ode.display_forcing = spec.forcing;
    return ode;
  }

  const double C = spec.C;
  const Expression d2phi = differentiate(dphi);
  const Expression d2sigma = differentiate(dsigma);
  const Expression phi_sigma_prime = dphi * sigma + phi * dsigma;
  const Expression c2 = A + 3.0 * (dphi - sigma);
  const Expression c1 = B + A * dphi - 2.0 * A * sigma + phi * d2phi + pow(dphi, 2.0) - 3.0 * phi_sigma_prime +
                        3.0 * pow(sigma, 2.0);
  const Expression c0 = C - B * sigma + A * pow(sigma, 2.0) - A * phi * dsigma - pow(sigma, 3.0) -
                        pow(phi, 2.0) * d2sigma - phi * dphi * dsigma + 3.0 * phi * sigma * dsigma;
  const Expression lead = pow(phi, 3.0);
  LinearODE ode{3, {c2 / phi, c1 / pow(phi, 2.0), c0 / lead}, std::nullopt, spec.domain};
  if (spec.forcing) ode.forcing = *spec.forcing / lead;
  ode.display = {lead, c2 * pow(phi, 2.0), c1 * phi, c0};
  ode.display_forcing = spec.forcing;
  return ode;
}

// ---------------------------------------------------------------------------
// Characteristic roots

struct CharacteristicRoots {
  int degree{2};
  std::vector<double> coefficients;  // monic, highest power omitted: {A, B[, C]}
  std::vector<std::complex<double>> roots;  // conjugate pairs adjacent, +imag first
  bool repeated{false};

  std::complex<double> polynomial(std::complex<double> lambda) const {
    std::complex<double> v = 1.0;
    for (double c : coefficients) v = v * lambda + c;
    return v;
  }
  bool has_complex() const {
    return std::any_of(roots.begin(), roots.end(), [](auto r) { return r.imag() != 0.0; });
  }
};

namespace detail {

inline std::complex<double> canonical(std::complex<double> r) {
  if (std::fabs(r.imag()) <= 1e-9 * (1.0 + std::abs(r))) return {r.real(), 0.0};
  return r;
}

inline std::complex<double> newton_polish(const std::vector<double>& coeffs, std::complex<double> r) {
  std::complex<double> p = 1.0;
  std::complex<double> dp = 0.0;
  for (double c : coeffs) {
    dp = dp * r + p;
    p = p * r + c;
  }
  if (std::abs(dp) == 0.0) return r;
  const auto next = r - p / dp;
  return std::isfinite(next.real()) && std::isfinite(next.imag()) ? next : r;
}

inline bool nearly_equal_roots(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a));
}

// Real roots of x^2 + b x + c (or the conjugate pair) without cancellation.
inline std::vector<std::complex<double>> quadratic_roots(double b, double c) {
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) {
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) return {0.0, 0.0};
    return {q, c / q};
  }
  const double re = -0.5 * b;
  const double im = 0.5 * std::sqrt(-disc);
  return {{re, im}, {re, -im}};
}

}  // namespace detail

inline CharacteristicRoots characteristic_roots(double A, double B) {
  CharacteristicRoots out;
  out.degree = 2;
  out.coefficients = {A, B};
  auto r = detail::quadratic_roots(A, B);
  r[0] = detail::canonical(r[0]);
  r[1] = detail::canonical(r[1]);
  if (r[0].imag() == 0.0 && r[1].imag() == 0.0 && detail::nearly_equal_roots(r[0], r[1])) {
    r[0] = r[1] = -0.5 * A;
    out.repeated = true;
  }
  if (r[0].real() > r[1].real() && r[0].imag() == 0.0 && r[1].imag() == 0.0 && !out.repeated) {
    std::swap(r[0], r[1]);
  }
  out.roots = {r[0], r[1]};
  return out;
}

inline CharacteristicRoots characteristic_roots(double A, double B, double C) {
  CharacteristicRoots out;
  out.degree = 3;
  out.coefficients = {A, B, C};
  // lambda = t - A/3 gives t^3 + p t + q.
  const double shift = A / 3.0;
  const double p = B - A * A / 3.0;
  const double q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
  std::vector<std::complex<double>> t;
  const double D = q * q / 4.0 + p * p * p / 27.0;
  if (p == 0.0 && q == 0.0) {
    t = {0.0, 0.0, 0.0};
  } else if (D < 0.0) {
    // Three distinct real roots: trigonometric form.
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) t.emplace_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0), 0.0);
  } else {
    // One real root (Cardano, sign-stable) and a deflated quadratic.
    const double w = std::cbrt(std::fabs(q) / 2.0 + std::sqrt(D));
    const double t1 = w == 0.0 ? 0.0 : -std::copysign(1.0, q) * (w - p / (3.0 * w));
    t.emplace_back(t1, 0.0);
    const auto rest = detail::quadratic_roots(t1, t1 * t1 + p);
    t.push_back(rest[0]);
    t.push_back(rest[1]);
  }
  std::vector<std::complex<double>> roots;
  for (auto ti : t) {
    auto r = detail::newton_polish(out.coefficients, ti - shift);
    if (ti.imag() == 0.0) r = {r.real(), 0.0};
    roots.push_back(detail::canonical(r));
  }
  // Order: real roots ascending, then the conjugate pair (+imag first).
  std::stable_sort(roots.begin(), roots.end(), [](auto a, auto b) {
    const bool ar = a.imag() == 0.0;
    const bool br = b.imag() == 0.0;
    if (ar != br) return ar;
    if (ar) return a.real() < b.real();
    return a.imag() > b.imag();
  });
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (detail::nearly_equal_roots(roots[i], roots[j])) out.repeated = true;
    }
  }
  out.roots = std::move(roots);
  return out;
}

inline CharacteristicRoots characteristic_roots(const ReducibleSpec& spec) {
  return spec.order == 3 ? characteristic_roots(spec.A, spec.B, spec.C) : characteristic_roots(spec.A, spec.B);
}

// ---------------------------------------------------------------------------
// Solutions

// The quadratures t = int dx/phi and s = int sigma/phi dx, based at domain.lo.
struct CanonicalVariables {
  AntiderivativePtr t;
  AntiderivativePtr s;
  Expression phi;
  Expression sigma;
};

inline CanonicalVariables canonical_variables(const ReducibleSpec& spec, double tol = kDefaultQuadTol) {
  const Expression phi = spec.phi;
  const Expression sigma = spec.sigma;
  const double lo = spec.domain.lo();
  return {antiderivative([phi](double x) { return 1.0 / phi(x); }, lo, tol),
          antiderivative([phi, sigma](double x) { return sigma(x) / phi(x); }, lo, tol), phi, sigma};
}

// Real fundamental system built from the characteristic roots.
inline FundamentalSystem fundamental_system(const ReducibleSpec& spec, const CharacteristicRoots& roots,
                                            double tol = kDefaultQuadTol) {
  if (roots.repeated && spec.order != 2) {
    throw ConstructionError("repeated characteristic roots are only supported for order 2");
  }
  const auto cv = std::make_shared<const CanonicalVariables>(canonical_variables(spec, tol));
  FundamentalSystem basis;

  auto exponential = [cv](double lambda) {
    BasisFunction b;
    b.value = [cv, lambda](double x) { return std::exp(cv->s->value(x) + lambda * cv->t->value(x)); };
    b.derivative = [cv, lambda](double x) {
      const double e = std::exp(cv->s->value(x) + lambda * cv->t->value(x));
      return (cv->sigma(x) + lambda) / cv->phi(x) * e;
    };
    return b;
  };

  if (roots.repeated) {
    const double lambda = roots.roots[0].real();
    basis.push_back(exponential(lambda));
    BasisFunction b;
    b.value = [cv, lambda](double x) {
      const double t = cv->t->value(x);
      return t * std::exp(cv->s->value(x) + lambda * t);
    };
    b.derivative = [cv, lambda](double x) {
      const double t = cv->t->value(x);
      const double e = std::exp(cv->s->value(x) + lambda * t);
      const double phi = cv->phi(x);
      return e * (1.0 + t * (cv->sigma(x) + lambda)) / phi;
    };
    basis.push_back(std::move(b));
    return basis;
  }

  for (std::size_t i = 0; i < roots.roots.size(); ++i) {
    const auto r = roots.roots[i];
    if (r.imag() == 0.0) {
      basis.push_back(exponential(r.real()));
      continue;
    }
    const double gamma = r.real();
    const double theta = std::fabs(r.imag());
    for (int part = 0; part < 2; ++part) {
      BasisFunction b;
      b.value = [cv, gamma, theta, part](double x) {
        const double t = cv->t->value(x);
        const double e = std::exp(cv->s->value(x) + gamma * t);
        return e * (part == 0 ? std::cos(theta * t) : std::sin(theta * t));
      };
      b.derivative = [cv, gamma, theta, part](double x) {
        const double t = cv->t->value(x);
        const double e = std::exp(cv->s->value(x) + gamma * t);
        const double phi = cv->phi(x);
        const double c = std::cos(theta * t);
        const double s = std::sin(theta * t);
        const double rate = (cv->sigma(x) + gamma) / phi;
        return part == 0 ? e * (rate * c - theta / phi * s) : e * (rate * s + theta / phi * c);
      };
      basis.push_back(std::move(b));
    }
    ++i;  // the conjugate partner is covered
  }
  return basis;
}

inline std::string general_recipe(const ReducibleSpec& spec, const CharacteristicRoots& roots) {
  const std::string prefix = spec.order == 3 ? "linear3." : "linear2.";
  if (roots.repeated) return prefix + "repeated-root";
  if (roots.has_complex()) return prefix + (spec.order == 3 ? "real-and-complex-pair" : "complex-pair");
  return prefix + "distinct-real";
}

// General solution of the homogeneous equation (the forcing, if any, is
// ignored; see particular_solution_vop).
inline ClosedFormSolution general_solution(const ReducibleSpec& spec, double tol = kDefaultQuadTol) {
  validate(spec);
  const auto roots = characteristic_roots(spec);
  return superpose(fundamental_system(spec, roots, tol), general_recipe(spec, roots), spec.domain);
}

// Wronskian y1 y2' - y2 y1' of a two-element fundamental system.
inline double wronskian(const FundamentalSystem& basis, double x) {
  return basis[0].value(x) * basis[1].derivative(x) - basis[1].value(x) * basis[0].derivative(x);
}

// y = K1 y1 + K2 y2 - y1 int(y2 P/W) + y2 int(y1 P/W), P = F/phi^2.
inline ClosedFormSolution particular_solution_vop(const ReducibleSpec& spec, double tol = kDefaultQuadTol) {
  validate(spec);
  if (spec.order != 2) throw ConstructionError("variation of parameters is implemented for order 2");
  const auto roots = characteristic_roots(spec);
  auto basis = std::make_shared<const FundamentalSystem>(fundamental_system(spec, roots, tol));

  double scale = 0.0;
  double min_w = std::numeric_limits<double>::infinity();
  for (double x : spec.domain.linspace(101)) {
    const auto& b = *basis;
    scale = std::max(scale, std::fabs(b[0].value(x) * b[1].derivative(x)) + std::fabs(b[1].value(x) * b[0].derivative(x)));
    min_w = std::min(min_w, std::fabs(wronskian(b, x)));
  }
  if (min_w <= 1e-12 * scale) {
    throw ConstructionError("Wronskian of the fundamental pair vanishes on the domain");
  }

  const Expression forcing = spec.forcing.value_or(constant(0.0));
  const Expression phi = spec.phi;
  auto rhs = [forcing, phi](double x) {
    const double p = phi(x);
    return forcing(x) / (p * p);
  };
  const double lo = spec.domain.lo();
  const auto i1 = antiderivative([basis, rhs](double x) { return (*basis)[1].value(x) * rhs(x) / wronskian(*basis, x); }, lo, tol);
  const auto i2 = antiderivative([basis, rhs](double x) { return (*basis)[0].value(x) * rhs(x) / wronskian(*basis, x); }, lo, tol);

  auto value = [basis, i1, i2](Constants c, double x) {
    const auto& b = *basis;
    const double y1 = b[0].value(x);
    const double y2 = b[1].value(x);
    return c[0] * y1 + c[1] * y2 - y1 * i1->value(x) + y2 * i2->value(x);
  };
  auto deriv = [basis, i1, i2](Constants c, double x) {
    const auto& b = *basis;
    const double d1 = b[0].derivative(x);
    const double d2 = b[1].derivative(x);
    return c[0] * d1 + c[1] * d2 - d1 * i1->value(x) + d2 * i2->value(x);
  };
  return ClosedFormSolution{{"K1", "K2"}, value, deriv, {}, "linear2.variation-of-parameters", spec.domain};
}

// ---------------------------------------------------------------------------
// Membership and reducibility tests

struct Membership {
  bool member{false};
  double A{0.0};
  double B{0.0};
  double max_deviation{0.0};
  std::string detail;
  explicit operator bool() const { return member; }
};

// Inverts the coefficient formulas for a candidate (phi, sigma): A and B
// must come out constant on the grid.
inline Membership detect_membership(const LinearODE& ode, const Expression& phi, const Expression& sigma,
                                    double rel_tol = 1e-7) {
  if (ode.order != 2) throw ConstructionError("membership detection is implemented for order 2");
  require_nonvanishing(phi, ode.domain, "phi");
  const Expression dphi = differentiate(phi);
  const Expression dsigma = differentiate(sigma);
  const auto xs = ode.domain.linspace(101);

  std::vector<double> a_vals;
  double a_scale = 1.0;
  for (double x : xs) {
    const double p = phi(x);
    const double fx = ode.f()(x);
    a_vals.push_back(p * fx - dphi(x) + 2.0 * sigma(x));
    a_scale = std::max({a_scale, std::fabs(p * fx), std::fabs(dphi(x)), 2.0 * std::fabs(sigma(x))});
  }
  Membership m;
  m.A = median(a_vals);
  double dev_a = 0.0;
  for (double v : a_vals) dev_a = std::max(dev_a, std::fabs(v - m.A));

  std::vector<double> b_vals;
  double b_scale = 1.0;
  for (double x : xs) {
    const double p = phi(x);
    const double s = sigma(x);
    const double terms[] = {p * p * ode.g()(x), m.A * s, -s * s, p * dsigma(x)};
    double sum = 0.0;
    for (double t : terms) {
      sum += t;
      b_scale = std::max(b_scale, std::fabs(t));
    }
    b_vals.push_back(sum);
  }
  m.B = median(b_vals);
  double dev_b = 0.0;
  for (double v : b_vals) dev_b = std::max(dev_b, std::fabs(v - m.B));

  m.max_deviation = std::max(dev_a / a_scale, dev_b / b_scale);
  m.member = dev_a <= rel_tol * a_scale && dev_b <= rel_tol * b_scale;
  if (!m.member) {
    m.detail = dev_a > rel_tol * a_scale ? "A(x) is not constant (max deviation " + format_number(dev_a) + ")"
                                         : "B(x) is not constant (max deviation " + format_number(dev_b) + ")";
  }
  return m;
}

struct FreeParticleReport {
  bool reducible{false};
  double max_invariant{0.0};  // max |I(x)| on the grid
  double scale{0.0};
  // y = mapping(x) * z carries the equation to z'' + I(x) z = 0.
  RealFunction mapping;
};

// I(x) = g - f^2/4 - f'/2 vanishes iff the equation maps to z'' = 0.
inline FreeParticleReport reducibility_to_free_particle(const LinearODE& ode, double tol = kDefaultQuadTol) {
  if (ode.order != 2) throw ConstructionError("free-particle test is implemented for order 2");
  const Expression f = ode.f();
  const Expression g = ode.g();
  const Expression df = differentiate(f);
  FreeParticleReport rep;
  for (double x : ode.domain.linspace(101)) {
    const double fx = f(x);
    const double gx = g(x);
    const double dfx = df(x);
    rep.max_invariant = std::max(rep.max_invariant, std::fabs(gx - 0.25 * fx * fx - 0.5 * dfx));
    rep.scale = std::max(rep.scale, std::fabs(gx) + 0.25 * fx * fx + 0.5 * std::fabs(dfx));
  }
  rep.reducible = rep.max_invariant <= 1e-9 * rep.scale;
  const auto f_int = antiderivative([f](double x) { return f(x); }, ode.domain.lo(), tol);
  rep.mapping = [f_int](double x) { return std::exp(-0.5 * f_int->value(x)); };
  return rep;
}

}  // namespace odequad
