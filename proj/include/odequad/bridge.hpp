#pragma once

// The substitution y = -u' / (R u) carries y' = P + Q y + R y^2 to
//   u'' + f u' + g u = 0,  f = -(Q + R'/R),  g = P R,
// and every second-order linear equation back to a one-function family of
// Riccati equations y' = R y^2 - (f + R'/R) y + g/R.

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/quad.hpp"
#include "odequad/reducible.hpp"
#include "odequad/riccati.hpp"
#include "odequad/roots.hpp"
#include "odequad/solution.hpp"
#include "odequad/support.hpp"

namespace odequad {

struct BridgePair {
  RiccatiEquation riccati;
  LinearODE linear;
  Expression R;
};

inline LinearODE riccati_to_linear(const RiccatiEquation& eq) {
  require_nonvanishing(eq.R, eq.domain, "R");
  const Expression f = -(eq.Q + differentiate(eq.R) / eq.R);
  const Expression g = eq.P * eq.R;
  return LinearODE{2, {f, g}, std::nullopt, eq.domain};
}

inline RiccatiEquation linear_to_riccati(const LinearODE& ode, const Expression& R) {
  if (ode.order != 2) throw ConstructionError("the Riccati bridge needs a second-order equation");
  if (ode.forcing) throw ConstructionError("the Riccati bridge needs a homogeneous equation");
  require_nonvanishing(R, ode.domain, "R");
  const Expression Q = -(ode.f() + differentiate(R) / R);
  return RiccatiEquation{ode.g() / R, Q, R, ode.domain};
}

inline BridgePair make_bridge(const LinearODE& ode, const Expression& R) {
  return {linear_to_riccati(ode, R), ode, R};
}

// Max over the grid of |f_pair - f_expected| and |g_pair - g_expected|,
// relative to 1 + |expected|.
inline double coefficient_mismatch(const BridgePair& pair, int n = 101) {
  const LinearODE back = riccati_to_linear(pair.riccati);
  double worst = 0.0;
  for (double x : pair.linear.domain.linspace(n)) {
    for (int i = 0; i < 2; ++i) {
      const double want = pair.linear.coeffs[static_cast<std::size_t>(i)](x);
      const double got = back.coeffs[static_cast<std::size_t>(i)](x);
      worst = std::max(worst, std::fabs(got - want) / (1.0 + std::fabs(want)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Solution transport

enum class TransportDirection { LinearToRiccati, RiccatiToLinear };

namespace detail {

inline double transport_guard(double u, double scale, double x) {
  if (u == 0.0 || std::fabs(u) <= 1e-12 * scale) {
    throw PoleError("u vanishes at x = " + format_number(x) + " (pole of y)", x);
  }
  return u;
}

// y = -u'/(R u) for a linear solution with arbitrary constants.
inline ClosedFormSolution linear_to_riccati_solution(const ClosedFormSolution& u, const Expression& R) {
  auto usol = std::make_shared<const ClosedFormSolution>(u);
  auto uprime = [usol](Constants c, double x) {
    if (usol->has_derivative()) return usol->derivative(c, x);
    std::vector<double> cc(c.begin(), c.end());
    return central_derivative([usol, cc](double t) { return usol->value(cc, t); }, x);
  };

  if (u.linear_in_constants && u.arity() == 2) {
    // One essential constant K = C2/C1; K = +-infinity selects the C1 = 0 branch.
    auto ratio = [](Constants c) -> std::array<double, 2> {
      if (std::isinf(c[0])) return {0.0, 1.0};
      return {1.0, c[0]};
    };
    auto value = [usol, uprime, R, ratio](Constants c, double x) {
      const auto k = ratio(c);
      const double a = usol->value(k, x);
      const double scale = std::fabs(usol->value(std::array{k[0], 0.0}, x)) +
                           std::fabs(usol->value(std::array{0.0, k[1]}, x));
      transport_guard(a, scale, x);
      return -uprime(k, x) / (R(x) * a);
    };
    const DomainInterval domain = u.domain;
    auto poles = [usol, ratio, domain](Constants c) {
      const auto k = ratio(c);
      return sign_change_zeros([usol, k](double x) { return usol->value(k, x); }, domain, 401);
    };
    return ClosedFormSolution{{"K"}, value, {}, poles, "bridge.linear-to-riccati.ratio", u.domain};
  }

  auto value = [usol, uprime, R](Constants c, double x) {
    const double a = usol->value(c, x);
    transport_guard(a, 1e-300, x);
    return -uprime(c, x) / (R(x) * a);
  };
  const DomainInterval domain = u.domain;
  auto poles = [usol, domain](Constants c) {
    std::vector<double> cc(c.begin(), c.end());
    return sign_change_zeros([usol, cc](double x) { return usol->value(cc, x); }, domain, 401);
  };
  return ClosedFormSolution{u.constant_names, value, {}, poles, "bridge.linear-to-riccati", u.domain};
}

// u = K e^{-int R y}, the integral based at domain.lo. A simple pole x_p of
// y is a simple zero of u, so the transport is taken as
//   u = K prod (x - x_p) e^{-int (R y + sum 1/(x - x_p))}
// whose integrand is regular. One antiderivative is built and cached per
// distinct vector of Riccati constants.
inline ClosedFormSolution riccati_to_linear_solution(const ClosedFormSolution& y, const Expression& R, double tol) {
  struct Regularized {
    std::vector<double> poles;
    AntiderivativePtr integral;
  };
  struct Cache {
    std::mutex mu;
    std::map<std::vector<double>, std::shared_ptr<const Regularized>> entries;
  };
  auto ysol = std::make_shared<const ClosedFormSolution>(y);
  auto cache = std::make_shared<Cache>();
  const std::size_t n = y.arity();
  const double lo = y.domain.lo();

  auto entry = [ysol, cache, R, n, lo, tol](Constants c) {
    std::vector<double> key(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n));
    std::lock_guard<std::mutex> lock(cache->mu);
    auto it = cache->entries.find(key);
    if (it == cache->entries.end()) {
      auto poles = ysol->pole_locations(key);
      auto g = [ysol, key, R, poles](double x) {
        double v = R(x) * ysol->value(key, x);
        for (double p : poles) v += 1.0 / (x - p);
        return v;
      };
      // Within delta of a pole the cancellation is replaced by the symmetric
      // mean, which is O(delta^2) accurate for the regular integrand.
      auto f = [g, poles](double x) {
        for (double p : poles) {
          const double delta = 1e-6 * (1.0 + std::fabs(p));
          if (std::fabs(x - p) < delta) return 0.5 * (g(p - delta) + g(p + delta));
        }
        return g(x);
      };
      auto reg = std::make_shared<const Regularized>(Regularized{poles, antiderivative(f, lo, tol, poles)});
      it = cache->entries.emplace(key, std::move(reg)).first;
    }
    return it->second;
  };
  auto value = [entry, n](Constants c, double x) {
    const auto e = entry(c);
    double prod = 1.0;
    for (double p : e->poles) prod *= x - p;
    return c[n] * prod * std::exp(-e->integral->value(x));
  };
  auto deriv = [entry, ysol, value, R, n](Constants c, double x) {
    try {
      return -R(x) * ysol->value(c.first(n), x) * value(c, x);
    } catch (const PoleError&) {
      // At a zero of u: u' = K e^{-int(...)} prod_{q != p} (x - q).
      const auto e = entry(c);
      double prod = 1.0;
      bool skipped = false;
      for (double p : e->poles) {
        if (!skipped && std::fabs(x - p) <= 1e-9 * (1.0 + std::fabs(p))) {
          skipped = true;
          continue;
        }
        prod *= x - p;
      }
      return c[n] * prod * std::exp(-e->integral->value(x));
    }
  };
  auto names = y.constant_names;
  names.push_back("K");
  ClosedFormSolution sol{names, value, deriv, {}, "bridge.riccati-to-linear", y.domain};
  return sol;
}

}  // namespace detail

inline ClosedFormSolution transport_solution(TransportDirection direction, const ClosedFormSolution& sol,
                                             const Expression& R, double tol = kDefaultQuadTol) {
  require_nonvanishing(R, sol.domain, "R");
  if (direction == TransportDirection::LinearToRiccati) return detail::linear_to_riccati_solution(sol, R);
  return detail::riccati_to_linear_solution(sol, R, tol);
}

// ---------------------------------------------------------------------------
// Equations with g == 0: u'' + f u' = 0 integrates twice.

// Fundamental pair {1, int e^{-int f}}, both integrals based at domain.lo.
inline ClosedFormSolution solve_reduced_order(const LinearODE& ode, double tol = kDefaultQuadTol) {
  if (ode.order != 2) throw ConstructionError("reduced-order integration needs a second-order equation");
  const auto grid = ode.domain.linspace(101);
  const double scale = std::max(1.0, max_abs(ode.f(), grid));
  if (max_abs(ode.g(), grid) > 1e-12 * scale) {
    throw ConstructionError("reduced-order integration needs g == 0");
  }
  if (ode.forcing) throw ConstructionError("reduced-order integration needs a homogeneous equation");
  const Expression f = ode.f();
  const double lo = ode.domain.lo();
  const auto f_int = antiderivative([f](double x) { return f(x); }, lo, tol / 10.0);
  const auto w_int = antiderivative([f_int](double x) { return std::exp(-f_int->value(x)); }, lo, tol);
  FundamentalSystem basis;
  basis.push_back({[](double) { return 1.0; }, [](double) { return 0.0; }});
  basis.push_back({[w_int](double x) { return w_int->value(x); },
                   [f_int](double x) { return std::exp(-f_int->value(x)); }});
  return superpose(std::move(basis), "linear2.reduced-order", ode.domain);
}

// A fundamental pair for u'' + f u' + g u = 0 when the equation is one the
// library can integrate without being told phi and sigma: g == 0, maps to
// z'' = 0, or belongs to the family with (phi, sigma) = (1, 0) or (x, 0).
struct RecognizedPair {
  FundamentalSystem basis;
  std::string recipe;
};

inline std::optional<RecognizedPair> recognize_fundamental_pair(const LinearODE& ode, double tol = kDefaultQuadTol) {
  if (ode.order != 2 || ode.forcing) return std::nullopt;
  const auto grid = ode.domain.linspace(101);
  if (max_abs(ode.g(), grid) <= 1e-12 * std::max(1.0, max_abs(ode.f(), grid))) {
    auto sol = solve_reduced_order(ode, tol);
    return RecognizedPair{basis_of(sol), sol.recipe};
  }

  const auto fp = reducibility_to_free_particle(ode, tol);
  if (fp.reducible) {
    const RealFunction m = fp.mapping;
    const Expression f = ode.f();
    const double lo = ode.domain.lo();
    FundamentalSystem basis;
    basis.push_back({m, [m, f](double x) { return -0.5 * f(x) * m(x); }});
    basis.push_back({[m, lo](double x) { return (x - lo) * m(x); },
                     [m, f, lo](double x) { return m(x) * (1.0 - 0.5 * f(x) * (x - lo)); }});
    return RecognizedPair{std::move(basis), "linear2.free-particle-map"};
  }

  for (const auto& phi : {constant(1.0), var_x()}) {
    Membership mem;
    try {
      mem = detect_membership(ode, phi, constant(0.0));
    } catch (const ConstructionError&) {
      continue;
    }
    if (mem.member) {
      ReducibleSpec spec{.phi = phi, .sigma = constant(0.0), .A = mem.A, .B = mem.B, .domain = ode.domain};
      const auto roots = characteristic_roots(spec);
      return RecognizedPair{fundamental_system(spec, roots, tol), general_recipe(spec, roots)};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Riccati equations integrable through the reducible linear family.

struct IntegrableFamily {
  ReducibleSpec spec;
  LinearODE linear;
  RiccatiEquation riccati;
  Expression R;
};

inline IntegrableFamily integrable_riccati_family(const Expression& phi, const Expression& sigma, double A,
                                                  double B, const Expression& R, const DomainInterval& domain) {
  ReducibleSpec spec{.phi = phi, .sigma = sigma, .A = A, .B = B, .domain = domain};
  LinearODE ode = build_equation(spec);
  RiccatiEquation eq = linear_to_riccati(ode, R);
  return {spec, ode, eq, R};
}

// General solution of a family member, parameterized by K = C2/C1.
inline ClosedFormSolution solve_family(const IntegrableFamily& fam, double tol = kDefaultQuadTol) {
  auto sol = transport_solution(TransportDirection::LinearToRiccati, general_solution(fam.spec, tol), fam.R, tol);
  sol.recipe = "bridge.family." + general_recipe(fam.spec, characteristic_roots(fam.spec));
  return sol;
}

}  // namespace odequad
