#pragma once

// Riccati equations y' = P + Q y + R y^2 that become linear first-order
// equations under a change of the dependent variable alone:
//
//   homogeneous form  y' = Q y + R y^2          (z = -1/y)
//   k-form            y' = P + Q y + k(Q - kP) y^2
//                     (z = (ky - 1) / (2k(ky + 1)), constant solution -1/k)
//
// plus the special equation y' = a y^2 + b x^alpha exponent test.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "odequad/domain.hpp"
#include "odequad/errors.hpp"
#include "odequad/expr.hpp"
#include "odequad/quad.hpp"
#include "odequad/roots.hpp"
#include "odequad/solution.hpp"
#include "odequad/support.hpp"

namespace odequad {

struct RiccatiEquation {
  Expression P;
  Expression Q;
  Expression R;
  DomainInterval domain;

  double rhs(double x, double y) const { return P(x) + Q(x) * y + R(x) * y * y; }
};

enum class RiccatiForm { HomogeneousForm, KForm, LinearFirstOrder, NotLinearizable };

inline std::string to_string(RiccatiForm f) {
  switch (f) {
    case RiccatiForm::HomogeneousForm: return "HomogeneousForm";
    case RiccatiForm::KForm: return "KForm";
    case RiccatiForm::LinearFirstOrder: return "LinearFirstOrder";
    case RiccatiForm::NotLinearizable: return "NotLinearizable";
  }
  return "?";
}

struct RiccatiClass {
  RiccatiForm form{RiccatiForm::NotLinearizable};
  double k{0.0};  // KForm only
  std::string diagnostic;
};

struct ClassifierOptions {
  int detection_points = 17;   // Chebyshev samples used to find candidate k
  int validation_points = 101;  // equispaced samples used to confirm it
  double tol = 1e-8;            // relative
};

namespace detail {

struct CoefficientSample {
  double x, P, Q, R;
};

inline std::vector<CoefficientSample> sample_coefficients(const RiccatiEquation& eq, const std::vector<double>& xs) {
  std::vector<CoefficientSample> out;
  out.reserve(xs.size());
  for (double x : xs) {
    try {
      out.push_back({x, eq.P(x), eq.Q(x), eq.R(x)});
    } catch (const DomainError&) {
    }
  }
  return out;
}

// |k^2 P - k Q + R| relative to the size of its terms.
inline bool k_satisfies(double k, const CoefficientSample& s, double tol) {
  const double a = k * k * s.P;
  const double b = k * s.Q;
  const double scale = std::fabs(a) + std::fabs(b) + std::fabs(s.R);
  return std::fabs(a - b + s.R) <= tol * scale;
}

struct KRoots {
  bool unconstrained{false};
  bool complex{false};
  std::vector<double> roots;
};

// Real solutions k of k^2 P - k Q + R = 0 at one sample.
inline KRoots k_roots(const CoefficientSample& s, double tol) {
  KRoots out;
  const double a = s.P;
  const double b = -s.Q;
  const double c = s.R;
  const double scale = std::fabs(a) + std::fabs(b) + std::fabs(c);
  if (scale == 0.0) {
    out.unconstrained = true;
    return out;
  }
  if (std::fabs(a) <= tol * scale) {
    if (std::fabs(b) > tol * scale) out.roots.push_back(-c / b);
    return out;
  }
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    if (disc < -tol * (b * b + 4.0 * std::fabs(a * c))) {
      out.complex = true;
      return out;
    }
    disc = 0.0;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (q == 0.0) {
    out.roots.push_back(0.0);
    return out;
  }
  out.roots.push_back(q / a);
  out.roots.push_back(c / q);
  return out;
}

}  // namespace detail

// Decides which linearizable form (if any) the equation has on its domain.
inline RiccatiClass classify_linearizable(const RiccatiEquation& eq, const ClassifierOptions& opt = {}) {
  const auto detect = detail::sample_coefficients(eq, eq.domain.chebyshev(opt.detection_points));
  const auto validate = detail::sample_coefficients(eq, eq.domain.linspace(opt.validation_points));
  if (detect.empty() || validate.empty()) {
    throw ClassificationError("empty validation grid: coefficients undefined on every sample");
  }

  double scale = 0.0;
  double max_p = 0.0;
  double max_r = 0.0;
  for (const auto* grid : {&detect, &validate}) {
    for (const auto& s : *grid) {
      scale = std::max({scale, std::fabs(s.P), std::fabs(s.Q), std::fabs(s.R)});
      max_p = std::max(max_p, std::fabs(s.P));
      max_r = std::max(max_r, std::fabs(s.R));
    }
  }
  if (max_p <= opt.tol * scale) return {RiccatiForm::HomogeneousForm, 0.0, "P vanishes on the domain"};
  if (max_r <= opt.tol * scale) return {RiccatiForm::LinearFirstOrder, 0.0, "R vanishes on the domain"};

  bool saw_complex = false;
  std::vector<double> candidates;
  for (const auto& s : detect) {
    const auto r = detail::k_roots(s, opt.tol);
    if (r.unconstrained) continue;
    if (r.roots.empty()) {
      saw_complex = saw_complex || r.complex;
      return {RiccatiForm::NotLinearizable, 0.0,
              saw_complex ? "k^2 P - k Q + R = 0 has only complex roots at x = " + format_number(s.x)
                          : "no constant k satisfies R = k(Q - kP) at x = " + format_number(s.x)};
    }
    candidates = r.roots;
    break;
  }
  if (candidates.empty()) return {RiccatiForm::NotLinearizable, 0.0, "coefficients vanish on the detection grid"};

  std::vector<double> accepted;
  for (double cand : candidates) {
    if (!std::all_of(detect.begin(), detect.end(),
                     [&](const auto& s) { return detail::k_satisfies(cand, s, opt.tol); })) {
      continue;
    }
    // Polish: median over samples of the root nearest to the candidate.
    std::vector<double> nearest;
    for (const auto& s : detect) {
      const auto r = detail::k_roots(s, opt.tol);
      if (r.roots.empty()) continue;
      double best = r.roots.front();
      for (double v : r.roots) {
        if (std::fabs(v - cand) < std::fabs(best - cand)) best = v;
      }
      nearest.push_back(best);
    }
    const double k = nearest.empty() ? cand : median(nearest);
    if (!std::all_of(validate.begin(), validate.end(),
                     [&](const auto& s) { return detail::k_satisfies(k, s, opt.tol); })) {
      continue;
    }
    const bool duplicate = std::any_of(accepted.begin(), accepted.end(), [&](double a) {
      return std::fabs(a - k) <= 1e-6 * (1.0 + std::fabs(k));
    });
    if (!duplicate) accepted.push_back(k);
  }

  if (accepted.empty()) {
    return {RiccatiForm::NotLinearizable, 0.0, "no real constant k satisfies R = k(Q - kP) on the domain"};
  }
  if (accepted.size() > 1) {
    throw ClassificationError("ambiguous k-form: k = " + format_number(accepted[0]) + " and k = " +
                                  format_number(accepted[1]) + " both validate",
                              accepted);
  }
  return {RiccatiForm::KForm, accepted.front(), ""};
}

namespace detail {

inline bool vanishes_on_grid(const Expression& e, const DomainInterval& d, double rel_tol, double scale) {
  return max_abs(e, d.linspace(101)) <= rel_tol * scale;
}

inline double pole_guard(double denominator, double scale, double x) {
  if (denominator == 0.0 || std::fabs(denominator) <= 1e-12 * scale) {
    throw PoleError("solution has a pole at x = " + format_number(x), x);
  }
  return denominator;
}

}  // namespace detail

// y = -e^{int Q} / (C + int R e^{int Q}), quadratures based at domain.lo.
inline ClosedFormSolution solve_homogeneous_form(const RiccatiEquation& eq, double tol = kDefaultQuadTol) {
  const double lo = eq.domain.lo();
  const Expression Q = eq.Q;
  const Expression R = eq.R;
  const auto q_int = antiderivative([Q](double x) { return Q(x); }, lo, tol / 10.0);
  const auto weight = [q_int](double x) { return std::exp(q_int->value(x)); };
  const auto r_int = antiderivative([R, weight](double x) { return R(x) * weight(x); }, lo, tol);

  auto value = [weight, r_int](Constants c, double x) {
    const double I = r_int->value(x);
    const double den = detail::pole_guard(c[0] + I, std::fabs(c[0]) + std::fabs(I), x);
    return -weight(x) / den;
  };
  auto deriv = [value, Q, R](Constants c, double x) {
    const double y = value(c, x);
    return Q(x) * y + R(x) * y * y;
  };
  const DomainInterval domain = eq.domain;
  auto poles = [r_int, domain](Constants c) {
    const double C = c[0];
    return sign_change_zeros([r_int, C](double x) { return C + r_int->value(x); }, domain, 401);
  };
  ClosedFormSolution sol{{"C"}, value, deriv, poles, "riccati.homogeneous.reciprocal-linear", eq.domain};
  sol.singular.push_back({"y = 0", 0.0});
  return sol;
}

// y = e^{int Q} (C + int P e^{-int Q}) for R == 0.
inline ClosedFormSolution solve_linear_first_order(const RiccatiEquation& eq, double tol = kDefaultQuadTol) {
  const double lo = eq.domain.lo();
  const Expression P = eq.P;
  const Expression Q = eq.Q;
  const auto q_int = antiderivative([Q](double x) { return Q(x); }, lo, tol / 10.0);
  const auto p_int = antiderivative([P, q_int](double x) { return P(x) * std::exp(-q_int->value(x)); }, lo, tol);
  auto value = [q_int, p_int](Constants c, double x) {
    return std::exp(q_int->value(x)) * (c[0] + p_int->value(x));
  };
  auto deriv = [value, P, Q](Constants c, double x) { return P(x) + Q(x) * value(c, x); };
  return ClosedFormSolution{{"C"}, value, deriv, {}, "riccati.linear-first-order", eq.domain};
}

// y' = P (1 - k^2 y^2): y = tanh(k(int P + C))/k, or coth(...)/k when the
// "branch" constant is nonzero.
inline ClosedFormSolution solve_separable_k_form(const RiccatiEquation& eq, double k, double tol = kDefaultQuadTol) {
  if (k == 0.0) throw ConstructionError("k = 0: the equation is linear; use solve_linear_first_order");
  const Expression P = eq.P;
  const auto p_int = antiderivative([P](double x) { return P(x); }, eq.domain.lo(), tol);
  auto value = [p_int, k](Constants c, double x) {
    const double arg = k * (p_int->value(x) + c[0]);
    if (c[1] == 0.0) return std::tanh(arg) / k;
    const double t = std::tanh(arg);
    detail::pole_guard(t, 1.0, x);
    return 1.0 / (k * t);
  };
  auto deriv = [value, P, k](Constants c, double x) {
    const double y = value(c, x);
    return P(x) * (1.0 - k * k * y * y);
  };
  const DomainInterval domain = eq.domain;
  auto poles = [p_int, domain](Constants c) -> std::vector<double> {
    if (c[1] == 0.0) return {};
    const double C = c[0];
    return sign_change_zeros([p_int, C](double x) { return p_int->value(x) + C; }, domain, 401);
  };
  ClosedFormSolution sol{{"C", "branch"}, value, deriv, poles, "riccati.k-form.separable", eq.domain};
  sol.singular.push_back({"y = -1/k", -1.0 / k});
  sol.singular.push_back({"y = 1/k", 1.0 / k});
  return sol;
}

// y = (1 + 2kz) / (k (1 - 2kz)) with
// 2kz = (C + int Q e^{int (2kP - Q)}) e^{int (Q - 2kP)}.
inline ClosedFormSolution solve_k_form(const RiccatiEquation& eq, double k, double tol = kDefaultQuadTol) {
  if (k == 0.0) throw ConstructionError("k = 0: the equation is linear; use solve_linear_first_order");
  const auto grid = eq.domain.linspace(101);
  const double scale = std::max({max_abs(eq.P, grid), max_abs(eq.Q, grid), max_abs(eq.R, grid), 1e-300});
  if (detail::vanishes_on_grid(eq.Q, eq.domain, 1e-12, scale)) return solve_separable_k_form(eq, k, tol);

  const double lo = eq.domain.lo();
  const Expression P = eq.P;
  const Expression Q = eq.Q;
  const Expression R = eq.R;
  const auto g_int = antiderivative([P, Q, k](double x) { return Q(x) - 2.0 * k * P(x); }, lo, tol / 10.0);
  const auto j_int = antiderivative([Q, g_int](double x) { return Q(x) * std::exp(-g_int->value(x)); }, lo, tol);
  auto two_kz = [g_int, j_int](double C, double x) { return (C + j_int->value(x)) * std::exp(g_int->value(x)); };

  auto value = [two_kz, k](Constants c, double x) {
    const double w = two_kz(c[0], x);
    const double den = detail::pole_guard(1.0 - w, 1.0 + std::fabs(w), x);
    return (1.0 + w) / (k * den);
  };
  auto deriv = [value, P, Q, R](Constants c, double x) {
    const double y = value(c, x);
    return P(x) + Q(x) * y + R(x) * y * y;
  };
  const DomainInterval domain = eq.domain;
  auto poles = [two_kz, domain](Constants c) {
    const double C = c[0];
    return sign_change_zeros([two_kz, C](double x) { return 1.0 - two_kz(C, x); }, domain, 401);
  };
  ClosedFormSolution sol{{"C"}, value, deriv, poles, "riccati.k-form.mobius-linear", eq.domain};
  sol.singular.push_back({"y = -1/k", -1.0 / k});
  return sol;
}

// Classifies and dispatches to the matching construction; throws
// ClassificationError for NotLinearizable equations.
inline std::pair<RiccatiClass, ClosedFormSolution> solve_riccati(const RiccatiEquation& eq,
                                                                 double tol = kDefaultQuadTol,
                                                                 const ClassifierOptions& opt = {}) {
  const RiccatiClass cls = classify_linearizable(eq, opt);
  switch (cls.form) {
    case RiccatiForm::HomogeneousForm: return {cls, solve_homogeneous_form(eq, tol)};
    case RiccatiForm::LinearFirstOrder: return {cls, solve_linear_first_order(eq, tol)};
    case RiccatiForm::KForm: return {cls, solve_k_form(eq, cls.k, tol)};
    case RiccatiForm::NotLinearizable: break;
  }
  throw ClassificationError("equation is not linearizable: " + cls.diagnostic);
}

// ---------------------------------------------------------------------------
// y' = a y^2 + b x^alpha

enum class SpecialRiccatiKind { ElementaryIntegrable, SeparableAlphaZero, HomogeneousAlphaMinus2, NotElementary };

inline std::string to_string(SpecialRiccatiKind k) {
  switch (k) {
    case SpecialRiccatiKind::ElementaryIntegrable: return "ElementaryIntegrable";
    case SpecialRiccatiKind::SeparableAlphaZero: return "SeparableAlphaZero";
    case SpecialRiccatiKind::HomogeneousAlphaMinus2: return "HomogeneousAlphaMinus2";
    case SpecialRiccatiKind::NotElementary: return "NotElementary";
  }
  return "?";
}

struct SpecialRiccatiClass {
  SpecialRiccatiKind kind;
  long k{0};  // ElementaryIntegrable only
};

// alpha = -4k/(2k - 1), k = +-1, +-2, ...
inline double special_exponent(long k) { return -4.0 * static_cast<double>(k) / (2.0 * static_cast<double>(k) - 1.0); }

inline SpecialRiccatiClass classify_special_riccati(double alpha) {
  constexpr double tol = 1e-12;
  if (!std::isfinite(alpha)) return {SpecialRiccatiKind::NotElementary};
  if (std::fabs(alpha) <= tol) return {SpecialRiccatiKind::SeparableAlphaZero};
  if (std::fabs(alpha + 2.0) <= tol) return {SpecialRiccatiKind::HomogeneousAlphaMinus2};
  // Invert alpha(k): k = alpha / (2 alpha + 4).
  const double k_real = alpha / (2.0 * alpha + 4.0);
  if (!std::isfinite(k_real) || std::fabs(k_real) > 1e15) return {SpecialRiccatiKind::NotElementary};
  const long k = std::lround(k_real);
  if (k != 0 && std::fabs(special_exponent(k) - alpha) <= tol) return {SpecialRiccatiKind::ElementaryIntegrable, k};
  return {SpecialRiccatiKind::NotElementary};
}

}  // namespace odequad
