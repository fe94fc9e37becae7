#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "support/oracles.hpp"

using namespace odequad;
using testsupport::Rng;

namespace {

ReducibleSpec spec2(const char* phi, const char* sigma, double A, double B, double lo, double hi) {
  return ReducibleSpec{.phi = parse(phi), .sigma = parse(sigma), .A = A, .B = B, .domain = DomainInterval(lo, hi)};
}

// Max |y'' + f y' + g y - F| / scale over n points, y' from the closed form,
// y'' by central differences of y'.
double residual2(const BasisFunction& b, const LinearODE& ode, int n = 50) {
  double worst = 0.0;
  double scale = 1e-300;
  for (double x : ode.domain.linspace(n)) {
    const double y = b.value(x);
    const double dy = b.derivative(x);
    const double d2y = central_derivative(b.derivative, x);
    const double f = ode.f()(x) * dy;
    const double g = ode.g()(x) * y;
    worst = std::max(worst, std::fabs(d2y + f + g));
    scale = std::max({scale, std::fabs(d2y), std::fabs(f), std::fabs(g)});
  }
  return worst / scale;
}

}  // namespace

TEST(Build, ConstantCoefficients) {
  const auto ode = build_equation(spec2("1", "0", 3.0, 2.0, 0, 1));
  for (double x : ode.domain.linspace(5)) {
    EXPECT_NEAR(ode.f()(x), 3.0, 1e-14);
    EXPECT_NEAR(ode.g()(x), 2.0, 1e-14);
  }
}

TEST(Build, EulerFamily) {
  const auto ode = build_equation(spec2("x", "0", 1.5, -2.0, 1, 3));
  for (double x : ode.domain.linspace(7)) {
    EXPECT_NEAR(ode.f()(x), 2.5 / x, 1e-13);
    EXPECT_NEAR(ode.g()(x), -2.0 / (x * x), 1e-13);
  }
}

TEST(Build, OnePlusXSquared) {
  const double A = 0.7;
  const double B = 1.3;
  const auto ode = build_equation(spec2("1 + x^2", "x", A, B, -1, 1));
  for (double x : ode.domain.linspace(9)) {
    const double p = 1 + x * x;
    EXPECT_NEAR(ode.f()(x), A / p, 1e-13);
    EXPECT_NEAR(ode.g()(x), (B - A * x - 1) / (p * p), 1e-13);
  }
}

TEST(Build, ThirdOrderConstant) {
  ReducibleSpec s{.phi = constant(1.0), .sigma = constant(0.0), .A = 1, .B = -2, .C = 3, .order = 3,
                  .domain = DomainInterval(0, 1)};
  const auto ode = build_equation(s);
  ASSERT_EQ(ode.order, 3);
  EXPECT_NEAR(ode.f()(0.3), 1.0, 1e-14);
  EXPECT_NEAR(ode.g()(0.3), -2.0, 1e-14);
  EXPECT_NEAR(ode.h()(0.3), 3.0, 1e-14);
}

TEST(Build, Errors) {
  EXPECT_THROW(build_equation(spec2("x", "0", 1, 1, -1, 1)), ConstructionError);
  auto s = spec2("1", "0", 1, 1, 0, 1);
  s.order = 4;
  EXPECT_THROW(build_equation(s), ConstructionError);
}

TEST(Roots, Examples) {
  auto r = characteristic_roots(0.0, 4.0);
  ASSERT_EQ(r.roots.size(), 2u);
  EXPECT_NEAR(r.roots[0].real(), 0.0, 1e-15);
  EXPECT_NEAR(std::fabs(r.roots[0].imag()), 2.0, 1e-14);
  EXPECT_TRUE(r.has_complex());

  r = characteristic_roots(-3.0, 2.0);
  EXPECT_NEAR(r.roots[0].real(), 1.0, 1e-14);
  EXPECT_NEAR(r.roots[1].real(), 2.0, 1e-14);
  EXPECT_FALSE(r.repeated);

  r = characteristic_roots(2.0, 1.0);
  EXPECT_TRUE(r.repeated);
  EXPECT_NEAR(r.roots[0].real(), -1.0, 1e-12);
}

TEST(Roots, CubicCases) {
  // (l - 1)(l - 2)(l + 3) = l^3 - 7 l + 6
  auto r = characteristic_roots(0.0, -7.0, 6.0);
  ASSERT_EQ(r.roots.size(), 3u);
  EXPECT_NEAR(r.roots[0].real(), -3.0, 1e-12);
  EXPECT_NEAR(r.roots[1].real(), 1.0, 1e-12);
  EXPECT_NEAR(r.roots[2].real(), 2.0, 1e-12);
  // (l - 1)(l^2 + 4) = l^3 - l^2 + 4 l - 4
  r = characteristic_roots(-1.0, 4.0, -4.0);
  EXPECT_TRUE(r.has_complex());
  EXPECT_NEAR(r.roots[0].real(), 1.0, 1e-12);
  EXPECT_NEAR(r.roots[1].imag(), 2.0, 1e-12);
  EXPECT_NEAR(r.roots[2].imag(), -2.0, 1e-12);
}

TEST(Roots, PolynomialInvariant) {
  Rng rng(99);
  for (int t = 0; t < 300; ++t) {
    const bool cubic = t % 2 == 1;
    const double A = rng.uniform(-10, 10);
    const double B = rng.uniform(-10, 10);
    const double C = rng.uniform(-10, 10);
    const auto r = cubic ? characteristic_roots(A, B, C) : characteristic_roots(A, B);
    for (auto l : r.roots) {
      const std::complex<double> p =
          cubic ? l * l * l + A * l * l + B * l + C : l * l + A * l + B;
      const double deg = cubic ? 3.0 : 2.0;
      EXPECT_LE(std::abs(p), 1e-10 * (1.0 + std::pow(std::abs(l), deg))) << A << " " << B << " " << C;
    }
  }
}

TEST(General, SpecializationIsExponential) {
  const auto s = spec2("1", "0", -3.0, 2.0, 0, 1);
  const auto sol = general_solution(s);
  EXPECT_EQ(sol.recipe, "linear2.distinct-real");
  for (double x : s.domain.linspace(11)) {
    EXPECT_NEAR(sol({1.0, 0.0}, x), std::exp(x), 1e-9 * std::exp(x));
    EXPECT_NEAR(sol({0.0, 1.0}, x), std::exp(2 * x), 1e-9 * std::exp(2 * x));
  }
}

TEST(General, InverseSquareOscillator) {
  const double w = 1.0;
  const auto s = spec2("x^2", "x", 0.0, w * w, 1, 3);
  const auto ode = build_equation(s);
  for (double x : s.domain.linspace(7)) {
    EXPECT_NEAR(ode.f()(x), 0.0, 1e-13);
    EXPECT_NEAR(ode.g()(x), w * w / std::pow(x, 4), 1e-13);
  }
  const auto sol = general_solution(s);
  EXPECT_EQ(sol.recipe, "linear2.complex-pair");
  // Fit K at x = 1 against x cos(w/x) and x sin(w/x); the fit must hold everywhere.
  for (int which = 0; which < 2; ++which) {
    auto ref = [w, which](double x) { return which == 0 ? x * std::cos(w / x) : x * std::sin(w / x); };
    auto dref = [ref](double x) { return central_derivative(ref, x); };
    const auto K = testsupport::fit_linear2(sol, 1.0, ref(1.0), dref(1.0));
    for (double x : s.domain.linspace(21)) EXPECT_NEAR(sol(K, x), ref(x), 1e-8);
  }
}

TEST(General, EulerRepeatedRoot) {
  // x^2 y'' + 3 x y' + y = 0: phi = x, A = 2, B = 1, root -1 twice.
  const auto s = spec2("x", "0", 2.0, 1.0, 1, 3);
  const auto sol = general_solution(s);
  EXPECT_EQ(sol.recipe, "linear2.repeated-root");
  for (double x : s.domain.linspace(11)) {
    EXPECT_NEAR(sol({1.0, 0.0}, x), 1.0 / x, 1e-9);
    EXPECT_NEAR(sol({0.0, 1.0}, x), std::log(x) / x, 1e-9);
  }
}

TEST(General, ArctanFamily) {
  const double w = 2.0;
  const auto s = spec2("1 + x^2", "x", 0.0, w * w, 0, 1);
  const auto ode = build_equation(s);
  for (double x : s.domain.linspace(5)) EXPECT_NEAR(ode.g()(x), (w * w - 1) / std::pow(1 + x * x, 2), 1e-13);
  const auto sol = general_solution(s);
  for (double x : s.domain.linspace(11)) {
    const double r = std::sqrt(1 + x * x);
    EXPECT_NEAR(sol({1.0, 0.0}, x), r * std::cos(w * std::atan(x)), 1e-9);
    EXPECT_NEAR(sol({0.0, 1.0}, x), r * std::sin(w * std::atan(x)), 1e-9);
  }
}

TEST(General, ThirdOrderOracle) {
  ReducibleSpec s{.phi = parse("1 + x"), .sigma = parse("0.5*x"), .A = 1, .B = 2, .C = -1, .order = 3,
                  .domain = DomainInterval(0, 1)};
  const auto sol = general_solution(s);
  const auto ode = build_equation(s);
  for (auto c : {std::vector{1.0, 0.0, 0.0}, std::vector{0.0, 1.0, 0.0}, std::vector{0.0, 0.0, 1.0},
                 std::vector{0.3, -1.0, 2.0}}) {
    const auto rep = verify(sol, ode, c);
    EXPECT_TRUE(rep.pass) << rep.max_residual;
  }
}

TEST(General, ThirdOrderRepeatedUnsupported) {
  ReducibleSpec s{.phi = constant(1.0), .sigma = constant(0.0), .A = 3, .B = 3, .C = 1, .order = 3,
                  .domain = DomainInterval(0, 1)};
  EXPECT_THROW(general_solution(s), ConstructionError);
}

TEST(Properties, SubstitutionIdentity) {
  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    ReducibleSpec s{.phi = testsupport::random_positive(rng), .sigma = testsupport::random_smooth(rng),
                    .A = rng.uniform(-3, 3), .B = rng.uniform(-3, 3), .domain = DomainInterval(0, 2)};
    const auto ode = build_equation(s);
    const auto roots = characteristic_roots(s);
    if (roots.repeated) continue;
    for (const auto& b : fundamental_system(s, roots)) EXPECT_LE(residual2(b, ode), 1e-7);
  }
}

TEST(Properties, SuperpositionAndWronskian) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    ReducibleSpec s{.phi = testsupport::random_positive(rng), .sigma = testsupport::random_smooth(rng),
                    .A = rng.uniform(-3, 3), .B = rng.uniform(-3, 3), .domain = DomainInterval(0, 2)};
    const auto sol = general_solution(s);
    const auto ode = build_equation(s);
    const std::vector<double> c{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    EXPECT_TRUE(verify(sol, ode, c).pass);
    const auto basis = basis_of(sol);
    for (double x : s.domain.linspace(21)) EXPECT_GT(std::fabs(wronskian(basis, x)), 1e-12);
  }
}

TEST(Properties, RepeatedThresholdContinuity) {
  // A^2 - 4B crosses zero; the solution of y(0) = 1, y'(0) = 0 must be continuous.
  auto solve_at = [](double B) {
    const auto s = spec2("1", "0", 2.0, B, 0, 1);
    const auto sol = general_solution(s);
    const auto K = testsupport::fit_linear2(sol, 0.0, 1.0, 0.0);
    return std::pair{sol, K};
  };
  const auto [s0, k0] = solve_at(1.0);
  for (double eps : {1e-6, -1e-6}) {
    const auto [s1, k1] = solve_at(1.0 + eps);
    for (double x : DomainInterval(0, 1).linspace(11)) EXPECT_NEAR(s1(k1, x), s0(k0, x), 1e-5);
  }
}

TEST(Vop, InverseSquareForced) {
  auto s = spec2("x^2", "x", 0.0, 1.0, 1, 2);
  s.forcing = parse("x^4");  // monic forcing 1
  const auto sol = particular_solution_vop(s);
  const auto ode = build_equation(s);
  const auto basis = fundamental_system(s, characteristic_roots(s));
  for (double x : s.domain.linspace(5)) EXPECT_NEAR(std::fabs(wronskian(basis, x)), 1.0, 1e-9);
  for (auto c : {std::vector{0.0, 0.0}, std::vector{1.0, -2.0}}) {
    const auto rep = verify(sol, ode, c);
    EXPECT_TRUE(rep.pass);
    EXPECT_LT(rep.max_residual, 1e-7);
  }
}

TEST(Vop, ArctanForced) {
  auto s = spec2("1 + x^2", "x", 0.0, 4.0, 0, 1);
  s.forcing = parse("cos(x)");
  const auto rep = verify(particular_solution_vop(s), build_equation(s), {0.5, 0.5});
  EXPECT_TRUE(rep.pass) << rep.max_residual;
}

TEST(Vop, ZeroForcingIsHomogeneous) {
  const auto s = spec2("x", "0", 1.0, -4.0, 1, 2);
  const auto hom = general_solution(s);
  const auto vop = particular_solution_vop(s);
  for (double x : s.domain.linspace(9)) EXPECT_NEAR(vop({1.0, 2.0}, x), hom({1.0, 2.0}, x), 1e-12);
}

TEST(Membership, RecoversPowerFamily) {
  const double A = 1.5;
  const double B = -0.75;
  const LinearODE ode{2, {parse("2/x + 1.5/x^2"), parse("-0.75/x^4")}, std::nullopt, DomainInterval(1, 3)};
  const auto m = detect_membership(ode, parse("x^2"), constant(0.0));
  ASSERT_TRUE(m.member) << m.detail;
  EXPECT_NEAR(m.A, A, 1e-10);
  EXPECT_NEAR(m.B, B, 1e-10);
}

TEST(Membership, Trivial) {
  const LinearODE osc{2, {constant(0.0), constant(1.0)}, std::nullopt, DomainInterval(0, 1)};
  const auto m = detect_membership(osc, constant(1.0), constant(0.0));
  ASSERT_TRUE(m.member);
  EXPECT_NEAR(m.A, 0.0, 1e-14);
  EXPECT_NEAR(m.B, 1.0, 1e-14);

  const LinearODE airy{2, {constant(0.0), var_x()}, std::nullopt, DomainInterval(0, 1)};
  const auto bad = detect_membership(airy, constant(1.0), constant(0.0));
  EXPECT_FALSE(bad.member);
  EXPECT_GT(bad.max_deviation, 0.1);
  EXPECT_FALSE(bad.detail.empty());
}

TEST(FreeParticle, Examples) {
  const LinearODE crit{2, {constant(2.0), constant(1.0)}, std::nullopt, DomainInterval(0, 1)};
  const auto rep = reducibility_to_free_particle(crit);
  EXPECT_TRUE(rep.reducible);
  EXPECT_NEAR(rep.mapping(0.5), std::exp(-0.5), 1e-10);

  const LinearODE osc{2, {constant(0.0), constant(1.0)}, std::nullopt, DomainInterval(0, 1)};
  EXPECT_FALSE(reducibility_to_free_particle(osc).reducible);

  // Power family with alpha = 2, A = 2, B = 1.
  const LinearODE pw{2, {parse("2/x + 2/x^2"), parse("1/x^4")}, std::nullopt, DomainInterval(1, 2)};
  EXPECT_TRUE(reducibility_to_free_particle(pw).reducible);
}

TEST(Display, PaperForm) {
  const auto ode = build_equation(spec2("x", "0", 1.0, 2.0, 1, 2));
  const std::string s = to_string(ode);
  EXPECT_NE(s.find("y''"), std::string::npos);
  EXPECT_NE(s.find("= 0"), std::string::npos);
}
