#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odequad/domain.hpp"
#include "odequad/errors.hpp"
#include "odequad/quad.hpp"

namespace odequad {

using Constants = std::span<const double>;
using SolutionFn = std::function<double(Constants, double)>;

// An equilibrium solution excluded from the general-solution parameterization.
struct SingularSolution {
  std::string description;
  double value;
};

// A general solution: maps (free constants, x) to the solution value. Every
// evaluator throws PoleError instead of returning a blown-up number.
struct ClosedFormSolution {
  std::vector<std::string> constant_names;
  SolutionFn value;
  SolutionFn derivative;  // empty when no closed form is available
  std::function<std::vector<double>(Constants)> poles;  // empty when pole-free
  std::string recipe;
  DomainInterval domain;
  std::vector<SingularSolution> singular{};
  bool linear_in_constants{false};

  std::size_t arity() const { return constant_names.size(); }

  double operator()(Constants c, double x) const {
    check_arity(c);
    return value(c, x);
  }
  double operator()(std::initializer_list<double> c, double x) const {
    return (*this)(Constants(c.begin(), c.size()), x);
  }

  bool has_derivative() const { return static_cast<bool>(derivative); }
  double deriv(Constants c, double x) const {
    check_arity(c);
    if (!derivative) throw Error("solution '" + recipe + "' has no closed-form derivative");
    return derivative(c, x);
  }
  double deriv(std::initializer_list<double> c, double x) const {
    return deriv(Constants(c.begin(), c.size()), x);
  }

  std::vector<double> pole_locations(Constants c) const {
    if (!poles) return {};
    return poles(c);
  }

 private:
  void check_arity(Constants c) const {
    if (c.size() != constant_names.size()) {
      throw Error("solution '" + recipe + "' expects " + std::to_string(constant_names.size()) +
                  " constants, got " + std::to_string(c.size()));
    }
  }
};

// A basis function of a linear homogeneous equation with its derivative.
struct BasisFunction {
  RealFunction value;
  RealFunction derivative;
};

using FundamentalSystem = std::vector<BasisFunction>;

inline ClosedFormSolution superpose(FundamentalSystem basis, std::string recipe, DomainInterval domain,
                                    const std::string& prefix = "K") {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < basis.size(); ++i) names.push_back(prefix + std::to_string(i + 1));
  auto shared = std::make_shared<const FundamentalSystem>(std::move(basis));
  auto value = [shared](Constants c, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < shared->size(); ++i) {
      if (c[i] != 0.0) s += c[i] * (*shared)[i].value(x);
    }
    return s;
  };
  auto deriv = [shared](Constants c, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < shared->size(); ++i) {
      if (c[i] != 0.0) s += c[i] * (*shared)[i].derivative(x);
    }
    return s;
  };
  ClosedFormSolution sol{std::move(names), value, deriv, {}, std::move(recipe), domain};
  sol.linear_in_constants = true;
  return sol;
}

// Recovers the basis of a solution that is linear in its constants.
inline FundamentalSystem basis_of(const ClosedFormSolution& sol) {
  if (!sol.linear_in_constants) {
    throw Error("solution '" + sol.recipe + "' is not linear in its constants");
  }
  FundamentalSystem basis;
  const std::size_t n = sol.arity();
  for (std::size_t i = 0; i < n; ++i) {
    auto unit = std::make_shared<std::vector<double>>(n, 0.0);
    (*unit)[i] = 1.0;
    BasisFunction b;
    b.value = [sol, unit](double x) { return sol.value(*unit, x); };
    if (sol.derivative) {
      b.derivative = [sol, unit](double x) { return sol.derivative(*unit, x); };
    }
    basis.push_back(std::move(b));
  }
  return basis;
}

}  // namespace odequad
