#pragma once

// Command-line front end. run() parses arguments, prints one JSON document
// on `out`, and returns the process exit code:
//   0 success, 1 usage/parse error, 2 classification failure,
//   3 numerical failure (including a failed verification).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "odequad/odequad.hpp"

namespace odequad::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw Failure{1, "usage", "not a number: '" + s + "'"};
  return v;
}

inline double default_quad_tol() {
  if (const char* env = std::getenv("ODEQUAD_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && *end == '\0' && std::isfinite(v) && v > 0.0) return v;
  }
  return kDefaultQuadTol;
}

struct Common {
  std::vector<double> domain;
  int samples{11};
  double tol{1e-6};
  double quad_tol{default_quad_tol()};
  std::vector<std::string> constants;
  std::string fixtures_dir;
  std::string fixture;
  bool check{false};
};

inline void add_common(CLI::App* app, Common& c, bool with_domain = true, bool with_constants = true) {
  if (with_domain) app->add_option("--domain", c.domain, "interval endpoints lo hi")->expected(2)->required();
  app->add_option("--samples", c.samples, "number of sample points in the report")->check(CLI::Range(2, 100000));
  app->add_option("--tol", c.tol, "verification tolerance")->check(CLI::PositiveNumber);
  app->add_option("--quad-tol", c.quad_tol, "quadrature tolerance (default from ODEQUAD_TOL or 1e-10)")
      ->check(CLI::PositiveNumber);
  if (with_constants) app->add_option("--constant", c.constants, "values of the free constants (inf allowed)");
  app->add_option("--fixtures-dir", c.fixtures_dir, "directory of golden JSON reports");
  app->add_option("--fixture", c.fixture, "fixture name inside --fixtures-dir");
  app->add_flag("--check", c.check, "compare against the fixture instead of writing it");
}

inline DomainInterval domain_of(const Common& c) { return DomainInterval(c.domain.at(0), c.domain.at(1)); }

inline Expression expr(const std::string& text, const char* what) {
  try {
    return parse(text);
  } catch (const ExpressionParseError& e) {
    throw Failure{1, "parse", std::string(what) + ": " + e.what()};
  }
}

inline json report(const std::string& command, json input) {
  json doc;
  doc["version"] = kSchemaVersion;
  doc["command"] = command;
  doc["input"] = std::move(input);
  doc["class"] = nullptr;
  doc["recipe"] = nullptr;
  doc["samples"] = json::array();
  doc["verification"] = nullptr;
  return doc;
}

inline std::vector<double> constants_for(const ClosedFormSolution& sol, const Common& c, std::vector<double> fallback) {
  if (c.constants.empty()) {
    fallback.resize(sol.arity(), 0.0);
    return fallback;
  }
  if (c.constants.size() != sol.arity()) {
    throw Failure{1, "usage", "expected " + std::to_string(sol.arity()) + " constants, got " +
                                  std::to_string(c.constants.size())};
  }
  std::vector<double> v;
  for (const auto& s : c.constants) v.push_back(parse_real(s));
  return v;
}

inline json recipe_json(const ClosedFormSolution& sol, const std::vector<double>& constants) {
  json consts = json::object();
  for (std::size_t i = 0; i < sol.arity(); ++i) consts[sol.constant_names[i]] = number(constants[i]);
  json r{{"formula_id", sol.recipe}, {"constants", consts}};
  if (!sol.singular.empty()) {
    json sing = json::array();
    for (const auto& s : sol.singular) sing.push_back({{"description", s.description}, {"value", number(s.value)}});
    r["singular_solutions"] = sing;
  }
  return r;
}

inline json samples_json(const ClosedFormSolution& sol, const std::vector<double>& constants, int n) {
  json arr = json::array();
  for (double x : sol.domain.linspace(n)) {
    json s{{"x", x}};
    try {
      s["y"] = number(sol(constants, x));
    } catch (const PoleError&) {
      s["y"] = nullptr;
      s["pole"] = true;
    } catch (const DomainError&) {
      s["y"] = nullptr;
      s["undefined"] = true;
    }
    arr.push_back(s);
  }
  return arr;
}

inline json verification_json(const VerificationReport& r) {
  json v{{"max_residual", number(r.max_residual)}, {"pass", r.pass}, {"tol", r.tol}};
  if (r.ivp_checked) v["max_ivp_deviation"] = number(r.max_ivp_deviation);
  v["points_used"] = r.points_used;
  v["points_excluded"] = r.points_excluded;
  v["grid"] = r.grid;
  v["notes"] = r.notes;
  return v;
}

// Fills recipe, samples and verification; returns the exit code.
template <class Equation>
int attach_solution(json& doc, const ClosedFormSolution& sol, const Equation& eq, const std::vector<double>& constants,
                    const Common& c) {
  doc["recipe"] = recipe_json(sol, constants);
  doc["samples"] = samples_json(sol, constants, c.samples);
  VerifyOptions opt;
  opt.tol = c.tol;
  opt.ivp_anchor = true;
  const auto rep = verify(sol, eq, constants, opt);
  doc["verification"] = verification_json(rep);
  return rep.pass ? 0 : 3;
}

inline json roots_json(const CharacteristicRoots& r) {
  json arr = json::array();
  for (auto z : r.roots) arr.push_back({{"re", z.real()}, {"im", z.imag()}});
  return arr;
}

inline json riccati_json(const RiccatiEquation& eq) {
  return {{"P", to_string(eq.P)}, {"Q", to_string(eq.Q)}, {"R", to_string(eq.R)}};
}

inline json linear_json(const LinearODE& ode) {
  json j{{"order", ode.order}, {"equation", to_string(ode)}};
  if (!ode.display.empty()) j["display"] = to_string(ode, true);
  return j;
}

inline json class_json(const RiccatiClass& cls) {
  json j{{"form", to_string(cls.form)}};
  if (cls.form == RiccatiForm::KForm) j["k"] = cls.k;
  if (!cls.diagnostic.empty()) j["diagnostic"] = cls.diagnostic;
  return j;
}

// ---------------------------------------------------------------------------

struct Args {
  Common common;
  std::string P{"0"}, Q{"0"}, R{"0"};
  std::string phi{"1"}, sigma{"0"}, F;
  double A{0.0}, B{0.0}, C{0.0};
  std::string f{"0"}, g{"0"}, h, a{"0"}, b{"0"}, weight, solution, equation{"riccati"};
  std::string R_choice{"1"};
  double alpha{0.0};
  bool have_phi{false};
};

inline int cmd_riccati(json& doc, const Args& a) {
  const RiccatiEquation eq{expr(a.P, "P"), expr(a.Q, "Q"), expr(a.R, "R"), domain_of(a.common)};
  doc["equation"] = riccati_json(eq);
  const RiccatiClass cls = classify_linearizable(eq);
  doc["class"] = class_json(cls);
  if (cls.form == RiccatiForm::NotLinearizable) throw Failure{2, "classification", "not linearizable: " + cls.diagnostic};
  ClosedFormSolution sol = [&] {
    switch (cls.form) {
      case RiccatiForm::HomogeneousForm: return solve_homogeneous_form(eq, a.common.quad_tol);
      case RiccatiForm::LinearFirstOrder: return solve_linear_first_order(eq, a.common.quad_tol);
      default: return solve_k_form(eq, cls.k, a.common.quad_tol);
    }
  }();
  return attach_solution(doc, sol, eq, constants_for(sol, a.common, {}), a.common);
}

inline int cmd_linear(json& doc, const Args& a, int order) {
  ReducibleSpec spec{.phi = expr(a.phi, "phi"), .sigma = expr(a.sigma, "sigma"), .A = a.A, .B = a.B, .C = a.C,
                     .order = order, .domain = domain_of(a.common)};
  if (!a.F.empty()) spec.forcing = expr(a.F, "F");
  const LinearODE ode = build_equation(spec);
  doc["equation"] = linear_json(ode);
  const auto roots = characteristic_roots(spec);
  doc["class"] = {{"family", "reducible"}, {"order", order}, {"roots", roots_json(roots)}, {"repeated", roots.repeated}};
  const ClosedFormSolution sol = spec.forcing ? particular_solution_vop(spec, a.common.quad_tol)
                                              : general_solution(spec, a.common.quad_tol);
  return attach_solution(doc, sol, ode, constants_for(sol, a.common, {1.0}), a.common);
}

inline int cmd_to_linear(json& doc, const Args& a) {
  const RiccatiEquation eq{expr(a.P, "P"), expr(a.Q, "Q"), expr(a.R, "R"), domain_of(a.common)};
  doc["equation"] = riccati_json(eq);
  const LinearODE ode = riccati_to_linear(eq);
  doc["linear"] = linear_json(ode);
  const RiccatiClass cls = classify_linearizable(eq);
  doc["class"] = class_json(cls);
  if (cls.form == RiccatiForm::NotLinearizable) {
    doc["notes"] = json::array({"Riccati equation is not linearizable; no solution transported"});
    return 0;
  }
  const auto ysol = solve_riccati(eq, a.common.quad_tol).second;
  const auto usol = transport_solution(TransportDirection::RiccatiToLinear, ysol, eq.R, a.common.quad_tol);
  std::vector<double> fallback(ysol.arity(), 0.0);
  fallback.push_back(1.0);
  return attach_solution(doc, usol, ode, constants_for(usol, a.common, fallback), a.common);
}

inline int cmd_to_riccati(json& doc, const Args& a) {
  const DomainInterval dom = domain_of(a.common);
  std::vector<Expression> coeffs{expr(a.f, "f"), expr(a.g, "g")};
  const LinearODE ode{2, coeffs, std::nullopt, dom};
  const Expression R = expr(a.R_choice, "R");
  const RiccatiEquation eq = linear_to_riccati(ode, R);
  doc["linear"] = linear_json(ode);
  doc["equation"] = riccati_json(eq);

  std::optional<ClosedFormSolution> usol;
  if (a.have_phi) {
    const auto mem = detect_membership(ode, expr(a.phi, "phi"), expr(a.sigma, "sigma"));
    doc["class"] = {{"family", "reducible"}, {"member", mem.member}, {"A", mem.A}, {"B", mem.B},
                    {"max_deviation", mem.max_deviation}};
    if (mem.member) {
      ReducibleSpec spec{.phi = expr(a.phi, "phi"), .sigma = expr(a.sigma, "sigma"), .A = mem.A, .B = mem.B,
                         .domain = dom};
      usol = general_solution(spec, a.common.quad_tol);
    }
  } else if (auto rec = recognize_fundamental_pair(ode, a.common.quad_tol)) {
    doc["class"] = {{"family", "recognized"}, {"recipe", rec->recipe}};
    usol = superpose(std::move(rec->basis), rec->recipe, dom);
  }
  if (!usol) {
    doc["notes"] = json::array({"linear equation not recognized; no solution transported"});
    return 0;
  }
  const auto ysol = transport_solution(TransportDirection::LinearToRiccati, *usol, R, a.common.quad_tol);
  return attach_solution(doc, ysol, eq, constants_for(ysol, a.common, {}), a.common);
}

inline int cmd_family(json& doc, const Args& a) {
  const auto fam = integrable_riccati_family(expr(a.phi, "phi"), expr(a.sigma, "sigma"), a.A, a.B,
                                             expr(a.R_choice, "R"), domain_of(a.common));
  doc["equation"] = riccati_json(fam.riccati);
  doc["linear"] = linear_json(fam.linear);
  const auto roots = characteristic_roots(fam.spec);
  doc["class"] = {{"family", "reducible"}, {"order", 2}, {"roots", roots_json(roots)}, {"repeated", roots.repeated}};
  const auto sol = solve_family(fam, a.common.quad_tol);
  return attach_solution(doc, sol, fam.riccati, constants_for(sol, a.common, {}), a.common);
}

inline int cmd_ermakov(json& doc, const Args& a) {
  const DomainInterval dom = domain_of(a.common);
  ErmakovProblem p{.a = expr(a.a, "a"), .b = expr(a.b, "b"), .alpha = a.alpha, .domain = dom};
  if (!a.weight.empty()) p.weight = expr(a.weight, "weight");
  if (a.have_phi) {
    p.homogeneous = ReducibleSpec{.phi = expr(a.phi, "phi"), .sigma = expr(a.sigma, "sigma"), .A = a.A, .B = a.B,
                                  .domain = dom};
  }
  doc["equation"] = {{"a", to_string(p.a)}, {"b", to_string(p.b)}, {"alpha", p.alpha},
                     {"weight", p.weight ? to_string(*p.weight) : std::string("exp(-2*int a)")}};
  const auto sol = solve_ermakov(p, a.common.quad_tol);
  doc["class"] = {{"family", "ermakov"}};
  return attach_solution(doc, sol, p, constants_for(sol, a.common, {1.0}), a.common);
}

inline int cmd_special(json& doc, const Args& a) {
  const auto cls = classify_special_riccati(a.alpha);
  json j{{"kind", to_string(cls.kind)}};
  if (cls.kind == SpecialRiccatiKind::ElementaryIntegrable) j["k"] = cls.k;
  doc["class"] = j;
  return 0;
}

inline int cmd_verify(json& doc, const Args& a) {
  const DomainInterval dom = domain_of(a.common);
  const Expression y = expr(a.solution, "solution");
  const Expression dy = differentiate(y);
  ClosedFormSolution sol{{}, [y](Constants, double x) { return y(x); }, [dy](Constants, double x) { return dy(x); },
                         {}, "user-supplied", dom};
  doc["recipe"] = recipe_json(sol, {});
  doc["samples"] = samples_json(sol, {}, a.common.samples);
  VerifyOptions opt;
  opt.tol = a.common.tol;
  opt.ivp_anchor = true;
  VerificationReport rep;
  if (a.equation == "riccati") {
    const RiccatiEquation eq{expr(a.P, "P"), expr(a.Q, "Q"), expr(a.R, "R"), dom};
    doc["equation"] = riccati_json(eq);
    rep = verify(sol, eq, Constants{}, opt);
  } else {
    std::vector<Expression> coeffs{expr(a.f, "f"), expr(a.g, "g")};
    if (!a.h.empty()) coeffs.push_back(expr(a.h, "h"));
    LinearODE ode{static_cast<int>(coeffs.size()), coeffs, std::nullopt, dom};
    if (!a.F.empty()) ode.forcing = expr(a.F, "F");
    doc["equation"] = linear_json(ode);
    rep = verify(sol, ode, Constants{}, opt);
  }
  doc["verification"] = verification_json(rep);
  return rep.pass ? 0 : 3;
}

// ---------------------------------------------------------------------------

inline int emit(std::ostream& out, const json& doc, const Common& c, int code) {
  const std::string text = doc.dump(2) + "\n";
  if (!c.fixtures_dir.empty()) {
    if (c.fixture.empty()) {
      json err = doc;
      err["error"] = {{"kind", "usage"}, {"message", "--fixtures-dir needs --fixture NAME"}};
      out << err.dump(2) << "\n";
      return 1;
    }
    const auto path = std::filesystem::path(c.fixtures_dir) / (c.fixture + ".json");
    if (c.check) {
      std::ifstream in(path, std::ios::binary);
      std::stringstream golden;
      golden << in.rdbuf();
      if (!in || golden.str() != text) {
        json err = doc;
        err["error"] = {{"kind", "fixture-mismatch"}, {"message", "output differs from " + path.string()}};
        out << err.dump(2) << "\n";
        return 3;
      }
    } else {
      std::filesystem::create_directories(path.parent_path());
      std::ofstream(path, std::ios::binary) << text;
    }
  }
  out << text;
  return code;
}

inline int run(std::vector<std::string> args, std::ostream& out) {
  CLI::App app{"Classify, solve and verify quadrature-integrable ODEs", "odequad"};
  app.require_subcommand(1);
  Args a;
  json input = json::object();

  auto* ric = app.add_subcommand("riccati", "solve a linearizable Riccati equation y' = P + Q y + R y^2");
  ric->add_option("--P", a.P);
  ric->add_option("--Q", a.Q);
  ric->add_option("--R", a.R);
  add_common(ric, a.common);

  auto* lin2 = app.add_subcommand("linear2", "second-order equation generated by (phi, sigma, A, B)");
  auto* lin3 = app.add_subcommand("linear3", "third-order equation generated by (phi, sigma, A, B, C)");
  for (auto* s : {lin2, lin3}) {
    s->add_option("--phi", a.phi);
    s->add_option("--sigma", a.sigma);
    s->add_option("--A", a.A);
    s->add_option("--B", a.B);
    add_common(s, a.common);
  }
  lin2->add_option("--F", a.F, "right-hand side (variation of parameters)");
  lin3->add_option("--C", a.C);

  auto* bridge = app.add_subcommand("bridge", "Riccati <-> second-order linear conversion");
  bridge->require_subcommand(1);
  auto* to_lin = bridge->add_subcommand("to-linear", "Riccati equation to u'' + f u' + g u = 0");
  to_lin->add_option("--P", a.P);
  to_lin->add_option("--Q", a.Q);
  to_lin->add_option("--R", a.R);
  add_common(to_lin, a.common);
  auto* to_ric = bridge->add_subcommand("to-riccati", "u'' + f u' + g u = 0 to a Riccati equation");
  to_ric->add_option("--f", a.f);
  to_ric->add_option("--g", a.g);
  to_ric->add_option("--R", a.R_choice, "free function R(x), default 1");
  auto* to_ric_phi = to_ric->add_option("--phi", a.phi, "candidate phi for membership detection");
  to_ric->add_option("--sigma", a.sigma)->needs(to_ric_phi);
  add_common(to_ric, a.common);

  auto* fam = app.add_subcommand("family", "Riccati equation integrable through the (phi, sigma, A, B) family");
  fam->add_option("--phi", a.phi);
  fam->add_option("--sigma", a.sigma);
  fam->add_option("--A", a.A);
  fam->add_option("--B", a.B);
  fam->add_option("--R", a.R_choice);
  add_common(fam, a.common);

  auto* erm = app.add_subcommand("ermakov", "u'' + a u' + b u = alpha w / u^3");
  erm->add_option("--a", a.a);
  erm->add_option("--b", a.b);
  erm->add_option("--alpha", a.alpha);
  erm->add_option("--weight", a.weight, "w(x); default exp(-2 int a) based at the left end");
  auto* erm_phi = erm->add_option("--phi", a.phi, "phi of a reducible spec for the homogeneous part");
  erm->add_option("--sigma", a.sigma)->needs(erm_phi);
  erm->add_option("--A", a.A)->needs(erm_phi);
  erm->add_option("--B", a.B)->needs(erm_phi);
  add_common(erm, a.common);

  auto* special = app.add_subcommand("classify-special", "classify the exponent of y' = a y^2 + b x^alpha");
  special->add_option("--alpha", a.alpha)->required();
  add_common(special, a.common, false, false);

  auto* ver = app.add_subcommand("verify", "verify a candidate solution against an equation");
  ver->set_help_flag("--help", "print this help message and exit");
  ver->add_option("--equation", a.equation)->check(CLI::IsMember({"riccati", "linear"}));
  ver->add_option("--solution", a.solution)->required();
  ver->add_option("--P", a.P);
  ver->add_option("--Q", a.Q);
  ver->add_option("--R", a.R);
  ver->add_option("--f", a.f);
  ver->add_option("--g", a.g);
  ver->add_option("--h", a.h);
  ver->add_option("--F", a.F);
  add_common(ver, a.common, true, false);

  std::string command = "odequad";
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    json doc = report(command, input);
    doc["error"] = {{"kind", "usage"}, {"message", e.what()}};
    out << doc.dump(2) << "\n";
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  command = sub->get_name();
  if (sub == bridge) {
    sub = bridge->get_subcommands().front();
    command += " " + sub->get_name();
  }
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    // Fixture plumbing is not part of the request.
    if (opt->get_name() == "--fixtures-dir" || opt->get_name() == "--fixture" || opt->get_name() == "--check") continue;
    const auto results = opt->results();
    const std::string key = opt->get_name().substr(opt->get_name().find_first_not_of('-'));
    if (results.size() == 1) {
      input[key] = results.front();
    } else {
      input[key] = results;
    }
  }
  a.have_phi = (sub == to_ric && to_ric_phi->count() > 0) || (sub == erm && erm_phi->count() > 0);

  json doc = report(command, input);
  int code = 0;
  try {
    if (sub == ric) code = cmd_riccati(doc, a);
    else if (sub == lin2) code = cmd_linear(doc, a, 2);
    else if (sub == lin3) code = cmd_linear(doc, a, 3);
    else if (sub == to_lin) code = cmd_to_linear(doc, a);
    else if (sub == to_ric) code = cmd_to_riccati(doc, a);
    else if (sub == fam) code = cmd_family(doc, a);
    else if (sub == erm) code = cmd_ermakov(doc, a);
    else if (sub == special) code = cmd_special(doc, a);
    else code = cmd_verify(doc, a);
  } catch (const Failure& f) {
    doc["error"] = {{"kind", f.kind}, {"message", f.message}};
    code = f.code;
  } catch (const ClassificationError& e) {
    doc["error"] = {{"kind", "classification"}, {"message", e.what()}};
    code = 2;
  } catch (const ExpressionParseError& e) {
    doc["error"] = {{"kind", "parse"}, {"message", e.what()}};
    code = 1;
  } catch (const Error& e) {
    doc["error"] = {{"kind", "numerical"}, {"message", e.what()}};
    code = 3;
  } catch (const std::exception& e) {
    doc["error"] = {{"kind", "internal"}, {"message", e.what()}};
    code = 3;
  }
  return emit(out, doc, a.common, code);
}

}  // namespace odequad::cli
