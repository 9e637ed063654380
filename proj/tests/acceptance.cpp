// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "json.hpp"
#include "ostrograd.h"
#include "ostrograd/dynamics.hpp"
#include "ostrograd/jetspace.hpp"
#include "ostrograd/legendre.hpp"
#include "ostrograd/serialize.hpp"

using namespace ostrograd;
using sym::Expr;
using sym::equivalent;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string model_path(const std::string& f) { return std::string(OSTROGRAD_SOURCE_DIR) + "/models/" + f; }

struct Run {
  ostrograd_status status = OSTROGRAD_OK;
  std::string text;  // report, or the error message
  json report;
};

Run run_capi(const std::string& model, const std::string& command, const json& opts = json::object()) {
  Run r;
  ostrograd_model* m = nullptr;
  r.status = ostrograd_model_load(model_path(model).c_str(), &m);
  if (r.status != OSTROGRAD_OK) {
    r.text = ostrograd_last_error();
    return r;
  }
  char* out = nullptr;
  json o = opts;
  o["seed"] = 42;
  r.status = ostrograd_run(m, command.c_str(), o.dump().c_str(), &out);
  ostrograd_model_free(m);
  if (r.status != OSTROGRAD_OK) {
    r.text = ostrograd_last_error();
    return r;
  }
  r.text = out;
  ostrograd_string_free(out);
  r.report = json::parse(r.text);
  return r;
}

Expr expr_of(const json& j) { return sym::parse_prefix(j.get<std::string>()); }

Expr mu(int d = 0) { return sym::fn("mu", {Expr::symbol("x")}, {d}); }
Expr rho(int d = 0) { return sym::fn("rho", {Expr::symbol("x")}, {d}); }
Expr var(const std::string& name) { return Expr::symbol(name); }

bool proportional(const Expr& a, const Expr& b) {
  for (long num : {1L, -1L, 2L, -2L})
    for (long den : {1L, 2L})
      if (equivalent(a, Expr::rational(num, den) * b)) return true;
  return false;
}

Expr dot(const std::string& a, const std::string& b) {
  Expr s(0);
  for (const char* c : {"x", "y", "z"}) s = s + var(a + c) * var(b + c);
  return s;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Lagrangian variable_beam() {
  Expr x = var("x");
  return fixtures::beam(1 + x * x / 4, 1 + x / 2);
}

Outcome beam_legendre() {
  Outcome o;
  auto r = run_capi("beam.model", "legendre");
  o.require(r.status == OSTROGRAD_OK, "legendre failed: " + r.text);
  if (!o.pass) return o;
  Expr q0 = var("q0y"), q1 = var("q1y"), q2 = var("q2y"), q3 = var("q3y");
  const auto& p = r.report["p_hat"];
  o.require(p.size() == 2 && p[0]["name"] == "p0y" && p[1]["name"] == "p1y", "momentum names");
  o.require(equivalent(expr_of(p[0]["expr"]), -q2 * mu(1) - q3 * mu()), "p0");
  o.require(equivalent(expr_of(p[1]["expr"]), q2 * mu()), "p1");
  o.require(equivalent(expr_of(r.report["p_extended"]),
                       -Expr::rational(1, 2) * mu() * q2 * q2 + q1 * q2 * mu(1) + q1 * q3 * mu() + q0 * rho()),
            "p");
  return o;
}

Outcome beam_el() {
  Outcome o;
  auto r = run_capi("beam.model", "el");
  o.require(r.status == OSTROGRAD_OK, "el failed: " + r.text);
  if (!o.pass) return o;
  o.require(r.report["equation_order"] == 4, "equation order");
  o.require(equivalent(expr_of(r.report["equations"][0]["expr"]),
                       rho() + var("q2y") * mu(2) + 2 * var("q3y") * mu(1) + var("q4y") * mu()),
            "variable-coefficient equation");
  auto h = run_capi("homogeneous_beam.model", "el");
  o.require(h.status == OSTROGRAD_OK, "homogeneous el failed: " + h.text);
  if (!o.pass) return o;
  // canonical form, compared structurally
  o.require(expr_of(h.report["equations"][0]["expr"]) == var("mu") * var("q4y") + var("rho"),
            "constant coefficients do not normalize to mu q4 + rho");
  return o;
}

Outcome beam_hamiltonian() {
  Outcome o;
  auto r = run_capi("beam.model", "hamiltonian");
  o.require(r.status == OSTROGRAD_OK, "hamiltonian failed: " + r.text);
  if (!o.pass) return o;
  Expr q0 = var("q0y"), q1 = var("q1y"), p0 = var("p0y"), p1 = var("p1y");
  o.require(equivalent(expr_of(r.report["H"]), p0 * q1 + p1 * p1 / (2 * mu()) - rho() * q0), "H");
  std::map<std::string, Expr> rate;
  for (const auto& e : r.report["equations"]) rate.emplace(e["coord"].get<std::string>(), expr_of(e["rate"]));
  o.require(rate.size() == 4, "four Hamilton equations");
  if (!o.pass) return o;
  o.require(equivalent(rate.at("q0y"), q1), "dq0");
  o.require(equivalent(rate.at("q1y"), p1 / mu()), "dq1 = p1/mu");
  o.require(equivalent(rate.at("p0y"), rho()), "dp0");
  o.require(equivalent(rate.at("p1y"), -p0), "dp1 = -p0");
  return o;
}

Outcome particle_singular() {
  Outcome o;
  auto a = run_capi("particle.model", "analyze");
  o.require(a.status == OSTROGRAD_OK, "analyze failed: " + a.text);
  if (!o.pass) return o;
  o.require(a.report["regular"] == false && a.report["classification"] == "singular", "not classified singular");
  o.require(a.report["probes"] == 64 && a.report["singular_probes"] == 64,
            "singular at " + a.report["singular_probes"].dump() + "/" + a.report["probes"].dump() + " probes");
  auto h = run_capi("particle.model", "hamiltonian");
  o.require(h.status == OSTROGRAD_ERR_SINGULAR, std::string("hamiltonian status ") + ostrograd_status_name(h.status));
  o.require(h.text.find("singular") != std::string::npos && h.text.find("constraint algorithm") != std::string::npos,
            "message: " + h.text);
  return o;
}

Outcome particle_ledger() {
  Outcome o;
  auto r = run_capi("particle.model", "constraints", {{"type1", true}});
  o.require(r.status == OSTROGRAD_OK, "constraints failed: " + r.text);
  if (!o.pass) return o;
  const auto& g = r.report["generations"];
  o.require(g.size() == 3, "generation count " + std::to_string(g.size()));
  if (!o.pass) return o;
  std::vector<json> g0;
  for (const auto& c : g[0])
    if (c["tier"] != "graph") g0.push_back(c);
  Expr alpha = var("alpha");
  o.require(g0.size() == 2, "generation 0 size");
  if (g0.size() == 2) {
    o.require(proportional(expr_of(g0[0]["expr"]), dot("p1", "q1")), "phi0_1");
    o.require(proportional(expr_of(g0[1]["expr"]), dot("p1", "p1") - alpha * alpha / dot("q1", "q1")), "phi0_2");
  }
  o.require(g[1].size() == 5, "generation 1 size");
  if (g[1].size() == 5) {
    o.require(proportional(expr_of(g[1][0]["expr"]), dot("p0", "q1")), "phi1_1");
    o.require(proportional(expr_of(g[1][1]["expr"]), dot("p0", "p1")), "phi1_2");
    std::vector<Expr> args{var("t"), var("q0x"), var("q0y"), var("q0z")};
    for (int A = 0; A < 3; ++A) {
      std::vector<int> ord(4, 0);
      ord[A + 1] = 1;
      o.require(proportional(expr_of(g[1][2 + A]["expr"]), sym::fn("V", args, ord)),
                "phi1_3," + std::string(1, "xyz"[A]));
    }
  }
  o.require(g[2].size() == 1 && proportional(expr_of(g[2][0]["expr"]), dot("p0", "p0")), "phi2");
  o.require(r.report["status"] == "stabilized", "status " + r.report["status"].dump());
  return o;
}

Outcome beam_stabilizes() {
  Outcome o;
  auto r = run_capi("beam.model", "constraints");
  o.require(r.status == OSTROGRAD_OK, "constraints failed: " + r.text);
  if (!o.pass) return o;
  o.require(r.report["status"] == "stabilized", "status");
  o.require(r.report["generations"].size() == 1, "more than one generation");
  std::map<std::string, Expr> F;
  for (const auto& c : r.report["solved_components"]) F.emplace(c["name"].get<std::string>(), expr_of(c["expr"]));
  o.require(F.count("F2y") && F.count("F3y"), "F2, F3 not both solved");
  if (!o.pass) return o;
  o.require(equivalent(F.at("F2y"), var("q3y")), "F2 = q3");
  o.require(equivalent(F.at("F3y"), -(rho() + var("q2y") * mu(2) + 2 * var("q3y") * mu(1)) / mu()), "F3");
  o.require(r.report["free_components"].empty(), "free components left");
  o.require(r.report["semispray_type"] == 1, "semispray type " + r.report["semispray_type"].dump());
  return o;
}

Outcome momentum_recursion() {
  Outcome o;
  sym::Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + trial % 2, k = 1 + (trial / 2) % 3;
    auto L = fixtures::random_polynomial(rng, n, k);
    const auto& s = L.spec();
    auto p = legendre_map(L).p_hat;
    for (int A = 0; A < n; ++A) {
      o.require(equivalent(p[k - 1][A], sym::diff(L.L(), s.q_name(k, A))), "top momentum, trial " + std::to_string(trial));
      for (int r = 1; r < k; ++r)
        o.require(equivalent(p[r - 1][A], sym::diff(L.L(), s.q_name(r, A)) - total_derivative(s, p[r][A])),
                  "trial " + std::to_string(trial) + " r=" + std::to_string(r));
    }
    ++checked;
  }
  if (o.pass) o.detail = std::to_string(checked) + " Lagrangians";
  return o;
}

Outcome cartan_kernel() {
  Outcome o;
  sym::Rng rng(11);
  std::vector<Lagrangian> Ls{variable_beam()};
  for (int i = 0; i < 10; ++i) Ls.push_back(fixtures::random_regular_quadratic(rng, 1 + i % 2, 1 + i % 3));
  double worst = 0;
  for (const auto& L : Ls) {
    auto env = defined_env(L.spec());
    Semispray X(L, env);
    std::vector<std::vector<double>> pts;
    for (int p = 0; p < 16; ++p) {
      std::vector<double> x(1 + X.dimension());
      for (auto& c : x) c = rng.probe();
      pts.push_back(x);
    }
    for (double r : kernel_residuals(L, X, env, pts)) worst = std::max(worst, r);
  }
  o.require(worst < 1e-8, "max residual " + fmt(worst));
  if (o.pass) o.detail = "max residual " + fmt(worst);
  return o;
}

double oscillator_error(double h) {
  auto L = fixtures::oscillator(1.0);
  auto tr = integrate_lagrangian(L, defined_env(L.spec()), {1, 0}, {h, 0, 2 * std::numbers::pi});
  double e = 0;
  for (std::size_t s = 0; s < tr.t.size(); ++s) e = std::max(e, std::abs(tr.x[s][0] - std::cos(tr.t[s])));
  return e;
}

Outcome trajectories() {
  Outcome o;
  double osc = oscillator_error(1e-3);
  o.require(osc < 1e-8, "oscillator error " + fmt(osc));

  auto B = fixtures::homogeneous_beam(Expr(1), Expr(24));
  auto tr = integrate_lagrangian(B, defined_env(B.spec()), {0, 0, 0, 0}, {1e-3, 0, 1});
  double beam = 0;
  for (std::size_t s = 0; s < tr.t.size(); ++s) beam = std::max(beam, std::abs(tr.x[s][0] + std::pow(tr.t[s], 4)));
  o.require(!tr.truncated && beam < 1e-8, "beam error " + fmt(beam));

  // RK4 is exact on the quartic, so the order is measured on the oscillator
  // and on the variable-coefficient beam
  double e1 = oscillator_error(0.1), e2 = oscillator_error(0.05), e3 = oscillator_error(0.025);
  std::vector<double> ratios{e1 / e2, e2 / e3};
  auto V = variable_beam();
  auto env = defined_env(V.spec());
  std::vector<double> y0{0, 0.5, -1, 0.25};
  auto end = [&](double h) { return integrate_lagrangian(V, env, y0, {h, 0, 1}).x.back(); };
  auto a = end(0.1), b = end(0.05), c = end(0.025);
  ratios.push_back(max_abs_diff(a, b) / max_abs_diff(b, c));
  std::string rs;
  for (double r : ratios) {
    rs += (rs.empty() ? "" : ", ") + fmt(r);
    o.require(r >= 14 && r <= 18, "ratio " + fmt(r));
  }
  if (o.pass) o.detail = "oscillator " + fmt(osc) + ", beam " + fmt(beam) + ", ratios " + rs;
  return o;
}

Outcome flow_commutation() {
  Outcome o;
  double worst = 0;
  for (auto L : {variable_beam(), fixtures::homogeneous_beam(Expr(1), Expr(24))}) {
    auto env = defined_env(L.spec());
    auto map = legendre_map(L);
    auto tl = integrate_lagrangian(L, env, {0.1, -0.2, 0.3, 0.4}, {1e-3, 0, 1});
    auto th = legendre_transport(L, map, env, tl);
    auto flow = integrate_hamiltonian(hamiltonian(L, map), env, th.x[0], {1e-3, 0, 1});
    o.require(flow.t.size() == th.t.size(), "sample counts differ");
    if (!o.pass) return o;
    for (std::size_t s = 0; s < th.t.size(); ++s) worst = std::max(worst, max_abs_diff(th.x[s], flow.x[s]));
  }
  o.require(worst < 1e-6, "max gap " + fmt(worst));
  if (o.pass) o.detail = "max gap " + fmt(worst);
  return o;
}

Outcome rank_equality() {
  Outcome o;
  sym::Rng rng(13);
  for (auto L : {fixtures::beam(), fixtures::particle(3)}) {
    const auto& s = L.spec();
    auto env = random_env(s, rng);
    LegendreJacobian J(L, legendre_map(L), env);
    auto vars = s.jet_coordinates(2 * L.k() - 1);
    std::string ranks;
    for (int p = 0; p < 16; ++p) {
      std::vector<double> x(vars.size());
      for (auto& c : x) c = rng.probe();
      auto r = J.ranks(x);
      o.require(r.fl == r.extended, "ranks " + std::to_string(r.fl) + " vs " + std::to_string(r.extended));
      if (p == 0) ranks = std::to_string(r.fl);
    }
    o.detail += (o.detail.empty() ? "rank " : ", ") + ranks;
  }
  return o;
}

// stdout+stderr and exit status of a shell command
std::pair<std::string, int> capture(const std::string& cmd) {
  std::string out;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) return {"", -1};
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
  return {out, pclose(p)};
}

Outcome determinism() {
  Outcome o;
  struct Case {
    std::string model, command;
    bool type1;
  };
  const Case cases[] = {
      {"beam.model", "legendre", false},      {"beam.model", "el", false},
      {"homogeneous_beam.model", "el", false}, {"beam.model", "hamiltonian", false},
      {"particle.model", "analyze", false},   {"particle.model", "hamiltonian", false},
      {"particle.model", "constraints", true}, {"beam.model", "constraints", false},
  };
  for (const auto& c : cases) {
    std::string cmd = std::string("'") + OSTROGRAD_CLI + "' " + c.command + (c.type1 ? " --type1" : "") +
                      " --seed 42 '" + model_path(c.model) + "'";
    auto a = capture(cmd), b = capture(cmd);
    std::string tag = c.command + " " + c.model;
    o.require(a == b, tag + ": runs differ");
    o.require(!a.first.empty(), tag + ": no output");
    auto r = run_capi(c.model, c.command, c.type1 ? json{{"type1", true}} : json::object());
    if (r.status == OSTROGRAD_OK)
      o.require(a.first == r.text + "\n", tag + ": CLI and library differ");
    else
      o.require(a.second != 0 && a.first.find(r.text) != std::string::npos, tag + ": error text differs");
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> all = {
      {1, "beam Legendre map", beam_legendre},
      {2, "beam Euler-Lagrange equation", beam_el},
      {3, "beam Hamiltonian and Hamilton equations", beam_hamiltonian},
      {4, "relativistic particle is singular, hamiltonian refuses", particle_singular},
      {5, "particle constraint ledger with type-1 ansatz", particle_ledger},
      {6, "beam stabilizes at generation 0 with a type-1 semispray", beam_stabilizes},
      {7, "momentum recursion on random polynomial Lagrangians", momentum_recursion},
      {8, "semispray in the kernel of the Cartan 2-form", cartan_kernel},
      {9, "trajectory oracles and RK4 order", trajectories},
      {10, "Lagrangian flow and Hamiltonian flow commute with FL", flow_commutation},
      {11, "rank of FL equals rank of the extended map", rank_equality},
      {12, "byte-identical reports with --seed 42", determinism},
  };
  int failed = 0;
  auto start = std::chrono::steady_clock::now();
  for (const auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.title;
    if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
    std::cout << " [" << fmt(secs) << " s]\n" << std::flush;
  }
  double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << " in "
            << fmt(total) << " s\n";
  return failed ? 1 : 0;
}
