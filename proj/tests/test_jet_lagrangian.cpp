#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "ostrograd/error.hpp"
#include "ostrograd/lagrangian.hpp"
#include "ostrograd/legendre.hpp"
#include "ostrograd/numeric.hpp"
#include "random_expr.hpp"

using namespace ostrograd;
using sym::Expr;
using sym::equivalent;
using sym::fn;

namespace {

Expr mu(const JetSpec& s, int d = 0) { return fn("mu", {s.t()}, {d}); }
Expr rho(const JetSpec& s, int d = 0) { return fn("rho", {s.t()}, {d}); }

}  // namespace

TEST_CASE("total derivative") {
  JetSpec s({"y"}, 2, "x", {{"mu", {"x"}, std::nullopt}});
  CHECK(total_derivative(s, s.q(0, 0)) == s.q(1, 0));
  CHECK(total_derivative(s, s.t()).is_one());
  CHECK(equivalent(total_derivative(s, mu(s) * s.q(2, 0)), mu(s, 1) * s.q(2, 0) + mu(s) * s.q(3, 0)));
  CHECK(iterated_total_derivative(s, s.q(1, 0), 0) == s.q(1, 0));
  CHECK(iterated_total_derivative(s, s.q(0, 0), 2) == s.q(2, 0));
  CHECK(equivalent(iterated_total_derivative(s, mu(s) * s.q(2, 0), 2),
                   mu(s, 2) * s.q(2, 0) + 2 * mu(s, 1) * s.q(3, 0) + mu(s) * s.q(4, 0)));
  CHECK_THROWS_AS(total_derivative(s, s.q(3, 0), 2), Error);
  // momenta are constants under d_T
  CHECK(total_derivative(s, s.p(0, 0) * s.q(0, 0)) == s.p(0, 0) * s.q(1, 0));
}

TEST_CASE("total derivative matches finite differences along a curve") {
  // curve y(x) = sin(2x) + x^3, e = mu(x) q1 q2 + q0^2 with mu = exp(x)
  JetSpec s({"y"}, 2, "x", {{"mu", {"x"}, sym::exp(Expr::symbol("x"))}});
  Expr e = mu(s) * s.q(1, 0) * s.q(2, 0) + s.q(0, 0) * s.q(0, 0);
  Expr de = total_derivative(s, e);
  NumericEnv env = defined_env(s);
  auto curve = [](double x, int d) {
    switch (d) {
      case 0: return std::sin(2 * x) + x * x * x;
      case 1: return 2 * std::cos(2 * x) + 3 * x * x;
      case 2: return -4 * std::sin(2 * x) + 6 * x;
      default: return -8 * std::cos(2 * x) + 6;
    }
  };
  auto vars = s.jet_coordinates(3);
  Evaluator ev_e(std::span<const Expr>(&e, 1), vars, env), ev_d(std::span<const Expr>(&de, 1), vars, env);
  auto at = [&](const Evaluator& ev, double x) {
    std::vector<double> pt{x, curve(x, 0), curve(x, 1), curve(x, 2), curve(x, 3)};
    return ev(pt)[0];
  };
  double x0 = 0.4, prev = 0;
  for (int r = 0; r < 4; ++r) {
    double h = 1e-2 / (1 << r);
    double fd = (at(ev_e, x0 + h) - at(ev_e, x0 - h)) / (2 * h);
    double err = std::abs(fd - at(ev_d, x0));
    if (r > 0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("shift identity between d_T and partial derivatives") {
  JetSpec s({"a", "b"}, 2);
  sym::Rng rng(11);
  std::vector<std::string> vars;
  for (int i = 0; i <= 2; ++i)
    for (int A = 0; A < 2; ++A) vars.push_back(s.q_name(i, A));
  for (int trial = 0; trial < 10; ++trial) {
    // polynomial e over q0..q2
    Expr e;
    for (int m = 0; m < 4; ++m) {
      Expr mono = Expr::rational(static_cast<long>(rng.bits() % 7) - 3, 1);
      for (int f = 0; f < 3; ++f) mono = mono * Expr::symbol(vars[rng.bits() % vars.size()]);
      e += mono;
    }
    Expr de = total_derivative(s, e, 2);
    for (int i = 0; i < 2; ++i)
      for (int A = 0; A < 2; ++A) {
        Expr lhs = sym::diff(de, s.q_name(i + 1, A));
        Expr rhs = sym::diff(e, s.q_name(i, A)) + total_derivative(s, sym::diff(e, s.q_name(i + 1, A)), 2);
        CHECK(equivalent(lhs, rhs));
      }
  }
}

TEST_CASE("semispray classification") {
  JetSpec s({"y"}, 2, "x");
  VectorFieldAnsatz X;
  X.order = 3;
  X.jet = {{s.q(1, 0)}, {s.q(2, 0)}, {s.q(3, 0)}, {Expr::symbol("F3y")}};
  CHECK(classify_semispray(s, X) == 1);
  X.jet = {{s.q(1, 0)}, {Expr::symbol("G")}, {Expr::symbol("H")}, {Expr::symbol("F3y")}};
  CHECK(classify_semispray(s, X) == 3);
  X.jet = {{s.q(1, 0)}, {s.q(2, 0)}, {s.F(2, 0)}, {s.F(3, 0)}};
  CHECK(classify_semispray(s, X) == 2);
  X.jet[0][0] = s.q(2, 0);
  CHECK_FALSE(classify_semispray(s, X).has_value());
  // a type-1 field also passes the weaker chain checks
  X.jet = {{s.q(1, 0)}, {s.q(2, 0)}, {s.q(3, 0)}, {Expr::symbol("F3y")}};
  VectorFieldAnsatz Y = X;
  Y.jet[3][0] = Expr::symbol("other");
  CHECK(classify_semispray(s, Y) == 1);
  X.jet.pop_back();
  CHECK_THROWS_AS(classify_semispray(s, X), Error);
}

TEST_CASE("jet point JSON") {
  JetSpec s({"a", "b"}, 1);
  JetPoint p{0.5, {{1, 2}, {3, 4}}};
  auto j = to_json(p);
  JetPoint r = jet_point_from_json(s, j);
  CHECK(r.t == 0.5);
  CHECK(r.q == p.q);
  CHECK(r.order() == 1);
  CHECK_THROWS_AS(jet_point_from_json(s, nlohmann::json::parse(R"({"t":0,"q":[[1]]})")), Error);
}

TEST_CASE("beam Hessian, regularity, EL") {
  auto L = fixtures::beam();
  const auto& s = L.spec();
  auto W = hessian(L);
  REQUIRE(W.size() == 1);
  CHECK(W[0][0] == mu(s));
  CHECK(regularity(L).regular);
  auto el = euler_lagrange(L);
  CHECK(equivalent(el[0], rho(s) + s.q(2, 0) * mu(s, 2) + 2 * s.q(3, 0) * mu(s, 1) + s.q(4, 0) * mu(s)));
  auto hb = fixtures::homogeneous_beam();
  auto elh = euler_lagrange(hb);
  CHECK(elh[0] == Expr::symbol("mu") * hb.spec().q(4, 0) + Expr::symbol("rho"));
}

TEST_CASE("other Lagrangians") {
  auto osc = fixtures::oscillator(2.0);
  auto el = euler_lagrange(osc);
  const auto& s = osc.spec();
  CHECK(equivalent(el[0], -Expr::symbol("omega") * Expr::symbol("omega") * s.q(0, 0) - s.q(2, 0)));
  JetSpec one({"y"}, 2);
  auto rep = regularity(Lagrangian(one, one.q(2, 0)));
  CHECK_FALSE(rep.regular);
  CHECK(rep.corank == 1);
  JetSpec free({"x"}, 1);
  auto Wf = hessian(Lagrangian(free, Expr::rational(1, 2) * free.q(1, 0) * free.q(1, 0)));
  CHECK(Wf[0][0].is_one());
  CHECK_THROWS_AS(Lagrangian(one, one.q(3, 0)), Error);
  CHECK_THROWS_AS(Lagrangian(one, Expr::symbol("zz")), Error);
  CHECK_THROWS_AS(Lagrangian(one, fn("nofn", {one.t()})), Error);
}

TEST_CASE("relativistic particle is singular") {
  auto L = fixtures::particle(3);
  auto rep = regularity(L, 64);
  CHECK_FALSE(rep.regular);
  CHECK(rep.singular_probes == 64);
  CHECK(rep.corank >= 1);
  CHECK(rep.corank == 2);
  auto map = legendre_map(L);
  CHECK_THROWS_AS(hamiltonian(L, map), Error);
}

TEST_CASE("Cartan forms") {
  auto L = fixtures::beam();
  const auto& s = L.spec();
  auto th = poincare_cartan_1form(L);
  REQUIRE(th.coords.size() == 5);
  CHECK(equivalent(th.coeff[2], s.q(2, 0) * mu(s)));
  CHECK(equivalent(th.coeff[1], -s.q(2, 0) * mu(s, 1) - s.q(3, 0) * mu(s)));
  CHECK(th.coeff[3].is_zero());
  auto om = poincare_cartan_2form(L);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) CHECK((om.M[a][b] + om.M[b][a]).is_zero());

  JetSpec k1({"x"}, 1, "t", {{"f", {"t", "q0x", "q1x"}, std::nullopt}});
  Expr Lg = fn("f", {k1.t(), k1.q(0, 0), k1.q(1, 0)});
  auto th1 = poincare_cartan_1form(Lagrangian(k1, Lg));
  CHECK(th1.coeff[1] == sym::diff(Lg, "q1x"));
  CHECK(equivalent(th1.coeff[0], Lg - k1.q(1, 0) * sym::diff(Lg, "q1x")));
}

TEST_CASE("momentum recursion agrees with the sum formula") {
  auto L = fixtures::particle(2);
  auto a = legendre_map(L).p_hat;
  auto b = momenta_by_recursion(L);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t A = 0; A < a[i].size(); ++A) CHECK(equivalent(a[i][A], b[i][A]));
}

TEST_CASE("beam Legendre map and Hamiltonian") {
  auto L = fixtures::beam();
  const auto& s = L.spec();
  auto m = legendre_map(L);
  Expr q0 = s.q(0, 0), q1 = s.q(1, 0), q2 = s.q(2, 0), q3 = s.q(3, 0);
  CHECK(equivalent(m.p_hat[0][0], -q2 * mu(s, 1) - q3 * mu(s)));
  CHECK(equivalent(m.p_hat[1][0], q2 * mu(s)));
  CHECK(equivalent(m.extended_p,
                   -Expr::rational(1, 2) * mu(s) * q2 * q2 + q1 * q2 * mu(s, 1) + q1 * q3 * mu(s) + q0 * rho(s)));
  Expr p0 = s.p(0, 0), p1 = s.p(1, 0);
  CHECK(equivalent(unified_hamiltonian(L), p0 * q1 + p1 * q2 - Expr::rational(1, 2) * mu(s) * q2 * q2 - rho(s) * q0));
  auto H = hamiltonian(L, m);
  REQUIRE(H.symbolic());
  CHECK(equivalent(H.expr(), p0 * q1 + p1 * p1 / (2 * mu(s)) - rho(s) * q0));
  auto eq = hamilton_equations(H);
  REQUIRE(eq.size() == 4);
  CHECK(equivalent(eq[0], q1));
  CHECK(equivalent(eq[1], p1 / mu(s)));
  CHECK(equivalent(eq[2], rho(s)));
  CHECK(equivalent(eq[3], -p0));
}

TEST_CASE("oscillator Hamiltonian, numeric inversion agrees") {
  auto L = fixtures::oscillator(1.5);
  const auto& s = L.spec();
  auto H = hamiltonian(L, legendre_map(L));
  REQUIRE(H.symbolic());
  Expr w = Expr::symbol("omega"), p = s.p(0, 0), q = s.q(0, 0);
  CHECK(equivalent(H.expr(), Expr::rational(1, 2) * p * p + Expr::rational(1, 2) * w * w * q * q));
  // H constant: zero field
  for (auto& e : hamilton_equations(s, Expr(3))) CHECK(e.is_zero());

  // non-quadratic regular L: L = cosh-like q1^4/4 + q1^2/2 - q0^2/2 needs Newton
  JetSpec k1({"x"}, 1);
  Expr v = k1.q(1, 0);
  Expr Lq = Expr::rational(1, 4) * v * v * v * v + Expr::rational(1, 2) * v * v - Expr::rational(1, 2) * k1.q(0, 0) * k1.q(0, 0);
  Lagrangian Ln(k1, Lq);
  auto Hn = hamiltonian(Ln, legendre_map(Ln));
  CHECK_FALSE(Hn.symbolic());
  sym::Rng rng(1);
  auto ev = Hn.bind(random_env(k1, rng));
  // at q1 = 0.7: p = q1^3 + q1
  double q1 = 0.7, pp = q1 * q1 * q1 + q1;
  std::vector<double> x{0.0, 0.3, pp};
  auto smp = ev->sample(x);
  CHECK(smp.dH_dp[0] == doctest::Approx(q1).epsilon(1e-12));
  double Lval = 0.25 * std::pow(q1, 4) + 0.5 * q1 * q1 - 0.5 * 0.09;
  CHECK(smp.H == doctest::Approx(pp * q1 - Lval).epsilon(1e-12));
  CHECK(smp.dH_dq[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("Legendre map and its extension have equal rank") {
  sym::Rng rng(21);
  for (auto L : {fixtures::beam(), fixtures::particle(3)}) {
    const auto& s = L.spec();
    auto env = random_env(s, rng);
    LegendreJacobian J(L, legendre_map(L), env);
    auto vars = s.jet_coordinates(2 * L.k() - 1);
    for (int p = 0; p < 16; ++p) {
      std::vector<double> x(vars.size());
      for (auto& c : x) c = rng.probe();
      auto r = J.ranks(x);
      CHECK(r.fl == r.extended);
      if (L.n() == 1) CHECK(r.fl == 5);
      // image cut by p1.q1, |p1|^2 - alpha^2/|q1|^2, p0.q1, p0.p1
      if (L.n() == 3) CHECK(r.fl == 9);
    }
  }
}
