#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "ostrograd/dynamics.hpp"
#include "ostrograd/error.hpp"

using namespace ostrograd;
using sym::Expr;

namespace {

Lagrangian variable_beam() {
  Expr x = Expr::symbol("x");
  return fixtures::beam(1 + x * x / 4, 1 + x / 2);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double oscillator_error(double h) {
  auto L = fixtures::oscillator(1.0);
  auto tr = integrate_lagrangian(L, defined_env(L.spec()), {1, 0}, {h, 0, 2 * std::numbers::pi});
  double e = 0;
  for (std::size_t s = 0; s < tr.t.size(); ++s) e = std::max(e, std::abs(tr.x[s][0] - std::cos(tr.t[s])));
  return e;
}

}  // namespace

TEST_CASE("central stencils") {
  auto w0 = central_weights(0);
  REQUIRE(w0.size() == 1);
  CHECK(w0[0] == doctest::Approx(1));
  auto w1 = central_weights(1);
  CHECK(w1[0] == doctest::Approx(-0.5));
  CHECK(w1[1] == doctest::Approx(0).epsilon(1e-14));
  CHECK(w1[2] == doctest::Approx(0.5));
  auto w2 = central_weights(2);
  CHECK(w2[0] == doctest::Approx(1));
  CHECK(w2[1] == doctest::Approx(-2));
  CHECK(w2[2] == doctest::Approx(1));
  auto w3 = central_weights(3);
  std::vector<double> e3{-0.5, 1, 0, -1, 0.5};
  for (int i = 0; i < 5; ++i) CHECK(w3[i] == doctest::Approx(e3[i]).epsilon(1e-12));
  auto w4 = central_weights(4);
  std::vector<double> e4{1, -4, 6, -4, 1};
  for (int i = 0; i < 5; ++i) CHECK(w4[i] == doctest::Approx(e4[i]).epsilon(1e-12));
}

TEST_CASE("semispray accelerations") {
  {
    auto L = fixtures::homogeneous_beam(Expr(3), Expr(6));
    Semispray X(L, defined_env(L.spec()));
    std::vector<double> y{0.3, -1, 2, 0.7};
    CHECK(X.acceleration(0.4, y)[0] == doctest::Approx(-2.0));
    auto f = X.rhs(0.4, y);
    CHECK(f[0] == -1);
    CHECK(f[1] == 2);
    CHECK(f[2] == 0.7);
  }
  {
    auto L = variable_beam();
    Semispray X(L, defined_env(L.spec()));
    double x = 0.6, q2 = 1.3, q3 = -0.4;
    double mu = 1 + x * x / 4, mu1 = x / 2, mu2 = 0.5, rho = 1 + x / 2;
    std::vector<double> y{0.2, 0.1, q2, q3};
    CHECK(X.acceleration(x, y)[0] == doctest::Approx(-(rho + q2 * mu2 + 2 * q3 * mu1) / mu).epsilon(1e-13));
  }
  {
    auto L = fixtures::oscillator(2.0);
    Semispray X(L, defined_env(L.spec()));
    std::vector<double> y{0.5, 1};
    double cond = 0;
    CHECK(X.acceleration(0, y, &cond)[0] == doctest::Approx(-2.0));
    CHECK(cond == doctest::Approx(1));
  }
}

TEST_CASE("singular points are refused") {
  auto L = fixtures::particle(3, Expr(1));
  NumericEnv env;
  env.constants["alpha"] = 1;
  env.fns.set("V", [](std::span<const long double>, std::span<const int>) { return 0.0L; });
  Semispray X(L, env);
  std::vector<double> y{0, 0, 0, 1, 0.2, 0, 0, 1, 0.3, 0.1, 0, 1};
  try {
    X.acceleration(0, y);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singular);
    CHECK(std::string(e.what()) == "singular point - use constraint algorithm");
  }
  CHECK_THROWS_AS(integrate_lagrangian(L, env, y, {}), Error);
}

TEST_CASE("oscillator follows cos t") {
  CHECK(oscillator_error(1e-3) < 1e-8);
  auto L = fixtures::oscillator(1.0);
  auto tr = integrate_lagrangian(L, defined_env(L.spec()), {1, 0}, {1e-3, 0, 2 * std::numbers::pi});
  CHECK_FALSE(tr.truncated);
  CHECK(tr.t.back() == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(tr.coords == std::vector<std::string>{"q0x", "q1x"});
  for (std::size_t s = 1; s < tr.t.size(); ++s) REQUIRE(tr.t[s] > tr.t[s - 1]);
  auto d = residuals(L, defined_env(L.spec()), tr);
  CHECK(d.autonomous);
  CHECK(d.energy_drift < 1e-9);
}

TEST_CASE("fourth-order convergence") {
  double r1 = oscillator_error(0.1) / oscillator_error(0.05);
  double r2 = oscillator_error(0.05) / oscillator_error(0.025);
  CHECK(r1 >= 14);
  CHECK(r1 <= 18);
  CHECK(r2 >= 14);
  CHECK(r2 <= 18);
  // variable-coefficient beam: self-convergence against finer steps
  auto L = variable_beam();
  auto env = defined_env(L.spec());
  std::vector<double> y0{0, 0.5, -1, 0.25};
  auto end = [&](double h) { return integrate_lagrangian(L, env, y0, {h, 0, 1}).x.back(); };
  auto a = end(0.1), b = end(0.05), c = end(0.025);
  double ratio = max_abs_diff(a, b) / max_abs_diff(b, c);
  CHECK(ratio >= 14);
  CHECK(ratio <= 18);
}

TEST_CASE("homogeneous beam against the quartic") {
  auto L = fixtures::homogeneous_beam(Expr(1), Expr(24));
  auto tr = integrate_lagrangian(L, defined_env(L.spec()), {0, 0, 0, 0}, {1e-3, 0, 1});
  double e = 0;
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    double x = tr.t[s];
    e = std::max(e, std::abs(tr.x[s][0] + x * x * x * x));
  }
  CHECK(e < 1e-8);
  auto d = residuals(L, defined_env(L.spec()), tr);
  CHECK(d.equation_max < 1e-6);
  CHECK(d.omega_max < 1e-5);
}

TEST_CASE("free particle moves linearly") {
  JetSpec s({"x"}, 1);
  Lagrangian L(s, Expr::rational(1, 2) * s.q(1, 0) * s.q(1, 0));
  auto tr = integrate_lagrangian(L, defined_env(s), {2, -3}, {0.01, 0, 1});
  for (std::size_t i = 0; i < tr.t.size(); ++i) CHECK(tr.x[i][0] == doctest::Approx(2 - 3 * tr.t[i]).epsilon(1e-12));
  auto rest = integrate_lagrangian(L, defined_env(s), {1, 0}, {0.1, 0, 1});
  auto d = residuals(L, defined_env(s), rest);
  CHECK(d.equation_max == 0);
  CHECK(d.omega_max == 0);
  CHECK(d.energy_drift == 0);
}

TEST_CASE("Hamiltonian flows") {
  {
    auto L = fixtures::oscillator(1.0);
    auto H = hamiltonian(L, legendre_map(L));
    auto env = defined_env(L.spec());
    auto tr = integrate_hamiltonian(H, env, {1, 0}, {1e-3, 0, 2 * std::numbers::pi});
    double e = 0;
    for (std::size_t s = 0; s < tr.t.size(); ++s) {
      e = std::max(e, std::abs(tr.x[s][0] - std::cos(tr.t[s])));
      e = std::max(e, std::abs(tr.x[s][1] + std::sin(tr.t[s])));
    }
    CHECK(e < 1e-6);
    auto d = residuals(H, env, tr);
    CHECK(d.energy_drift < 1e-9);
    CHECK(d.equation_max < 1e-6);
  }
  {
    // p0' = rho, p1' = -p0 with constant rho: p0 affine, p1 quadratic
    auto L = fixtures::homogeneous_beam(Expr(2), Expr(3));
    auto H = hamiltonian(L, legendre_map(L));
    auto tr = integrate_hamiltonian(H, defined_env(L.spec()), {0.1, 0.2, -0.5, 0.7}, {1e-2, 0, 1});
    for (std::size_t s = 0; s < tr.t.size(); ++s) {
      double x = tr.t[s];
      CHECK(tr.x[s][2] == doctest::Approx(-0.5 + 3 * x).epsilon(1e-12));
      CHECK(tr.x[s][3] == doctest::Approx(0.7 + 0.5 * x - 1.5 * x * x).epsilon(1e-12));
    }
  }
  {
    JetSpec s({"x"}, 1);
    Lagrangian L(s, s.q(1, 0) * s.q(1, 0) / 2);
    auto H = hamiltonian(L, legendre_map(L));
    auto tr = integrate_hamiltonian(H, defined_env(s), {0.5, 0}, {0.1, 0, 1});
    for (const auto& x : tr.x) CHECK(x == std::vector<double>{0.5, 0});
  }
}

TEST_CASE("Legendre transport") {
  auto L = variable_beam();
  auto env = defined_env(L.spec());
  auto map = legendre_map(L);
  std::vector<double> y0{0.1, -0.2, 0.3, 0.4};
  auto tl = integrate_lagrangian(L, env, y0, {1e-3, 0, 1});
  auto th = legendre_transport(L, map, env, tl);
  for (std::size_t s = 0; s < th.t.size(); s += 50) {
    double x = th.t[s];
    CHECK(th.x[s][3] == doctest::Approx((1 + x * x / 4) * tl.x[s][2]).epsilon(1e-13));
  }
  auto H = hamiltonian(L, map);
  auto flow = integrate_hamiltonian(H, env, th.x[0], {1e-3, 0, 1});
  REQUIRE(flow.t.size() == th.t.size());
  double worst = 0;
  for (std::size_t s = 0; s < th.t.size(); ++s) worst = std::max(worst, max_abs_diff(th.x[s], flow.x[s]));
  CHECK(worst < 1e-6);

  auto O = fixtures::oscillator(1.0);
  auto to = integrate_lagrangian(O, defined_env(O.spec()), {1, 0.5}, {0.01, 0, 1});
  auto po = legendre_transport(O, legendre_map(O), defined_env(O.spec()), to);
  for (std::size_t s = 0; s < po.t.size(); ++s) CHECK(po.x[s][1] == to.x[s][1]);
}

TEST_CASE("residuals shrink quadratically on exact samples") {
  // q0 = cos t sampled exactly on grids of step h and h/2
  auto L = fixtures::oscillator(1.0);
  auto env = defined_env(L.spec());
  auto exact = [](double h) {
    Trajectory tr;
    tr.h = h;
    for (int s = 0; s * h <= 1 + 1e-12; ++s) {
      double t = s * h;
      tr.t.push_back(t);
      tr.x.push_back({std::cos(t), -std::sin(t)});
    }
    return tr;
  };
  auto a = residuals(L, env, exact(0.02)), b = residuals(L, env, exact(0.01));
  CHECK(a.equation_max / b.equation_max == doctest::Approx(4).epsilon(0.05));
  CHECK(a.omega_max / b.omega_max == doctest::Approx(4).epsilon(0.05));
  CHECK(a.energy_drift < 1e-14);

  auto B = variable_beam();
  auto benv = defined_env(B.spec());
  auto tr1 = integrate_lagrangian(B, benv, {0, 0.5, -1, 0.25}, {0.02, 0, 1});
  auto tr2 = integrate_lagrangian(B, benv, {0, 0.5, -1, 0.25}, {0.01, 0, 1});
  auto d1 = residuals(B, benv, tr1), d2 = residuals(B, benv, tr2);
  CHECK_FALSE(d1.autonomous);
  CHECK(d1.equation_max / d2.equation_max > 3.5);
}

TEST_CASE("the semispray lies in the kernel of the Cartan 2-form") {
  sym::Rng rng(5);
  std::vector<Lagrangian> Ls{variable_beam()};
  for (int i = 0; i < 6; ++i) Ls.push_back(fixtures::random_regular_quadratic(rng, 1 + i % 2, 1 + i % 3));
  for (const auto& L : Ls) {
    auto env = defined_env(L.spec());
    Semispray X(L, env);
    std::vector<std::vector<double>> pts;
    for (int p = 0; p < 8; ++p) {
      std::vector<double> x(1 + X.dimension());
      for (auto& c : x) c = rng.probe();
      pts.push_back(x);
    }
    for (double r : kernel_residuals(L, X, env, pts)) CHECK(r < 1e-8);
  }
}

TEST_CASE("integrator argument checks") {
  auto L = fixtures::oscillator(1.0);
  auto env = defined_env(L.spec());
  CHECK_THROWS_AS(integrate_lagrangian(L, env, {1, 0}, {0, 0, 1}), Error);
  CHECK_THROWS_AS(integrate_lagrangian(L, env, {1, 0}, {0.1, 1, 0}), Error);
  CHECK_THROWS_AS(integrate_lagrangian(L, env, {1}, {0.1, 0, 1}), Error);
  auto tr = rk4([](double t, std::span<const double>) -> std::vector<double> {
    if (t > 0.5) throw Error(ErrorKind::Evaluation, "blew up");
    return {1.0};
  }, {0.0}, {0.1, 0, 1});
  CHECK(tr.truncated);
  CHECK(tr.error.find("blew up") != std::string::npos);
  CHECK(tr.t.size() == tr.x.size());
  CHECK(tr.t.back() < 0.6);
}
