#pragma once

#include <string>
#include <vector>

#include "ostrograd/eval.hpp"
#include "ostrograd/lagrangian.hpp"

namespace fixtures {

using namespace ostrograd;
using sym::Expr;

// Euler-Bernoulli beam: L = 1/2 mu(x) q2^2 + rho(x) q0.
inline Lagrangian beam(std::optional<Expr> mu_def = std::nullopt, std::optional<Expr> rho_def = std::nullopt) {
  JetSpec spec({"y"}, 2, "x", {{"mu", {"x"}, mu_def}, {"rho", {"x"}, rho_def}});
  Expr x = spec.t();
  Expr L = Expr::rational(1, 2) * sym::fn("mu", {x}) * spec.q(2, 0) * spec.q(2, 0) + sym::fn("rho", {x}) * spec.q(0, 0);
  return Lagrangian(spec, L);
}

// Beam with constant coefficients mu, rho given as symbolic constants.
inline Lagrangian homogeneous_beam(std::optional<Expr> mu = std::nullopt, std::optional<Expr> rho = std::nullopt) {
  JetSpec spec({"y"}, 2, "x", {}, {{"mu", mu}, {"rho", rho}});
  Expr L = Expr::rational(1, 2) * Expr::symbol("mu") * spec.q(2, 0) * spec.q(2, 0) + Expr::symbol("rho") * spec.q(0, 0);
  return Lagrangian(spec, L);
}

inline Lagrangian oscillator(double omega = 1.0) {
  JetSpec spec({"x"}, 1, "t", {}, {{"omega", Expr::real(omega)}});
  Expr w = Expr::symbol("omega");
  Expr L = Expr::rational(1, 2) * spec.q(1, 0) * spec.q(1, 0) - Expr::rational(1, 2) * w * w * spec.q(0, 0) * spec.q(0, 0);
  return Lagrangian(spec, L);
}

inline Expr dot(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  std::vector<Expr> t;
  for (std::size_t i = 0; i < a.size(); ++i) t.push_back(a[i] * b[i]);
  return sym::add(t);
}

// Second-order relativistic particle: L = alpha sqrt(g)/|q1|^2 + V(t, q0),
// g = |q1|^2 |q2|^2 - (q1.q2)^2.
inline Lagrangian particle(int n = 3, std::optional<Expr> alpha = std::nullopt) {
  std::vector<std::string> dofs;
  const char* names[] = {"x", "y", "z", "w"};
  for (int i = 0; i < n; ++i) dofs.push_back(names[i]);
  JetSpec probe_spec(dofs, 2);
  std::vector<std::string> vargs{"t"};
  for (int A = 0; A < n; ++A) vargs.push_back(probe_spec.q_name(0, A));
  JetSpec spec(dofs, 2, "t", {{"V", vargs, std::nullopt}}, {{"alpha", alpha}});
  auto q1 = spec.q_vec(1), q2 = spec.q_vec(2);
  Expr s = dot(q1, q1);
  Expr g = s * dot(q2, q2) - dot(q1, q2) * dot(q1, q2);
  std::vector<Expr> vcall{spec.t()};
  for (auto& q : spec.q_vec(0)) vcall.push_back(q);
  Expr L = Expr::symbol("alpha") * sym::sqrt(g) / s + sym::fn("V", vcall);
  return Lagrangian(spec, L);
}

inline Expr small_rational(sym::Rng& rng) {
  return Expr::rational(static_cast<long>(rng.bits() % 9) - 4, 1 + static_cast<long>(rng.bits() % 3));
}

inline JetSpec plain_spec(int n, int k) {
  std::vector<std::string> dofs;
  const char* names[] = {"x", "y", "z", "w"};
  for (int i = 0; i < n; ++i) dofs.push_back(names[i]);
  return JetSpec(dofs, k);
}

// Random polynomial of degree <= 3 in t and the jets up to order k.
inline Lagrangian random_polynomial(sym::Rng& rng, int n, int k) {
  JetSpec spec = plain_spec(n, k);
  auto vars = spec.jet_coordinates(k);
  std::vector<Expr> terms;
  int count = 3 + static_cast<int>(rng.bits() % 5);
  for (int m = 0; m < count; ++m) {
    Expr t = small_rational(rng);
    int deg = 1 + static_cast<int>(rng.bits() % 3);
    for (int d = 0; d < deg; ++d) t = t * Expr::symbol(vars[rng.bits() % vars.size()]);
    terms.push_back(t);
  }
  // make sure the top order shows up
  terms.push_back(spec.q(k, 0) * spec.q(k, n - 1) * Expr::symbol(vars[rng.bits() % vars.size()]));
  return Lagrangian(spec, sym::add(terms));
}

// 1/2 q_k.A.q_k with A positive definite, plus random lower-order quadratic
// and linear terms and a time-dependent coupling.
inline Lagrangian random_regular_quadratic(sym::Rng& rng, int n, int k) {
  JetSpec spec = plain_spec(n, k);
  std::vector<std::vector<long>> B(n, std::vector<long>(n));
  for (auto& row : B)
    for (auto& b : row) b = static_cast<long>(rng.bits() % 5) - 2;
  std::vector<Expr> terms;
  for (int A = 0; A < n; ++A)
    for (int C = 0; C < n; ++C) {
      long a = A == C ? n : 0;
      for (int m = 0; m < n; ++m) a += B[A][m] * B[C][m];
      terms.push_back(Expr::rational(a, 2) * spec.q(k, A) * spec.q(k, C));
    }
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j < k; ++j)
      for (int A = 0; A < n; ++A)
        if (rng.uniform() < 0.5) terms.push_back(small_rational(rng) * spec.q(i, A) * spec.q(j, (A + i + j) % n));
  for (int A = 0; A < n; ++A) terms.push_back(small_rational(rng) * spec.t() * spec.q(0, A));
  return Lagrangian(spec, sym::add(terms));
}

}  // namespace fixtures
