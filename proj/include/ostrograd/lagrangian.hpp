#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ostrograd/jetspace.hpp"

namespace ostrograd {

using ExprMatrix = std::vector<std::vector<Expr>>;

/// k-th order Lagrangian over a JetSpec. Construction checks that L uses no
/// jet coordinate above order k, no momentum, and only declared symbols and
/// functions.
class Lagrangian {
 public:
  Lagrangian(JetSpec spec, Expr L);

  const JetSpec& spec() const { return spec_; }
  const Expr& L() const { return L_; }
  int n() const { return spec_.n(); }
  int k() const { return spec_.k(); }
  /// dL/dq_i^A for 0 <= i <= k.
  const Expr& partial(int i, int A) const { return partials_[i][A]; }

 private:
  JetSpec spec_;
  Expr L_;
  ExprGrid partials_;
};

ExprMatrix hessian(const Lagrangian& L);

struct RegularityReport {
  bool regular = false;
  int corank = 0;          // maximal corank seen at the probes
  int probes = 0;
  int singular_probes = 0; // probes with numerically singular W
  bool hyperregular_decided = false;  // global property, never certified
};

/// Numeric rank of W at random points of J^k. Singular iff W is singular at
/// every probe. Throws Error(Evaluation) when probes cannot be evaluated.
RegularityReport regularity(const Lagrangian& L, int probes = 64, std::uint64_t seed = 42);

/// Jacobi-Ostrogradsky momenta by the sum formula:
/// p^_{r-1} = sum_{i=0}^{k-r} (-1)^i d_T^i (dL/dq_{r+i}), rows r-1 = 0..k-1.
ExprGrid jacobi_ostrogradsky_momenta(const Lagrangian& L);

/// EL_A = sum_i (-1)^i d_T^i (dL/dq_i^A), expressions over order 2k.
std::vector<Expr> euler_lagrange(const Lagrangian& L);

/// Differential-form coordinates on J^{2k-1}: index 0 is t, index
/// 1 + i n + A is q_i^A.
std::vector<std::string> form_coordinates(const JetSpec& spec);

struct OneForm {
  std::vector<std::string> coords;
  std::vector<Expr> coeff;  // parallel to coords
};

struct TwoForm {
  std::vector<std::string> coords;
  ExprMatrix M;  // Omega = 1/2 sum M_ab dx^a ^ dx^b, M antisymmetric
};

/// Theta_L: dq_{r-1} has p^_{r-1}, dt has L - sum_r q_r p^_{r-1}.
OneForm poincare_cartan_1form(const Lagrangian& L);
/// Omega_L = -d Theta_L, M_ab = d_b theta_a - d_a theta_b.
TwoForm poincare_cartan_2form(const Lagrangian& L);

/// (i_X Omega)_b = sum_a X^a M_ab for numeric M and X.
std::vector<double> contract(const std::vector<std::vector<double>>& M, const std::vector<double>& X);

}  // namespace ostrograd
