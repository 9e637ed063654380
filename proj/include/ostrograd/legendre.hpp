#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ostrograd/lagrangian.hpp"
#include "ostrograd/numeric.hpp"

namespace ostrograd {

struct LegendreMap {
  ExprGrid p_hat;     // [i][A], 0 <= i <= k-1, over J^{2k-1}
  Expr extended_p;    // L - sum_r q_r p^_{r-1}
};

LegendreMap legendre_map(const Lagrangian& L);

struct LegendreRanks {
  int fl = 0;        // (t, q_<k, p^)
  int extended = 0;  // same plus p = L - sum q_r p^_{r-1}
};

/// Numeric Jacobian ranks over J^{2k-1} of the Legendre map and its
/// extension.
class LegendreJacobian {
 public:
  LegendreJacobian(const Lagrangian& L, const LegendreMap& map, const NumericEnv& env);
  LegendreRanks ranks(std::span<const double> point, double rel_tol = 1e-9) const;

 private:
  Evaluator ev_;
  std::size_t rows_ = 0, cols_ = 0;
};

/// Momenta by the backwards recursion p^_{k-1} = dL/dq_k,
/// p^_{r-1} = dL/dq_r - d_T p^_r. Agrees with legendre_map().
ExprGrid momenta_by_recursion(const Lagrangian& L);

/// H^ = sum_i p^i_A q_{i+1}^A - L on the unified space.
Expr unified_hamiltonian(const Lagrangian& L);

/// Phase-space coordinates: t, then q_0..q_{k-1}, then p^0..p^{k-1}.
std::vector<std::string> phase_coordinates(const JetSpec& spec);

/// Value and partial derivatives of H at a phase-space point.
struct HamiltonianSample {
  double H = 0;
  double dH_dt = 0;
  std::vector<double> dH_dq;  // [i*n + A], i < k
  std::vector<double> dH_dp;  // [i*n + A], i < k
};

class HamiltonianEvaluator;

class Hamiltonian {
 public:
  enum class Provenance { Symbolic, Numeric };

  Provenance provenance() const { return prov_; }
  bool symbolic() const { return prov_ == Provenance::Symbolic; }
  /// Symbolic Hamiltonians only.
  const Expr& expr() const;
  /// q_k in terms of (t, q_<k, p), symbolic case only.
  const std::vector<Expr>& qk_solution() const { return qk_; }
  const Lagrangian& lagrangian() const { return *lag_; }

  /// Numeric evaluator under a parameter environment. Reentrant.
  std::shared_ptr<const HamiltonianEvaluator> bind(const NumericEnv& env) const;

 private:
  friend Hamiltonian hamiltonian(const Lagrangian& L, const LegendreMap& map, std::uint64_t seed);
  Provenance prov_ = Provenance::Numeric;
  std::shared_ptr<const Lagrangian> lag_;
  Expr H_;
  std::vector<Expr> qk_;
};

class HamiltonianEvaluator {
 public:
  virtual ~HamiltonianEvaluator() = default;
  /// x ordered as phase_coordinates(). Numeric Hamiltonians invert the
  /// Legendre map by damped Newton (tol 1e-12, 50 iterations, start q_k = 0)
  /// and throw Error(Convergence) naming the point on failure.
  virtual HamiltonianSample sample(std::span<const double> x) const = 0;
  /// (dH/dp, -dH/dq) ordered like phase_coordinates() without t.
  std::vector<double> rhs(std::span<const double> x) const;
};

/// Requires a regular Lagrangian (probed); otherwise Error(Singular) "not
/// invertible - use constraint algorithm". Exact inversion when dL/dq_k is
/// affine in q_k, otherwise Newton-based.
Hamiltonian hamiltonian(const Lagrangian& L, const LegendreMap& map, std::uint64_t seed = 42);

/// dq_i/dt = dH/dp^i, dp^i/dt = -dH/dq_i, ordered like phase_coordinates()
/// without t. Symbolic H only.
std::vector<Expr> hamilton_equations(const Hamiltonian& H);
std::vector<Expr> hamilton_equations(const JetSpec& spec, const Expr& H);

}  // namespace ostrograd
