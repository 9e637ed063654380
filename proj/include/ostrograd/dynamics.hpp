#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ostrograd/lagrangian.hpp"
#include "ostrograd/legendre.hpp"
#include "ostrograd/numeric.hpp"

namespace ostrograd {

enum class Side { Lagrangian, Hamiltonian };
const char* to_string(Side s);

struct IntegratorConfig {
  double h = 1e-3;
  double t0 = 0;
  double t1 = 1;
  double cond_limit = 1e12;  // for the semispray solve
};

/// Lagrangian states are q_0..q_{2k-1}, Hamiltonian states q_0..q_{k-1},
/// p^0..p^{k-1}; entries ordered [i*n + A].
struct Trajectory {
  Side side = Side::Lagrangian;
  double h = 0;  // step actually used (the span is split evenly)
  std::vector<std::string> coords;
  std::vector<double> t;
  std::vector<std::vector<double>> x;
  bool truncated = false;
  std::string error;  // why integration stopped early
};

/// X_L for a regular Lagrangian: q_i' = q_{i+1} (i < 2k-1) and q_{2k-1}' = F,
/// F solving the Euler-Lagrange equations for the top jet.
class Semispray {
 public:
  Semispray(const Lagrangian& L, const NumericEnv& env, double cond_limit = 1e12);

  int dimension() const { return dim_; }
  /// F_{2k-1} at (t, y); Error(Singular) when W is singular or its
  /// condition number exceeds the limit.
  std::vector<double> acceleration(double t, std::span<const double> y, double* cond = nullptr) const;
  std::vector<double> rhs(double t, std::span<const double> y) const;

 private:
  int n_, k_, dim_;
  double cond_limit_;
  Evaluator ev_;  // coefficients of q_{2k} then the remainder
};

using OdeRhs = std::function<std::vector<double>(double, std::span<const double>)>;

/// Classical fixed-step RK4. A throwing rhs truncates the trajectory and
/// records the message.
Trajectory rk4(const OdeRhs& f, std::vector<double> init, const IntegratorConfig& cfg);

Trajectory integrate_lagrangian(const Lagrangian& L, const NumericEnv& env, std::vector<double> init,
                                const IntegratorConfig& cfg);
Trajectory integrate_hamiltonian(const Hamiltonian& H, const NumericEnv& env, std::vector<double> init,
                                 const IntegratorConfig& cfg);

/// Pointwise (q_0..q_{k-1}, p^_0..p^_{k-1}) of a Lagrangian trajectory.
Trajectory legendre_transport(const Lagrangian& L, const LegendreMap& map, const NumericEnv& env,
                              const Trajectory& traj);

struct Diagnostics {
  // Lagrangian side: Euler-Lagrange rows from centered second-order
  // differences of the dL/dq_i chains. Hamiltonian side: Hamilton's
  // equations against centered differences of the states.
  std::vector<double> equation;  // per sample, NaN at the ends
  std::vector<double> omega;     // |i(x') Omega_L|, Lagrangian side only
  double equation_max = 0;
  double omega_max = 0;
  bool autonomous = false;
  double energy_drift = 0;  // max |E - E(t0)|, autonomous only
};

Diagnostics residuals(const Lagrangian& L, const NumericEnv& env, const Trajectory& traj);
Diagnostics residuals(const Hamiltonian& H, const NumericEnv& env, const Trajectory& traj);

/// max |i(X_L) Omega_L| at each point (t, q_0..q_{2k-1}).
std::vector<double> kernel_residuals(const Lagrangian& L, const Semispray& X, const NumericEnv& env,
                                     const std::vector<std::vector<double>>& points);

/// Weights of the centered second-order stencil for the d-th derivative,
/// offsets -m..m with m = (d + 1) / 2, unit spacing.
std::vector<double> central_weights(int d);

}  // namespace ostrograd
