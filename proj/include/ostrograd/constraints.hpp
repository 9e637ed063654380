#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ostrograd/jetspace.hpp"
#include "ostrograd/lagrangian.hpp"
#include "ostrograd/legendre.hpp"

namespace ostrograd {

/// Unified space coordinates (t, q_0..q_{2k-1}, p^0..p^{k-1}); 3kn+1 symbols.
std::vector<std::string> unified_coordinates(const JetSpec& spec);

enum class ConstraintTier {
  Graph,          // p^i - p_hat^i: the graph of the Legendre map
  Image,          // on the momentum image, no jets above k-1
  Chain,          // tangency of image-side constraints
  Configuration,  // compatibility of the Euler-Lagrange rows
  Kinetic,        // compatibility residual left in jet (graph) form
};
const char* to_string(ConstraintTier t);

struct Constraint {
  std::string label;
  int generation = 0;
  ConstraintTier tier = ConstraintTier::Graph;
  Expr expr;
  // Imposed as an identity on the model's parameter functions (e.g. dV/dq0 = 0
  // for an opaque V), so later reductions drop such derivatives.
  bool identity = false;
  // False when no (q, p) form was found and jets above k-1 remain.
  bool image_form = true;
};

enum class LedgerStatus { Stabilized, MaxGenerationsHit, Inconsistent };
const char* to_string(LedgerStatus s);

struct SolvedComponent {
  std::string name;
  Expr value;
};

struct ConstraintLedger {
  std::vector<std::vector<Constraint>> generations;
  LedgerStatus status = LedgerStatus::Stabilized;
  std::vector<SolvedComponent> solved;
  std::vector<std::string> free_components;
  VectorFieldAnsatz field;  // ansatz with solved components substituted
  int corank = 0;
  bool type1 = false;
  bool image_complete = true;
  std::vector<std::string> notes;
  // Compatibility rows of the Euler-Lagrange system whose jet-only part does
  // not vanish and is not turned into a constraint (separable L only).
  int deferred_rows = 0;
  double deferred_residual = 0;

  std::size_t count() const;
};

struct ConstraintOptions {
  int max_generations = 8;
  bool force_type1 = false;
  std::uint64_t seed = 42;
};

/// X = d/dt + q_{i+1} d/dq_i (i < k) + F_j d/dq_j (j >= k)
///     + dL/dq_0 d/dp^0 + (dL/dq_i - p^{i-1}) d/dp^i.
/// With force_type1, F_j = q_{j+1} for j <= 2k-2.
VectorFieldAnsatz build_ansatz(const Lagrangian& L, bool force_type1);

class ConstraintAlgorithm {
 public:
  ConstraintAlgorithm(const Lagrangian& L, ConstraintOptions opt = {});
  ~ConstraintAlgorithm();
  ConstraintAlgorithm(const ConstraintAlgorithm&) = delete;
  ConstraintAlgorithm& operator=(const ConstraintAlgorithm&) = delete;

  /// Generation 0: graph constraints and, for singular L, image constraints.
  const std::vector<Constraint>& primary() const;
  const VectorFieldAnsatz& ansatz() const;

  struct Step {
    std::vector<Constraint> found;
    std::vector<SolvedComponent> solved;
    bool inconsistent = false;
  };
  /// Tangency of the latest generation; appends the new generation if any.
  Step tangency_step();
  bool done() const;
  ConstraintLedger ledger() const;

  /// Random points of the current constraint set. Coordinates are the unified
  /// ones minus p^{k-1}, which is fixed by the graph; see feasible_full().
  std::vector<std::vector<double>> feasible(int count);
  std::vector<std::string> reduced_coordinates() const;
  /// Same points on all unified coordinates (p^{k-1} = p_hat^{k-1}).
  std::vector<std::vector<double>> feasible_full(int count);
  const NumericEnv& env() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ConstraintLedger run_constraint_algorithm(const Lagrangian& L, const ConstraintOptions& opt = {});

}  // namespace ostrograd
