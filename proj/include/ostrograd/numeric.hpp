#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ostrograd/eval.hpp"
#include "ostrograd/jetspace.hpp"

namespace ostrograd {

/// Numeric stand-ins for a model's parameter functions and constants.
struct NumericEnv {
  sym::FunctionTable fns;
  std::map<std::string, double> constants;
};

/// Generic instance for probing: numeric constants keep their value,
/// symbolic ones get a probe draw, parameter functions become random cubics.
NumericEnv random_env(const JetSpec& spec, sym::Rng& rng);

/// Instance from the model's own definitions; every parameter function needs
/// a definition and every constant a value, else Error(Argument).
NumericEnv defined_env(const JetSpec& spec);

/// Tape over a fixed variable list with the environment's constants bound.
class Evaluator {
 public:
  Evaluator() = default;
  Evaluator(std::span<const Expr> outputs, const std::vector<std::string>& vars, const NumericEnv& env);

  std::size_t inputs() const { return nvars_; }
  std::size_t outputs() const { return tape_.outputs(); }
  void run(std::span<const double> x, std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> x) const;
  /// Values with their cancellation scales (see BasicTape::run_scaled).
  void run_scaled(std::span<const double> x, std::span<double> out, std::span<double> scale) const;

 private:
  sym::Tape tape_;
  std::vector<double> consts_;
  std::size_t nvars_ = 0;
};

bool all_finite(std::span<const double> v);

/// Numeric rank with singular values below rel_tol * sigma_max treated as 0.
int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-9);

}  // namespace ostrograd
