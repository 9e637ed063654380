#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ostrograd/jetspace.hpp"
#include "ostrograd/numeric.hpp"

namespace ostrograd {

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Probabilistic zero test for expressions over any symbols of a spec.
/// Each symbol gets a deterministic value per probe (derived from the seed
/// and the symbol's name, so the order of first use does not matter).
/// An expression is zero when it vanishes relative to its cancellation
/// scale at every probe that evaluates.
class ZeroTest {
 public:
  ZeroTest(const JetSpec& spec, std::uint64_t seed, int probes = 3);
  bool is_zero(const Expr& e) const;
  /// |value| at the first probe that evaluates, or nullopt.
  std::optional<double> magnitude(const Expr& e) const;
  double value_of(const std::string& symbol, int probe) const;

 private:
  std::uint64_t seed_;
  int probes_;
  std::vector<NumericEnv> envs_;
};

/// Gauss-Jordan for A x = b over expressions; pivots must test nonzero.
/// Returns nullopt when A is singular under the test.
std::optional<std::vector<Expr>> solve_symbolic(ExprMatrix A, std::vector<Expr> b, const ZeroTest& z);

/// Rank-revealing Gauss-Jordan on A u = b. pivot_row[j] is the row that
/// solves unknown j, or -1 when u_j stays free; rows without a pivot keep
/// their reduced right-hand side as a compatibility condition b_r = 0.
struct Elimination {
  ExprMatrix A;
  std::vector<Expr> b;
  std::vector<int> pivot_row;
  std::vector<int> residual_rows;
  /// u_j = b_r - sum over free f of A[r][f] u_f, with free unknowns as given.
  Expr solution(std::size_t j, const std::vector<Expr>& unknowns) const;
};
Elimination eliminate(ExprMatrix A, std::vector<Expr> b, const ZeroTest& z);

}  // namespace ostrograd
