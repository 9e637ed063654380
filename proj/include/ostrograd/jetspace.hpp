#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ostrograd/eval.hpp"
#include "ostrograd/expr.hpp"

namespace ostrograd {

using sym::Expr;
using ExprGrid = std::vector<std::vector<Expr>>;  // [order i][dof A]

/// Opaque parameter function such as mu(x) or V(t, q0x, q0y, q0z).
/// `definition`, when set, gives the function for simulation.
struct ParamFunction {
  std::string name;
  std::vector<std::string> args;
  std::optional<Expr> definition;
};

/// Named constant, numeric (`alpha = 1`) or left symbolic.
struct Constant {
  std::string name;
  std::optional<Expr> value;
};

/// Coordinate model of the jet spaces over R x Q.
///
/// Symbol scheme for dof A at order i: q<i><A> (q0y, q2y); momenta p<i><A>;
/// unknown vector-field components F<j><A>; the momentum dual to the base
/// variable is "p". Dof names start with a letter, so the scheme is
/// unambiguous.
class JetSpec {
 public:
  JetSpec() = default;
  JetSpec(std::vector<std::string> dofs, int k, std::string base = "t", std::vector<ParamFunction> params = {},
          std::vector<Constant> constants = {});

  int n() const { return static_cast<int>(dofs_.size()); }
  int k() const { return k_; }
  const std::string& base() const { return base_; }
  const std::vector<std::string>& dofs() const { return dofs_; }
  const std::vector<ParamFunction>& params() const { return params_; }
  const std::vector<Constant>& constants() const { return constants_; }
  const ParamFunction* param(std::string_view name) const;

  std::string q_name(int i, int A) const;
  std::string p_name(int i, int A) const;
  std::string F_name(int j, int A) const;
  static constexpr const char* kExtendedMomentum = "p";

  Expr t() const { return Expr::symbol(base_); }
  Expr q(int i, int A) const { return Expr::symbol(q_name(i, A)); }
  Expr p(int i, int A) const { return Expr::symbol(p_name(i, A)); }
  Expr F(int j, int A) const { return Expr::symbol(F_name(j, A)); }
  Expr p_ext() const { return Expr::symbol(kExtendedMomentum); }
  std::vector<Expr> q_vec(int i) const;
  std::vector<Expr> p_vec(int i) const;

  struct Coord {
    enum Type { Base, Jet, Momentum, Unknown, ExtendedMomentum, Constant, Other } type = Other;
    int i = 0;
    int A = 0;
  };
  Coord classify(std::string_view symbol) const;

  /// Highest jet order referenced by e, or -1 when e has no jet coordinate.
  int order_of(const Expr& e) const;
  /// Highest momentum / unknown index referenced (or -1).
  int momentum_order_of(const Expr& e) const;
  bool uses_unknowns(const Expr& e) const;

  /// (t, q_0 .. q_m) in index order: base first, then order-major.
  std::vector<std::string> jet_coordinates(int m) const;
  /// p^0 .. p^{k-1}, order-major.
  std::vector<std::string> momentum_coordinates() const;
  sym::Universe universe(int m, bool with_momenta) const;

 private:
  std::vector<std::string> dofs_;
  int k_ = 1;
  std::string base_ = "t";
  std::vector<ParamFunction> params_;
  std::vector<Constant> constants_;
};

/// d_T e = de/dt + sum_{i<=m} q_{i+1} de/dq_i for e over order <= m.
/// Momenta count as independent of t. Throws if e uses orders above m.
Expr total_derivative(const JetSpec& spec, const Expr& e, int source_order);
Expr total_derivative(const JetSpec& spec, const Expr& e);  // m = order_of(e)
Expr iterated_total_derivative(const JetSpec& spec, const Expr& e, int times, int source_order);
Expr iterated_total_derivative(const JetSpec& spec, const Expr& e, int times);

/// Vector field f d/dt + sum jet[i][A] d/dq_i^A + sum momentum[i][A] d/dp^i_A.
/// `jet` covers orders 0..order; `momentum` is empty on pure jet spaces.
struct VectorFieldAnsatz {
  int order = 0;
  Expr f = Expr(1);
  ExprGrid jet;
  ExprGrid momentum;
};

Expr lie_derivative(const JetSpec& spec, const VectorFieldAnsatz& v, const Expr& xi);

/// Smallest r with jet[i] == f q_{i+1} for 0 <= i <= order - r (checked by
/// `equivalent`), or nullopt when even jet[0] fails.
std::optional<int> classify_semispray(const JetSpec& spec, const VectorFieldAnsatz& v, std::uint64_t seed = 42);

struct JetPoint {
  double t = 0;
  std::vector<std::vector<double>> q;  // [order][dof]
  int order() const { return static_cast<int>(q.size()) - 1; }
};

nlohmann::json to_json(const JetPoint& p);
/// Validates shape against spec (n columns, order >= 0) and finiteness.
JetPoint jet_point_from_json(const JetSpec& spec, const nlohmann::json& j);

}  // namespace ostrograd
