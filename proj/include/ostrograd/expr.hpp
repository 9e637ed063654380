#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ostrograd/number.hpp"

namespace ostrograd::sym {

/// Node kinds. Sqrt is represented as Pow with exponent 1/2.
enum class Kind : std::uint8_t { Num, Sym, Fn, Pow, Mul, Add, Sin, Cos, Exp, Log };

/// Interned symbol or function name. Pointer equality is name equality.
using Name = const std::string*;
Name intern(std::string_view s);

class Node;

/// Immutable expression handle. Copies share structure; all operations are
/// pure, so expressions may be shared freely across threads.
///
/// Arithmetic operators and the free builder functions return expressions in
/// normal form. The `raw` builders keep exactly the tree they are given, which
/// is what parsers need for bit-exact round trips.
class Expr {
 public:
  Expr();  // exact zero
  Expr(long v);  // NOLINT(implicit)
  Expr(int v) : Expr(static_cast<long>(v)) {}  // NOLINT(implicit)
  explicit Expr(const Number& n);

  static Expr symbol(std::string_view name);
  static Expr rational(long num, long den);
  static Expr real(double d);

  Kind kind() const;
  bool is_number() const { return kind() == Kind::Num; }
  bool is_symbol() const { return kind() == Kind::Sym; }
  bool is_zero() const;
  bool is_one() const;
  bool is_normal() const;

  /// Num value, or the exponent of a Pow.
  const Number& number() const;
  /// Sym or Fn name.
  const std::string& name() const;
  Name name_id() const;
  /// Fn derivative multi-order (one entry per argument).
  const std::vector<int>& orders() const;
  /// Children: Add terms, Mul factors, Fn arguments, Pow base, unary argument.
  std::span<const Expr> args() const;
  const Expr& base() const { return args()[0]; }
  const Number& exponent() const { return number(); }

  std::size_t hash() const;
  /// Number of nodes in the tree view (shared subtrees counted repeatedly).
  std::size_t size() const;
  bool depends_on(Name sym) const;
  bool depends_on(std::string_view sym) const { return depends_on(intern(sym)); }
  /// Free symbols, sorted by name.
  std::vector<std::string> free_symbols() const;

  const Node* node() const { return p_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  friend class Node;
  friend struct Builder;
  explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}
  std::shared_ptr<const Node> p_;
};

class Node {
 public:
  Kind kind;
  bool normal = false;
  std::size_t hash = 0;
  std::size_t count = 1;
  Number num;
  Name name = nullptr;
  std::vector<int> orders;
  std::vector<Expr> kids;
  std::vector<Name> free;  // sorted by pointer value, for membership tests
};

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};
struct ExprEq {
  bool operator()(const Expr& a, const Expr& b) const { return a == b; }
};

template <class V>
using ExprMap = std::unordered_map<Expr, V, ExprHash, ExprEq>;

/// Total structural order used for canonical sorting.
int compare(const Expr& a, const Expr& b);

namespace raw {
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(Expr base, Number exponent);
Expr fn(std::string_view name, std::vector<int> orders, std::vector<Expr> args);
Expr unary(Kind k, Expr arg);
}  // namespace raw

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Number& exponent);
Expr pow(const Expr& base, long exponent);
Expr sqrt(const Expr& e);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr log(const Expr& e);
/// Opaque function application. `orders` empty means all zero.
Expr fn(std::string_view name, std::vector<Expr> args, std::vector<int> orders = {});

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

/// Canonical form: flattened n-ary sums of n-ary products, like terms and
/// like factors combined, products distributed over sums, exact rationals
/// folded exactly and floats in double. Idempotent.
Expr normalize(const Expr& e);

/// Partial derivative treating every other symbol as independent. Opaque
/// functions differentiate formally through the chain rule.
Expr diff(const Expr& e, std::string_view var);
Expr diff(const Expr& e, Name var);

/// Symbol universe for checked operations.
class Universe {
 public:
  Universe() = default;
  Universe(std::initializer_list<std::string> names);
  void declare(std::string_view name);
  bool contains(std::string_view name) const;
  bool contains(Name n) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<Name> names_;  // sorted by pointer
};

/// diff() that rejects variables outside `universe`. Throws Error(Semantic).
Expr diff(const Expr& e, std::string_view var, const Universe& universe);

using Bindings = std::unordered_map<std::string, Expr>;

/// Simultaneous replacement of symbols; the result is normalized.
Expr substitute(const Expr& e, const Bindings& b);
Expr substitute(const Expr& e, const std::unordered_map<Name, Expr>& b);

/// Rewrites opaque function nodes. The callback returns a replacement or
/// nullopt to keep the node (its arguments are still rewritten).
Expr map_functions(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& f);

/// Does any Fn node with this name occur?
bool contains_function(const Expr& e, std::string_view name);

/// Coefficients of `e` viewed as a polynomial in `vars`. Each entry maps a
/// monomial (exponent per var) to its coefficient expression. Non-polynomial
/// occurrences of a var (inside a function or a non-natural power) throw.
struct PolyTerm {
  std::vector<int> exponents;
  Expr coefficient;
};
std::vector<PolyTerm> polynomial_terms(const Expr& e, std::span<const Name> vars);

}  // namespace ostrograd::sym
