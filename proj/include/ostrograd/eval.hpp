#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ostrograd/expr.hpp"

namespace ostrograd::sym {

/// Deterministic generator. Distributions are built from raw 64-bit draws so
/// sequences do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t bits() { return eng_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in [-2,-0.1] U [0.1,2], used for probe coordinates.
  double probe();
  /// Child generator with an independent stream.
  Rng split() { return Rng(eng_() ^ 0xd1b54a32d192ed03ULL); }

 private:
  std::mt19937_64 eng_;
};

/// Numeric value of an opaque function or one of its partial derivatives.
using FnCallback = std::function<long double(std::span<const long double> args, std::span<const int> orders)>;

class FunctionTable {
 public:
  void set(const std::string& name, FnCallback f) { fns_[name] = std::move(f); }
  const FnCallback* find(const std::string& name) const {
    auto it = fns_.find(name);
    return it == fns_.end() ? nullptr : &it->second;
  }
  bool empty() const { return fns_.empty(); }
  const std::map<std::string, FnCallback>& all() const { return fns_; }

 private:
  std::map<std::string, FnCallback> fns_;
};

/// Multivariate polynomial with closed-form partial derivatives.
struct Polynomial {
  std::size_t arity = 0;
  std::vector<std::pair<std::vector<int>, long double>> terms;
  long double operator()(std::span<const long double> x, std::span<const int> orders) const;
};

/// Random polynomial of total degree <= 3: constant term +-[0.5,1.5], other
/// coefficients in [-0.5,0.5].
Polynomial random_polynomial(std::size_t arity, Rng& rng);

/// Opaque function names and arities occurring in `e`.
void collect_functions(const Expr& e, std::map<std::string, std::size_t>& out);

/// Instantiates every listed function as an independent random polynomial.
FunctionTable random_functions(const std::map<std::string, std::size_t>& arities, Rng& rng);

using Point = std::unordered_map<std::string, double>;

/// Evaluates in IEEE double. Throws Error(Evaluation) for an unbound symbol, a
/// missing function callback, or a non-finite result.
double evaluate(const Expr& e, const Point& point, const FunctionTable& fns = {});

/// Straight-line program for fast repeated evaluation of several outputs at
/// points given as arrays ordered like `vars`. Shared subexpressions are
/// evaluated once. Construction throws for symbols outside `vars` or
/// functions missing from `fns`. `run` does not check finiteness.
template <class T>
class BasicTape {
 public:
  BasicTape() = default;
  BasicTape(std::span<const Expr> outputs, const std::vector<Name>& vars, const FunctionTable& fns);

  void run(std::span<const T> x, std::span<T> out) const;
  /// Also reports, per output, the magnitude scale obtained by replacing
  /// every sum with the sum of absolute values of its terms. Comparing a
  /// value against its scale tells cancellation noise from a genuine nonzero.
  void run_scaled(std::span<const T> x, std::span<T> out, std::span<T> scale) const;

  std::size_t outputs() const { return out_.size(); }
  std::size_t inputs() const { return nvars_; }
  std::size_t length() const { return ops_.size(); }

 private:
  enum class Op : std::uint8_t { Const, Var, Add, Mul, IPow, Sqrt, RSqrt, Pow, Sin, Cos, Exp, Log, Fn };
  struct Instr {
    Op op;
    std::uint32_t a = 0;      // first arg index into args_ (Add/Mul/Fn) or operand slot
    std::uint32_t n = 0;      // argument count
    long ipow = 0;
    T c = 0;                  // constant or real exponent
    std::uint32_t fn = 0;     // index into fns_ / orders_
  };
  template <bool Scaled>
  void exec(std::span<const T> x, std::vector<T>& v, std::vector<T>* s) const;

  std::vector<Instr> ops_;
  std::vector<std::uint32_t> args_;
  std::vector<std::uint32_t> out_;
  std::vector<const FnCallback*> fns_;
  std::vector<std::vector<int>> orders_;
  std::shared_ptr<FunctionTable> table_;
  std::size_t nvars_ = 0;
};

using Tape = BasicTape<double>;
using TapeL = BasicTape<long double>;

/// True iff normalize(a-b) is the zero constant, or the two sides agree to
/// 1e-9 (1+|a|+|b|) at `trials` random probes. Symbols are drawn from
/// [-2,-0.1] U [0.1,2]; opaque functions become random cubic polynomials.
/// A probe that fails to evaluate is redrawn up to 10 times; exhausting the
/// redraws throws Error(Evaluation).
bool equivalent(const Expr& a, const Expr& b, int trials = 32, std::uint64_t seed = 42);

}  // namespace ostrograd::sym
