#include "ostrograd/eval.hpp"

#include <algorithm>
#include <cmath>

#include "ostrograd/error.hpp"

namespace ostrograd::sym {

double Rng::probe() {
  double u = uniform();
  double mag = 0.1 + 1.9 * uniform();
  return u < 0.5 ? -mag : mag;
}

long double Polynomial::operator()(std::span<const long double> x, std::span<const int> orders) const {
  long double sum = 0;
  for (const auto& [ex, c] : terms) {
    long double t = c;
    for (std::size_t j = 0; j < arity && t != 0; ++j) {
      int e = ex[j], o = orders[j];
      if (o > e) {
        t = 0;
        break;
      }
      for (int r = 0; r < o; ++r) t *= static_cast<long double>(e - r);
      for (int r = 0; r < e - o; ++r) t *= x[j];
    }
    sum += t;
  }
  return sum;
}

namespace {

void exponent_vectors(std::size_t arity, std::vector<int>& cur, std::size_t j, int left,
                      std::vector<std::vector<int>>& out) {
  if (j == arity) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[j] = e;
    exponent_vectors(arity, cur, j + 1, left - e, out);
  }
  cur[j] = 0;
}

}  // namespace

Polynomial random_polynomial(std::size_t arity, Rng& rng) {
  Polynomial p;
  p.arity = arity;
  std::vector<std::vector<int>> exps;
  std::vector<int> cur(arity, 0);
  exponent_vectors(arity, cur, 0, 3, exps);
  for (auto& ex : exps) {
    bool constant = std::all_of(ex.begin(), ex.end(), [](int e) { return e == 0; });
    long double c = constant ? (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.5, 1.5) : rng.uniform(-0.5, 0.5);
    p.terms.emplace_back(ex, c);
  }
  return p;
}

void collect_functions(const Expr& e, std::map<std::string, std::size_t>& out) {
  std::vector<const Node*> seen;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr x = stack.back();
    stack.pop_back();
    if (std::find(seen.begin(), seen.end(), x.node()) != seen.end()) continue;
    seen.push_back(x.node());
    if (x.kind() == Kind::Fn) out[x.name()] = x.args().size();
    for (const Expr& k : x.args()) stack.push_back(k);
  }
}

FunctionTable random_functions(const std::map<std::string, std::size_t>& arities, Rng& rng) {
  FunctionTable t;
  for (const auto& [name, arity] : arities) {
    auto p = std::make_shared<Polynomial>(random_polynomial(arity, rng));
    t.set(name, [p](std::span<const long double> x, std::span<const int> o) { return (*p)(x, o); });
  }
  return t;
}

// ---------------------------------------------------------------- tape

template <class T>
BasicTape<T>::BasicTape(std::span<const Expr> outputs, const std::vector<Name>& vars, const FunctionTable& fns)
    : table_(std::make_shared<FunctionTable>(fns)), nvars_(vars.size()) {
  std::unordered_map<const Node*, std::uint32_t> by_node;
  ExprMap<std::uint32_t> by_value;
  std::unordered_map<Name, std::uint32_t> var_slot;
  for (std::size_t i = 0; i < vars.size(); ++i) var_slot.emplace(vars[i], static_cast<std::uint32_t>(i));

  std::function<std::uint32_t(const Expr&)> emit = [&](const Expr& e) -> std::uint32_t {
    if (auto it = by_node.find(e.node()); it != by_node.end()) return it->second;
    if (auto it = by_value.find(e); it != by_value.end()) {
      by_node.emplace(e.node(), it->second);
      return it->second;
    }
    Instr in{};
    switch (e.kind()) {
      case Kind::Num:
        in.op = Op::Const;
        in.c = static_cast<T>(e.number().to_long_double());
        break;
      case Kind::Sym: {
        auto it = var_slot.find(e.name_id());
        if (it == var_slot.end()) throw Error(ErrorKind::Evaluation, "unbound symbol '" + e.name() + "'");
        in.op = Op::Var;
        in.a = it->second;
        break;
      }
      case Kind::Add:
      case Kind::Mul:
      case Kind::Fn: {
        std::vector<std::uint32_t> slots;
        for (const Expr& k : e.args()) slots.push_back(emit(k));
        in.op = e.kind() == Kind::Add ? Op::Add : e.kind() == Kind::Mul ? Op::Mul : Op::Fn;
        in.a = static_cast<std::uint32_t>(args_.size());
        in.n = static_cast<std::uint32_t>(slots.size());
        args_.insert(args_.end(), slots.begin(), slots.end());
        if (in.op == Op::Fn) {
          const FnCallback* cb = table_->find(e.name());
          if (!cb) throw Error(ErrorKind::Evaluation, "no numeric callback for function '" + e.name() + "'");
          in.fn = static_cast<std::uint32_t>(fns_.size());
          fns_.push_back(cb);
          orders_.push_back(e.orders());
        }
        break;
      }
      case Kind::Pow: {
        in.a = emit(e.base());
        const Number& x = e.exponent();
        if (x.is_integer() && std::labs(x.to_long()) <= 64) {
          in.op = Op::IPow;
          in.ipow = x.to_long();
        } else if (x == Number::rational(1, 2)) {
          in.op = Op::Sqrt;
        } else if (x == Number::rational(-1, 2)) {
          in.op = Op::RSqrt;
        } else {
          in.op = Op::Pow;
          in.c = static_cast<T>(x.to_long_double());
        }
        break;
      }
      case Kind::Sin:
      case Kind::Cos:
      case Kind::Exp:
      case Kind::Log:
        in.a = emit(e.args()[0]);
        in.op = e.kind() == Kind::Sin ? Op::Sin : e.kind() == Kind::Cos ? Op::Cos : e.kind() == Kind::Exp ? Op::Exp : Op::Log;
        break;
    }
    auto slot = static_cast<std::uint32_t>(ops_.size());
    ops_.push_back(in);
    by_node.emplace(e.node(), slot);
    by_value.emplace(e, slot);
    return slot;
  };
  for (const Expr& o : outputs) out_.push_back(emit(normalize(o)));
}

template <class T>
template <bool Scaled>
void BasicTape<T>::exec(std::span<const T> x, std::vector<T>& v, std::vector<T>* s) const {
  if (x.size() != nvars_) throw Error(ErrorKind::Internal, "tape input size mismatch");
  v.resize(ops_.size());
  if constexpr (Scaled) s->resize(ops_.size());
  std::vector<long double> fargs;
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Instr& in = ops_[i];
    T r = 0, sc = 0;
    switch (in.op) {
      case Op::Const:
        r = in.c;
        sc = std::abs(r);
        break;
      case Op::Var:
        r = x[in.a];
        sc = std::abs(r);
        break;
      case Op::Add:
        for (std::uint32_t j = 0; j < in.n; ++j) {
          r += v[args_[in.a + j]];
          if constexpr (Scaled) sc += (*s)[args_[in.a + j]];
        }
        break;
      case Op::Mul:
        r = 1;
        sc = 1;
        for (std::uint32_t j = 0; j < in.n; ++j) {
          r *= v[args_[in.a + j]];
          if constexpr (Scaled) sc *= (*s)[args_[in.a + j]];
        }
        break;
      case Op::IPow: {
        T b = v[in.a];
        long n = in.ipow;
        T acc = 1;
        T base = n < 0 ? T(1) / b : b;
        for (long m = std::labs(n); m > 0; m >>= 1) {
          if (m & 1) acc *= base;
          base *= base;
        }
        r = acc;
        if constexpr (Scaled) {
          if (n > 0) {
            T sb = (*s)[in.a], sa = 1;
            for (long m = 0; m < n; ++m) sa *= sb;
            sc = sa;
          } else {
            sc = std::abs(r);
          }
        }
        break;
      }
      case Op::Sqrt:
        r = std::sqrt(v[in.a]);
        sc = std::abs(r);
        break;
      case Op::RSqrt:
        r = T(1) / std::sqrt(v[in.a]);
        sc = std::abs(r);
        break;
      case Op::Pow:
        r = std::pow(v[in.a], in.c);
        sc = std::abs(r);
        break;
      case Op::Sin:
        r = std::sin(v[in.a]);
        sc = std::abs(r);
        break;
      case Op::Cos:
        r = std::cos(v[in.a]);
        sc = std::abs(r);
        break;
      case Op::Exp:
        r = std::exp(v[in.a]);
        sc = std::abs(r);
        break;
      case Op::Log:
        r = std::log(v[in.a]);
        sc = std::abs(r);
        break;
      case Op::Fn:
        fargs.resize(in.n);
        for (std::uint32_t j = 0; j < in.n; ++j) fargs[j] = v[args_[in.a + j]];
        r = static_cast<T>((*fns_[in.fn])(fargs, orders_[in.fn]));
        sc = std::abs(r);
        break;
    }
    v[i] = r;
    if constexpr (Scaled) (*s)[i] = sc;
  }
}

template <class T>
void BasicTape<T>::run(std::span<const T> x, std::span<T> out) const {
  std::vector<T> v;
  exec<false>(x, v, nullptr);
  for (std::size_t i = 0; i < out_.size(); ++i) out[i] = v[out_[i]];
}

template <class T>
void BasicTape<T>::run_scaled(std::span<const T> x, std::span<T> out, std::span<T> scale) const {
  std::vector<T> v, s;
  exec<true>(x, v, &s);
  for (std::size_t i = 0; i < out_.size(); ++i) {
    out[i] = v[out_[i]];
    scale[i] = s[out_[i]];
  }
}

template class BasicTape<double>;
template class BasicTape<long double>;

// ---------------------------------------------------------------- evaluate

double evaluate(const Expr& e, const Point& point, const FunctionTable& fns) {
  std::vector<Name> vars;
  std::vector<double> x;
  for (const auto& s : e.free_symbols()) {
    auto it = point.find(s);
    if (it == point.end()) throw Error(ErrorKind::Evaluation, "unbound symbol '" + s + "'");
    vars.push_back(intern(s));
    x.push_back(it->second);
  }
  Tape tape(std::span<const Expr>(&e, 1), vars, fns);
  double r = 0;
  tape.run(x, std::span<double>(&r, 1));
  if (!std::isfinite(r)) throw Error(ErrorKind::Evaluation, "non-finite result");
  return r;
}

bool equivalent(const Expr& a, const Expr& b, int trials, std::uint64_t seed) {
  Expr d = a - b;
  if (d.is_zero()) return true;
  std::vector<std::string> names = a.free_symbols();
  for (auto& s : b.free_symbols()) names.push_back(s);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<Name> vars;
  for (auto& s : names) vars.push_back(intern(s));
  std::map<std::string, std::size_t> arities;
  collect_functions(a, arities);
  collect_functions(b, arities);
  Expr na = normalize(a), nb = normalize(b);
  const Expr pair[2] = {na, nb};

  Rng rng(seed);
  std::vector<long double> x(vars.size());
  for (int t = 0; t < trials; ++t) {
    bool done = false;
    for (int attempt = 0; attempt < 10 && !done; ++attempt) {
      for (auto& xi : x) xi = rng.probe();
      FunctionTable fns = random_functions(arities, rng);
      TapeL tape(pair, vars, fns);
      long double out[2];
      tape.run(x, out);
      if (!std::isfinite(out[0]) || !std::isfinite(out[1])) continue;
      done = true;
      long double tol = 1e-9L * (1 + std::abs(out[0]) + std::abs(out[1]));
      if (std::abs(out[0] - out[1]) >= tol) return false;
    }
    if (!done) throw Error(ErrorKind::Evaluation, "equivalence probe failed to evaluate after 10 redraws");
  }
  return true;
}

}  // namespace ostrograd::sym
