#include "ostrograd/expr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_set>

#include "ostrograd/error.hpp"

namespace ostrograd::sym {

Name intern(std::string_view s) {
  static std::mutex mu;
  static std::unordered_set<std::string> table;
  std::lock_guard<std::mutex> lock(mu);
  return &*table.emplace(s).first;
}

namespace {

constexpr std::size_t kCountCap = std::size_t(1) << 40;
constexpr long kMaxExpand = 8;

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::vector<Name> merge_free(const std::vector<Expr>& kids) {
  std::vector<Name> out;
  for (const Expr& k : kids) {
    const auto& f = k.node()->free;
    if (f.empty()) continue;
    if (out.empty()) {
      out = f;
      continue;
    }
    std::vector<Name> m;
    m.reserve(out.size() + f.size());
    std::set_union(out.begin(), out.end(), f.begin(), f.end(), std::back_inserter(m));
    out.swap(m);
  }
  return out;
}

}  // namespace

struct Builder {
  static Expr make(Node n) {
    std::size_t h = mix(0, static_cast<std::size_t>(n.kind));
    std::size_t count = 1;
    switch (n.kind) {
      case Kind::Num:
        h = mix(h, n.num.hash());
        break;
      case Kind::Sym:
        h = mix(h, std::hash<std::string>{}(*n.name));
        n.free = {n.name};
        break;
      case Kind::Fn:
        h = mix(h, std::hash<std::string>{}(*n.name));
        for (int o : n.orders) h = mix(h, static_cast<std::size_t>(o));
        break;
      case Kind::Pow:
        h = mix(h, n.num.hash());
        break;
      default:
        break;
    }
    for (const Expr& k : n.kids) {
      h = mix(h, k.hash());
      count = std::min(kCountCap, count + k.size());
    }
    if (n.kind != Kind::Sym) n.free = merge_free(n.kids);
    n.hash = h;
    n.count = count;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
};

namespace {

Expr make_num(const Number& v) {
  Node n;
  n.kind = Kind::Num;
  n.normal = true;
  n.num = v;
  return Builder::make(std::move(n));
}

Expr make_node(Kind k, std::vector<Expr> kids, bool normal, Number num = Number(),
               Name name = nullptr, std::vector<int> orders = {}) {
  Node n;
  n.kind = k;
  n.normal = normal;
  n.num = std::move(num);
  n.name = name;
  n.orders = std::move(orders);
  n.kids = std::move(kids);
  return Builder::make(std::move(n));
}

const Expr& zero_expr() {
  static const Expr z = make_num(Number(0));
  return z;
}

}  // namespace

// ---------------------------------------------------------------- Expr basics

Expr::Expr() : Expr(zero_expr()) {}
Expr::Expr(long v) : Expr(v == 0 ? zero_expr() : make_num(Number(v))) {}
Expr::Expr(const Number& n) : Expr(make_num(n)) {}

Expr Expr::symbol(std::string_view name) {
  Node n;
  n.kind = Kind::Sym;
  n.normal = true;
  n.name = intern(name);
  return Builder::make(std::move(n));
}

Expr Expr::rational(long num, long den) { return make_num(Number::rational(num, den)); }
Expr Expr::real(double d) { return make_num(Number::real(d)); }

Kind Expr::kind() const { return p_->kind; }
bool Expr::is_zero() const { return p_->kind == Kind::Num && p_->num.is_zero(); }
bool Expr::is_one() const { return p_->kind == Kind::Num && p_->num.is_one(); }
bool Expr::is_normal() const { return p_->normal; }
const Number& Expr::number() const { return p_->num; }
const std::string& Expr::name() const {
  static const std::string empty;
  return p_->name ? *p_->name : empty;
}
Name Expr::name_id() const { return p_->name; }
const std::vector<int>& Expr::orders() const { return p_->orders; }
std::span<const Expr> Expr::args() const { return {p_->kids.data(), p_->kids.size()}; }
std::size_t Expr::hash() const { return p_->hash; }
std::size_t Expr::size() const { return p_->count; }

bool Expr::depends_on(Name sym) const {
  const auto& f = p_->free;
  return std::binary_search(f.begin(), f.end(), sym);
}

std::vector<std::string> Expr::free_symbols() const {
  std::vector<std::string> out;
  for (Name n : p_->free) out.push_back(*n);
  std::sort(out.begin(), out.end());
  return out;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.p_ == b.p_) return true;
  if (a.hash() != b.hash()) return false;
  return compare(a, b) == 0;
}

// ---------------------------------------------------------------- ordering

namespace {

int kind_rank(Kind k) {
  switch (k) {
    case Kind::Num: return 0;
    case Kind::Sym: return 1;
    case Kind::Fn: return 2;
    case Kind::Sin: return 3;
    case Kind::Cos: return 4;
    case Kind::Exp: return 5;
    case Kind::Log: return 6;
    case Kind::Pow: return 7;
    case Kind::Mul: return 8;
    case Kind::Add: return 9;
  }
  return 10;
}

int cmp_seq(std::span<const Expr> a, std::span<const Expr> b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
}

// Factor view: x^e -> (x, e); anything else -> (self, 1).
const Expr& factor_base(const Expr& e) { return e.kind() == Kind::Pow ? e.base() : e; }
Number factor_exp(const Expr& e) { return e.kind() == Kind::Pow ? e.exponent() : Number(1); }

int factor_compare(const Expr& a, const Expr& b) {
  int c = compare(factor_base(a), factor_base(b));
  if (c != 0) return c;
  return Number::compare(factor_exp(a), factor_exp(b));
}

// Monomials are compared as factor lists.
std::span<const Expr> factors_of(const Expr& e) {
  if (e.kind() == Kind::Mul) return e.args();
  return {&e, 1};
}

int monomial_compare(const Expr& a, const Expr& b) {
  auto fa = factors_of(a), fb = factors_of(b);
  std::size_t n = std::min(fa.size(), fb.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = factor_compare(fa[i], fb[i]);
    if (c != 0) return c;
  }
  return fa.size() < fb.size() ? -1 : (fa.size() > fb.size() ? 1 : 0);
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return 0;
  int ra = kind_rank(a.kind()), rb = kind_rank(b.kind());
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.kind()) {
    case Kind::Num:
      return Number::compare(a.number(), b.number());
    case Kind::Sym:
      if (a.name_id() == b.name_id()) return 0;
      return a.name() < b.name() ? -1 : 1;
    case Kind::Fn: {
      if (a.name_id() != b.name_id()) return a.name() < b.name() ? -1 : 1;
      if (a.orders() != b.orders()) return a.orders() < b.orders() ? -1 : 1;
      return cmp_seq(a.args(), b.args());
    }
    case Kind::Pow: {
      int c = compare(a.base(), b.base());
      if (c != 0) return c;
      return Number::compare(a.exponent(), b.exponent());
    }
    default:
      return cmp_seq(a.args(), b.args());
  }
}

// ---------------------------------------------------------------- raw builders

namespace raw {

Expr add(std::vector<Expr> terms) {
  if (terms.empty()) return Expr(0);
  if (terms.size() == 1) return terms[0];
  return make_node(Kind::Add, std::move(terms), false);
}

Expr mul(std::vector<Expr> factors) {
  if (factors.empty()) return Expr(1);
  if (factors.size() == 1) return factors[0];
  return make_node(Kind::Mul, std::move(factors), false);
}

Expr pow(Expr base, Number exponent) {
  return make_node(Kind::Pow, {std::move(base)}, false, std::move(exponent));
}

Expr fn(std::string_view name, std::vector<int> orders, std::vector<Expr> args) {
  if (orders.empty()) orders.assign(args.size(), 0);
  if (orders.size() != args.size())
    throw Error(ErrorKind::Internal, "derivative order count does not match arity of " + std::string(name));
  bool normal = std::all_of(args.begin(), args.end(), [](const Expr& e) { return e.is_normal(); });
  return make_node(Kind::Fn, std::move(args), normal, Number(), intern(name), std::move(orders));
}

Expr unary(Kind k, Expr arg) {
  if (k != Kind::Sin && k != Kind::Cos && k != Kind::Exp && k != Kind::Log)
    throw Error(ErrorKind::Internal, "raw::unary: not an elementary function kind");
  return make_node(k, {std::move(arg)}, false);
}

}  // namespace raw

// ---------------------------------------------------------------- normal form

namespace {

Expr add_normal(const std::vector<Expr>& terms);
Expr mul_normal(const std::vector<Expr>& factors);
Expr pow_normal(const Expr& b, const Number& e);

std::span<const Expr> terms_of(const Expr& e) {
  if (e.kind() == Kind::Add) return e.args();
  return {&e, 1};
}

// Term-by-term product of two normalized expressions.
Expr expand_product(const Expr& a, const Expr& b) {
  std::vector<Expr> out;
  for (const Expr& x : terms_of(a))
    for (const Expr& y : terms_of(b)) out.push_back(mul_normal({x, y}));
  return add_normal(out);
}

// Splits a normalized term into numeric coefficient and monomial.
std::pair<Number, Expr> split_coefficient(const Expr& t) {
  if (t.kind() == Kind::Mul && t.args()[0].is_number()) {
    auto a = t.args();
    if (a.size() == 2) return {a[0].number(), a[1]};
    std::vector<Expr> rest(a.begin() + 1, a.end());
    return {a[0].number(), make_node(Kind::Mul, std::move(rest), true)};
  }
  return {Number(1), t};
}

Expr with_coefficient(const Number& c, const Expr& mono) {
  if (c.is_one()) return mono;
  std::vector<Expr> f;
  f.push_back(make_num(c));
  if (mono.kind() == Kind::Mul) {
    for (const Expr& x : mono.args()) f.push_back(x);
  } else {
    f.push_back(mono);
  }
  return make_node(Kind::Mul, std::move(f), true);
}

Expr add_normal(const std::vector<Expr>& terms) {
  Number constant(0);
  bool have_constant = false;
  std::vector<std::pair<Expr, Number>> acc;
  ExprMap<std::size_t> index;
  auto push = [&](const Expr& t) {
    if (t.is_number()) {
      constant = constant + t.number();
      have_constant = true;
      return;
    }
    auto [c, m] = split_coefficient(t);
    auto it = index.find(m);
    if (it == index.end()) {
      index.emplace(m, acc.size());
      acc.emplace_back(m, c);
    } else {
      acc[it->second].second = acc[it->second].second + c;
    }
  };
  for (const Expr& t : terms) {
    if (t.kind() == Kind::Add) {
      for (const Expr& s : t.args()) push(s);
    } else {
      push(t);
    }
  }
  std::vector<std::pair<Expr, Number>> kept;
  for (auto& [m, c] : acc)
    if (!c.is_zero()) kept.emplace_back(m, c);
  std::sort(kept.begin(), kept.end(),
            [](const auto& x, const auto& y) { return monomial_compare(x.first, y.first) < 0; });
  std::vector<Expr> out;
  // A float constant that cancels to 0.0 is dropped like an exact zero.
  if (have_constant && !constant.is_zero()) out.push_back(make_num(constant));
  for (auto& [m, c] : kept) out.push_back(with_coefficient(c, m));
  if (out.empty()) return have_constant ? make_num(constant.is_exact() ? Number(0) : constant) : Expr(0);
  if (out.size() == 1) return out[0];
  return make_node(Kind::Add, std::move(out), true);
}

Expr mul_normal(const std::vector<Expr>& input) {
  std::vector<Expr> work = input;
  Number coef(1);
  std::vector<Expr> result;
  for (int round = 0; round < 16; ++round) {
    std::vector<std::pair<Expr, Number>> bases;
    ExprMap<std::size_t> index;
    auto add_base = [&](const Expr& b, const Number& e) {
      auto it = index.find(b);
      if (it == index.end()) {
        index.emplace(b, bases.size());
        bases.emplace_back(b, e);
      } else {
        bases[it->second].second = bases[it->second].second + e;
      }
    };
    for (std::size_t i = 0; i < work.size(); ++i) {
      const Expr f = work[i];
      switch (f.kind()) {
        case Kind::Num:
          coef = coef * f.number();
          break;
        case Kind::Mul:
          for (const Expr& g : f.args()) work.push_back(g);
          break;
        case Kind::Pow:
          add_base(f.base(), f.exponent());
          break;
        default:
          add_base(f, Number(1));
      }
    }
    if (coef.is_zero()) return make_num(coef);
    result.clear();
    bool again = false;
    std::vector<Expr> next;
    for (auto& [b, e] : bases) {
      Expr r = pow_normal(b, e);
      if (r.is_number()) {
        coef = coef * r.number();
      } else if (r.kind() == Kind::Mul) {
        next.push_back(r);
        again = true;
      } else {
        next.push_back(r);
        result.push_back(r);
      }
    }
    if (!again) break;
    work = std::move(next);
  }
  if (coef.is_zero()) return make_num(coef);

  // Distribute over sums.
  std::vector<Expr> sums, plain;
  for (const Expr& f : result) (f.kind() == Kind::Add ? sums : plain).push_back(f);
  if (!sums.empty()) {
    std::vector<Expr> partial;
    {
      std::vector<Expr> head = plain;
      head.push_back(make_num(coef));
      partial.push_back(mul_normal(head));
    }
    for (const Expr& s : sums) {
      std::vector<Expr> grown;
      grown.reserve(partial.size() * s.args().size());
      for (const Expr& p : partial)
        for (const Expr& t : s.args()) grown.push_back(mul_normal({p, t}));
      Expr sum = add_normal(grown);
      if (sum.kind() == Kind::Add) {
        partial.assign(sum.args().begin(), sum.args().end());
      } else {
        partial = {sum};
      }
    }
    return add_normal(partial);
  }

  std::sort(plain.begin(), plain.end(),
            [](const Expr& x, const Expr& y) { return factor_compare(x, y) < 0; });
  if (plain.empty()) return make_num(coef);
  if (coef.is_one() && plain.size() == 1) return plain[0];
  std::vector<Expr> f;
  if (!coef.is_one()) f.push_back(make_num(coef));
  for (auto& x : plain) f.push_back(x);
  return make_node(Kind::Mul, std::move(f), true);
}

Expr pow_normal(const Expr& b, const Number& e) {
  if (e.is_zero()) return e.is_exact() ? Expr(1) : make_num(Number::real(1.0));
  if (e.is_one()) return b;
  switch (b.kind()) {
    case Kind::Num: {
      if (b.number().is_one() && b.number().is_exact()) return b;
      if (b.number().is_zero() && b.number().is_exact() && e.sign() < 0)
        throw Error(ErrorKind::Evaluation, "exact division by zero");
      auto v = Number::pow(b.number(), e);
      if (v) return make_num(*v);
      // Pull out exact perfect powers where possible, keep the rest symbolic.
      return make_node(Kind::Pow, {b}, true, e);
    }
    case Kind::Pow:
      if (e.is_integer()) return pow_normal(b.base(), b.exponent() * e);
      break;
    case Kind::Mul: {
      auto a = b.args();
      if (e.is_integer()) {
        std::vector<Expr> f;
        for (const Expr& x : a) f.push_back(pow_normal(x, e));
        return mul_normal(f);
      }
      if (a[0].is_number() && a[0].number().sign() > 0) {
        std::vector<Expr> rest(a.begin() + 1, a.end());
        Expr r = rest.size() == 1 ? rest[0] : make_node(Kind::Mul, std::move(rest), true);
        return mul_normal({pow_normal(a[0], e), pow_normal(r, e)});
      }
      break;
    }
    case Kind::Add:
      if (e.is_integer() && e.sign() > 0 && e.to_long() <= kMaxExpand) {
        long n = e.to_long();
        Expr acc = b;
        for (long i = 1; i < n; ++i) acc = expand_product(acc, b);
        return acc;
      }
      break;
    default:
      break;
  }
  return make_node(Kind::Pow, {b}, true, e);
}

Expr unary_normal(Kind k, const Expr& a) {
  if (a.is_number()) {
    const Number& v = a.number();
    if (v.is_exact()) {
      if (v.is_zero()) {
        if (k == Kind::Sin) return Expr(0);
        if (k == Kind::Cos || k == Kind::Exp) return Expr(1);
      }
      if (v.is_one() && k == Kind::Log) return Expr(0);
    } else {
      double x = v.to_double();
      switch (k) {
        case Kind::Sin: return Expr::real(std::sin(x));
        case Kind::Cos: return Expr::real(std::cos(x));
        case Kind::Exp: return Expr::real(std::exp(x));
        case Kind::Log: return Expr::real(std::log(x));
        default: break;
      }
    }
  }
  if (k == Kind::Log && a.kind() == Kind::Exp) return a.args()[0];
  return make_node(k, {a}, true);
}

Expr fn_normal(Name name, const std::vector<int>& orders, std::vector<Expr> args) {
  return make_node(Kind::Fn, std::move(args), true, Number(), name, orders);
}

}  // namespace

Expr normalize(const Expr& e) {
  if (e.is_normal()) return e;
  std::vector<Expr> kids;
  kids.reserve(e.args().size());
  for (const Expr& k : e.args()) kids.push_back(normalize(k));
  switch (e.kind()) {
    case Kind::Num:
    case Kind::Sym:
      return e;
    case Kind::Fn:
      return fn_normal(e.name_id(), e.orders(), std::move(kids));
    case Kind::Add:
      return add_normal(kids);
    case Kind::Mul:
      return mul_normal(kids);
    case Kind::Pow:
      return pow_normal(kids[0], e.exponent());
    default:
      return unary_normal(e.kind(), kids[0]);
  }
}

// ---------------------------------------------------------------- builders

Expr add(std::vector<Expr> terms) {
  for (auto& t : terms) t = normalize(t);
  return add_normal(terms);
}

Expr mul(std::vector<Expr> factors) {
  for (auto& f : factors) f = normalize(f);
  return mul_normal(factors);
}

Expr pow(const Expr& base, const Number& exponent) { return pow_normal(normalize(base), exponent); }
Expr pow(const Expr& base, long exponent) { return pow(base, Number(exponent)); }
Expr sqrt(const Expr& e) { return pow(e, Number::rational(1, 2)); }
Expr sin(const Expr& e) { return unary_normal(Kind::Sin, normalize(e)); }
Expr cos(const Expr& e) { return unary_normal(Kind::Cos, normalize(e)); }
Expr exp(const Expr& e) { return unary_normal(Kind::Exp, normalize(e)); }
Expr log(const Expr& e) { return unary_normal(Kind::Log, normalize(e)); }

Expr fn(std::string_view name, std::vector<Expr> args, std::vector<int> orders) {
  if (orders.empty()) orders.assign(args.size(), 0);
  if (orders.size() != args.size())
    throw Error(ErrorKind::Internal, "derivative order count does not match arity of " + std::string(name));
  for (auto& a : args) a = normalize(a);
  return fn_normal(intern(name), orders, std::move(args));
}

Expr operator+(const Expr& a, const Expr& b) { return add_normal({normalize(a), normalize(b)}); }
Expr operator-(const Expr& a, const Expr& b) {
  return add_normal({normalize(a), mul_normal({Expr(-1), normalize(b)})});
}
Expr operator*(const Expr& a, const Expr& b) { return mul_normal({normalize(a), normalize(b)}); }
Expr operator/(const Expr& a, const Expr& b) {
  return mul_normal({normalize(a), pow_normal(normalize(b), Number(-1))});
}
Expr operator-(const Expr& a) { return mul_normal({Expr(-1), normalize(a)}); }

// ---------------------------------------------------------------- calculus

namespace {

using Memo = std::unordered_map<const Node*, Expr>;

Expr diff_rec(const Expr& e, Name v, Memo& memo) {
  if (!e.depends_on(v)) return Expr(0);
  auto it = memo.find(e.node());
  if (it != memo.end()) return it->second;
  Expr r;
  auto a = e.args();
  switch (e.kind()) {
    case Kind::Num:
      r = Expr(0);
      break;
    case Kind::Sym:
      r = Expr(1);
      break;
    case Kind::Add: {
      std::vector<Expr> t;
      for (const Expr& x : a) {
        Expr d = diff_rec(x, v, memo);
        if (!d.is_zero()) t.push_back(d);
      }
      r = add_normal(t);
      break;
    }
    case Kind::Mul: {
      std::vector<Expr> t;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].depends_on(v)) continue;
        std::vector<Expr> f;
        for (std::size_t j = 0; j < a.size(); ++j)
          if (j != i) f.push_back(a[j]);
        f.push_back(diff_rec(a[i], v, memo));
        t.push_back(mul_normal(f));
      }
      r = add_normal(t);
      break;
    }
    case Kind::Pow: {
      const Number& n = e.exponent();
      r = mul_normal({make_num(n), pow_normal(a[0], n - Number(1)), diff_rec(a[0], v, memo)});
      break;
    }
    case Kind::Sin:
      r = mul_normal({unary_normal(Kind::Cos, a[0]), diff_rec(a[0], v, memo)});
      break;
    case Kind::Cos:
      r = mul_normal({Expr(-1), unary_normal(Kind::Sin, a[0]), diff_rec(a[0], v, memo)});
      break;
    case Kind::Exp:
      r = mul_normal({e, diff_rec(a[0], v, memo)});
      break;
    case Kind::Log:
      r = mul_normal({pow_normal(a[0], Number(-1)), diff_rec(a[0], v, memo)});
      break;
    case Kind::Fn: {
      std::vector<Expr> t;
      std::vector<Expr> args(a.begin(), a.end());
      for (std::size_t j = 0; j < a.size(); ++j) {
        if (!a[j].depends_on(v)) continue;
        std::vector<int> ord = e.orders();
        ++ord[j];
        t.push_back(mul_normal({fn_normal(e.name_id(), ord, args), diff_rec(a[j], v, memo)}));
      }
      r = add_normal(t);
      break;
    }
  }
  memo.emplace(e.node(), r);
  return r;
}

}  // namespace

Expr diff(const Expr& e, Name var) {
  Memo memo;
  return diff_rec(normalize(e), var, memo);
}

Expr diff(const Expr& e, std::string_view var) { return diff(e, intern(var)); }

Universe::Universe(std::initializer_list<std::string> names) {
  for (const auto& n : names) declare(n);
}

void Universe::declare(std::string_view name) {
  Name n = intern(name);
  auto it = std::lower_bound(names_.begin(), names_.end(), n);
  if (it == names_.end() || *it != n) names_.insert(it, n);
}

bool Universe::contains(Name n) const { return std::binary_search(names_.begin(), names_.end(), n); }
bool Universe::contains(std::string_view name) const { return contains(intern(name)); }

Expr diff(const Expr& e, std::string_view var, const Universe& universe) {
  if (!universe.contains(var)) throw Error(ErrorKind::Semantic, "unknown symbol '" + std::string(var) + "'");
  return diff(e, var);
}

namespace {

Expr rebuild(const Expr& e, std::vector<Expr> kids) {
  switch (e.kind()) {
    case Kind::Num:
    case Kind::Sym:
      return e;
    case Kind::Fn:
      return fn_normal(e.name_id(), e.orders(), std::move(kids));
    case Kind::Add:
      return add_normal(kids);
    case Kind::Mul:
      return mul_normal(kids);
    case Kind::Pow:
      return pow_normal(kids[0], e.exponent());
    default:
      return unary_normal(e.kind(), kids[0]);
  }
}

bool touches(const Expr& e, const std::unordered_map<Name, Expr>& b) {
  const auto& f = e.node()->free;
  if (f.size() < b.size()) {
    for (Name n : f)
      if (b.count(n)) return true;
    return false;
  }
  for (const auto& [n, _] : b)
    if (e.depends_on(n)) return true;
  return false;
}

Expr subst_rec(const Expr& e, const std::unordered_map<Name, Expr>& b, Memo& memo) {
  if (!touches(e, b)) return e;
  if (e.kind() == Kind::Sym) return b.at(e.name_id());
  auto it = memo.find(e.node());
  if (it != memo.end()) return it->second;
  std::vector<Expr> kids;
  for (const Expr& k : e.args()) kids.push_back(subst_rec(k, b, memo));
  Expr r = rebuild(e, std::move(kids));
  memo.emplace(e.node(), r);
  return r;
}

}  // namespace

Expr substitute(const Expr& e, const std::unordered_map<Name, Expr>& b) {
  std::unordered_map<Name, Expr> nb;
  for (const auto& [k, v] : b) nb.emplace(k, normalize(v));
  Memo memo;
  return subst_rec(normalize(e), nb, memo);
}

Expr substitute(const Expr& e, const Bindings& b) {
  std::unordered_map<Name, Expr> nb;
  for (const auto& [k, v] : b) nb.emplace(intern(k), v);
  return substitute(e, nb);
}

namespace {

bool has_fn(const Expr& e, Name name, std::unordered_map<const Node*, bool>& seen) {
  auto it = seen.find(e.node());
  if (it != seen.end()) return it->second;
  bool r = e.kind() == Kind::Fn && (name == nullptr || e.name_id() == name);
  if (!r)
    for (const Expr& k : e.args())
      if (has_fn(k, name, seen)) {
        r = true;
        break;
      }
  seen.emplace(e.node(), r);
  return r;
}

Expr mapfn_rec(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& f, Memo& memo,
               std::unordered_map<const Node*, bool>& has) {
  if (!has_fn(e, nullptr, has)) return e;
  auto it = memo.find(e.node());
  if (it != memo.end()) return it->second;
  std::vector<Expr> kids;
  for (const Expr& k : e.args()) kids.push_back(mapfn_rec(k, f, memo, has));
  Expr r = rebuild(e, std::move(kids));
  if (r.kind() == Kind::Fn) {
    if (auto rep = f(r)) r = normalize(*rep);
  }
  memo.emplace(e.node(), r);
  return r;
}

}  // namespace

Expr map_functions(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& f) {
  Memo memo;
  std::unordered_map<const Node*, bool> has;
  return mapfn_rec(normalize(e), f, memo, has);
}

bool contains_function(const Expr& e, std::string_view name) {
  std::unordered_map<const Node*, bool> seen;
  return has_fn(e, intern(name), seen);
}

// ---------------------------------------------------------------- polynomial view

std::vector<PolyTerm> polynomial_terms(const Expr& e0, std::span<const Name> vars) {
  Expr e = normalize(e0);
  std::vector<Expr> terms;
  if (e.kind() == Kind::Add)
    terms.assign(e.args().begin(), e.args().end());
  else if (!e.is_zero())
    terms.push_back(e);
  auto var_index = [&](const Expr& x) -> int {
    if (x.kind() != Kind::Sym) return -1;
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == x.name_id()) return static_cast<int>(i);
    return -1;
  };
  auto mentions = [&](const Expr& x) {
    for (Name v : vars)
      if (x.depends_on(v)) return true;
    return false;
  };
  std::vector<PolyTerm> out;
  std::map<std::vector<int>, std::vector<Expr>> groups;
  for (const Expr& t : terms) {
    std::vector<int> ex(vars.size(), 0);
    std::vector<Expr> rest;
    for (const Expr& f : factors_of(t)) {
      const Expr& b = factor_base(f);
      int vi = var_index(b);
      if (vi >= 0) {
        Number n = factor_exp(f);
        if (!n.is_integer() || n.sign() < 0)
          throw Error(ErrorKind::Internal, "expression is not polynomial in the requested variables");
        ex[vi] += static_cast<int>(n.to_long());
      } else {
        if (mentions(f))
          throw Error(ErrorKind::Internal, "expression is not polynomial in the requested variables");
        rest.push_back(f);
      }
    }
    groups[ex].push_back(mul_normal(rest));
  }
  for (auto& [ex, cs] : groups) {
    Expr c = add_normal(cs);
    if (!c.is_zero()) out.push_back({ex, c});
  }
  return out;
}

}  // namespace ostrograd::sym
