#include "ostrograd/jetspace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "ostrograd/error.hpp"

namespace ostrograd {

JetSpec::JetSpec(std::vector<std::string> dofs, int k, std::string base, std::vector<ParamFunction> params,
                 std::vector<Constant> constants)
    : dofs_(std::move(dofs)), k_(k), base_(std::move(base)), params_(std::move(params)),
      constants_(std::move(constants)) {
  if (dofs_.empty()) throw Error(ErrorKind::Semantic, "at least one degree of freedom is required");
  if (k_ < 1) throw Error(ErrorKind::Semantic, "Lagrangian order must be at least 1");
  std::set<std::string> seen;
  for (const auto& d : dofs_) {
    if (d.empty() || !std::isalpha(static_cast<unsigned char>(d[0])))
      throw Error(ErrorKind::Semantic, "dof name must start with a letter: '" + d + "'");
    if (!seen.insert(d).second) throw Error(ErrorKind::Semantic, "duplicate dof '" + d + "'");
  }
  auto reserve = [&](const std::string& nm, const char* what) {
    Coord c = classify(nm);
    if (c.type != Coord::Other)
      throw Error(ErrorKind::Semantic, std::string(what) + " '" + nm + "' collides with a coordinate name");
    if (!seen.insert(nm).second) throw Error(ErrorKind::Semantic, "duplicate name '" + nm + "'");
  };
  if (classify(base_).type != Coord::Base) throw Error(ErrorKind::Internal, "base classification");
  for (const auto& d : dofs_)
    if (d == base_) throw Error(ErrorKind::Semantic, "dof and base share the name '" + d + "'");
  seen.insert(base_);
  std::vector<Constant> consts;
  consts.swap(constants_);
  for (const auto& p : params_) reserve(p.name, "parameter function");
  for (const auto& c : consts) reserve(c.name, "constant");
  constants_.swap(consts);
}

const ParamFunction* JetSpec::param(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::string JetSpec::q_name(int i, int A) const { return "q" + std::to_string(i) + dofs_.at(A); }
std::string JetSpec::p_name(int i, int A) const { return "p" + std::to_string(i) + dofs_.at(A); }
std::string JetSpec::F_name(int j, int A) const { return "F" + std::to_string(j) + dofs_.at(A); }

std::vector<Expr> JetSpec::q_vec(int i) const {
  std::vector<Expr> v;
  for (int A = 0; A < n(); ++A) v.push_back(q(i, A));
  return v;
}

std::vector<Expr> JetSpec::p_vec(int i) const {
  std::vector<Expr> v;
  for (int A = 0; A < n(); ++A) v.push_back(p(i, A));
  return v;
}

JetSpec::Coord JetSpec::classify(std::string_view s) const {
  Coord c;
  if (s == base_) {
    c.type = Coord::Base;
    return c;
  }
  if (s == kExtendedMomentum) {
    c.type = Coord::ExtendedMomentum;
    return c;
  }
  for (const auto& k : constants_)
    if (k.name == s) {
      c.type = Coord::Constant;
      return c;
    }
  if (s.size() >= 3 && (s[0] == 'q' || s[0] == 'p' || s[0] == 'F')) {
    std::size_t j = 1;
    int idx = 0;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])) && j < 7) idx = idx * 10 + (s[j++] - '0');
    if (j > 1 && j < s.size()) {
      std::string_view rest = s.substr(j);
      for (int A = 0; A < n(); ++A)
        if (dofs_[A] == rest) {
          c.type = s[0] == 'q' ? Coord::Jet : s[0] == 'p' ? Coord::Momentum : Coord::Unknown;
          c.i = idx;
          c.A = A;
          return c;
        }
    }
  }
  return c;
}

int JetSpec::order_of(const Expr& e) const {
  int m = -1;
  for (const auto& s : e.free_symbols()) {
    Coord c = classify(s);
    if (c.type == Coord::Jet) m = std::max(m, c.i);
  }
  return m;
}

int JetSpec::momentum_order_of(const Expr& e) const {
  int m = -1;
  for (const auto& s : e.free_symbols()) {
    Coord c = classify(s);
    if (c.type == Coord::Momentum) m = std::max(m, c.i);
  }
  return m;
}

bool JetSpec::uses_unknowns(const Expr& e) const {
  for (const auto& s : e.free_symbols())
    if (classify(s).type == Coord::Unknown) return true;
  return false;
}

std::vector<std::string> JetSpec::jet_coordinates(int m) const {
  std::vector<std::string> v{base_};
  for (int i = 0; i <= m; ++i)
    for (int A = 0; A < n(); ++A) v.push_back(q_name(i, A));
  return v;
}

std::vector<std::string> JetSpec::momentum_coordinates() const {
  std::vector<std::string> v;
  for (int i = 0; i < k_; ++i)
    for (int A = 0; A < n(); ++A) v.push_back(p_name(i, A));
  return v;
}

sym::Universe JetSpec::universe(int m, bool with_momenta) const {
  sym::Universe u;
  for (const auto& s : jet_coordinates(m)) u.declare(s);
  if (with_momenta) {
    for (const auto& s : momentum_coordinates()) u.declare(s);
    u.declare(kExtendedMomentum);
  }
  for (const auto& c : constants_) u.declare(c.name);
  return u;
}

// ---------------------------------------------------------------- d_T

Expr total_derivative(const JetSpec& spec, const Expr& e, int m) {
  int used = spec.order_of(e);
  if (used > m)
    throw Error(ErrorKind::Argument, "expression uses order " + std::to_string(used) + " coordinates but source order is " +
                                         std::to_string(m));
  std::vector<Expr> terms{sym::diff(e, spec.base())};
  for (int i = 0; i <= used; ++i)
    for (int A = 0; A < spec.n(); ++A) {
      Expr d = sym::diff(e, spec.q_name(i, A));
      if (!d.is_zero()) terms.push_back(spec.q(i + 1, A) * d);
    }
  return sym::add(std::move(terms));
}

Expr total_derivative(const JetSpec& spec, const Expr& e) {
  return total_derivative(spec, e, std::max(0, spec.order_of(e)));
}

Expr iterated_total_derivative(const JetSpec& spec, const Expr& e, int times, int m) {
  if (times < 0) throw Error(ErrorKind::Argument, "negative derivative count");
  Expr r = sym::normalize(e);
  for (int s = 0; s < times; ++s) r = total_derivative(spec, r, m + s);
  return r;
}

Expr iterated_total_derivative(const JetSpec& spec, const Expr& e, int times) {
  return iterated_total_derivative(spec, e, times, std::max(0, spec.order_of(e)));
}

// ---------------------------------------------------------------- vector fields

Expr lie_derivative(const JetSpec& spec, const VectorFieldAnsatz& v, const Expr& xi) {
  int used = spec.order_of(xi);
  if (used > v.order)
    throw Error(ErrorKind::Argument, "function uses jet order " + std::to_string(used) +
                                         " beyond the vector field's ambient order " + std::to_string(v.order));
  if (static_cast<int>(v.jet.size()) != v.order + 1) throw Error(ErrorKind::Argument, "ansatz jet components malformed");
  if (spec.momentum_order_of(xi) >= static_cast<int>(v.momentum.size()))
    throw Error(ErrorKind::Argument, "function uses momenta the vector field does not act on");
  std::vector<Expr> terms;
  Expr dt = sym::diff(xi, spec.base());
  if (!dt.is_zero()) terms.push_back(v.f * dt);
  for (int i = 0; i <= used; ++i)
    for (int A = 0; A < spec.n(); ++A) {
      Expr d = sym::diff(xi, spec.q_name(i, A));
      if (!d.is_zero()) terms.push_back(v.jet[i][A] * d);
    }
  for (std::size_t i = 0; i < v.momentum.size(); ++i)
    for (int A = 0; A < spec.n(); ++A) {
      Expr d = sym::diff(xi, spec.p_name(static_cast<int>(i), A));
      if (!d.is_zero()) terms.push_back(v.momentum[i][A] * d);
    }
  return sym::add(std::move(terms));
}

std::optional<int> classify_semispray(const JetSpec& spec, const VectorFieldAnsatz& v, std::uint64_t seed) {
  if (static_cast<int>(v.jet.size()) != v.order + 1) throw Error(ErrorKind::Argument, "ansatz dimension mismatch");
  for (const auto& row : v.jet)
    if (static_cast<int>(row.size()) != spec.n()) throw Error(ErrorKind::Argument, "ansatz dimension mismatch");
  int chain = 0;
  for (int i = 0; i <= v.order; ++i) {
    bool ok = true;
    for (int A = 0; A < spec.n() && ok; ++A) ok = sym::equivalent(v.jet[i][A], v.f * spec.q(i + 1, A), 32, seed);
    if (!ok) break;
    ++chain;
  }
  if (chain == 0) return std::nullopt;
  return v.order - chain + 1;
}

// ---------------------------------------------------------------- JetPoint

nlohmann::json to_json(const JetPoint& p) { return {{"t", p.t}, {"q", p.q}}; }

JetPoint jet_point_from_json(const JetSpec& spec, const nlohmann::json& j) {
  JetPoint p;
  try {
    p.t = j.at("t").get<double>();
    p.q = j.at("q").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Argument, std::string("jet point JSON: ") + e.what());
  }
  if (p.q.empty()) throw Error(ErrorKind::Argument, "jet point has no rows");
  if (!std::isfinite(p.t)) throw Error(ErrorKind::Argument, "jet point has non-finite entries");
  for (const auto& row : p.q) {
    if (static_cast<int>(row.size()) != spec.n())
      throw Error(ErrorKind::Argument, "jet point row has " + std::to_string(row.size()) + " entries, expected " +
                                           std::to_string(spec.n()));
    for (double x : row)
      if (!std::isfinite(x)) throw Error(ErrorKind::Argument, "jet point has non-finite entries");
  }
  return p;
}

}  // namespace ostrograd
