#include "ostrograd/lagrangian.hpp"

#include <cmath>
#include <map>

#include "ostrograd/error.hpp"
#include "ostrograd/numeric.hpp"

namespace ostrograd {

namespace {

void check_functions(const JetSpec& spec, const Expr& e) {
  std::map<std::string, std::size_t> fns;
  sym::collect_functions(e, fns);
  for (const auto& [name, arity] : fns) {
    const ParamFunction* p = spec.param(name);
    if (!p) throw Error(ErrorKind::Semantic, "unknown function '" + name + "'");
    if (p->args.size() != arity)
      throw Error(ErrorKind::Semantic, "function '" + name + "' expects " + std::to_string(p->args.size()) +
                                           " arguments");
  }
}

}  // namespace

Lagrangian::Lagrangian(JetSpec spec, Expr L) : spec_(std::move(spec)), L_(sym::normalize(L)) {
  for (const auto& s : L_.free_symbols()) {
    auto c = spec_.classify(s);
    switch (c.type) {
      case JetSpec::Coord::Base:
      case JetSpec::Coord::Constant:
        break;
      case JetSpec::Coord::Jet:
        if (c.i > spec_.k())
          throw Error(ErrorKind::Semantic, "Lagrangian uses '" + s + "' of order " + std::to_string(c.i) +
                                               " above the declared order " + std::to_string(spec_.k()));
        break;
      default:
        throw Error(ErrorKind::Semantic, "unknown symbol '" + s + "' in Lagrangian");
    }
  }
  check_functions(spec_, L_);
  partials_.assign(spec_.k() + 1, std::vector<Expr>(spec_.n()));
  for (int i = 0; i <= spec_.k(); ++i)
    for (int A = 0; A < spec_.n(); ++A) partials_[i][A] = sym::diff(L_, spec_.q_name(i, A));
}

ExprMatrix hessian(const Lagrangian& L) {
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  ExprMatrix W(n, std::vector<Expr>(n));
  for (int A = 0; A < n; ++A)
    for (int B = A; B < n; ++B) {
      W[A][B] = sym::diff(L.partial(k, A), spec.q_name(k, B));
      W[B][A] = W[A][B];
    }
  return W;
}

RegularityReport regularity(const Lagrangian& L, int probes, std::uint64_t seed) {
  const auto& spec = L.spec();
  int n = L.n();
  ExprMatrix W = hessian(L);
  std::vector<Expr> flat;
  for (auto& row : W)
    for (auto& e : row) flat.push_back(e);
  sym::Rng rng(seed);
  NumericEnv env = random_env(spec, rng);
  auto vars = spec.jet_coordinates(L.k());
  Evaluator ev(flat, vars, env);
  RegularityReport rep;
  rep.probes = probes;
  std::vector<double> x(vars.size()), w(flat.size()), sc(flat.size());
  for (int p = 0; p < probes; ++p) {
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      for (auto& xi : x) xi = rng.probe();
      ev.run_scaled(x, w, sc);
      ok = all_finite(w) && all_finite(sc);
    }
    if (!ok) throw Error(ErrorKind::Evaluation, "regularity probe domain exhausted");
    // entries at roundoff level relative to their own terms are zero
    Eigen::MatrixXd M(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double v = w[a * n + b];
        M(a, b) = std::abs(v) <= 1e-10 * sc[a * n + b] ? 0.0 : v;
      }
    int r = M.isZero(0) ? 0 : numeric_rank(M, 1e-10);
    if (r < n) {
      ++rep.singular_probes;
      rep.corank = std::max(rep.corank, n - r);
    }
  }
  rep.regular = rep.singular_probes < probes;
  if (rep.regular) rep.corank = 0;
  return rep;
}

ExprGrid jacobi_ostrogradsky_momenta(const Lagrangian& L) {
  const auto& spec = L.spec();
  int k = L.k(), n = L.n();
  ExprGrid P(k, std::vector<Expr>(n));
  for (int r = 1; r <= k; ++r)
    for (int A = 0; A < n; ++A) {
      std::vector<Expr> terms;
      for (int i = 0; i <= k - r; ++i) {
        Expr d = iterated_total_derivative(spec, L.partial(r + i, A), i, k);
        terms.push_back(i % 2 ? -d : d);
      }
      P[r - 1][A] = sym::add(std::move(terms));
    }
  return P;
}

std::vector<Expr> euler_lagrange(const Lagrangian& L) {
  const auto& spec = L.spec();
  std::vector<Expr> el;
  for (int A = 0; A < L.n(); ++A) {
    std::vector<Expr> terms;
    for (int i = 0; i <= L.k(); ++i) {
      Expr d = iterated_total_derivative(spec, L.partial(i, A), i, L.k());
      terms.push_back(i % 2 ? -d : d);
    }
    el.push_back(sym::add(std::move(terms)));
  }
  return el;
}

std::vector<std::string> form_coordinates(const JetSpec& spec) { return spec.jet_coordinates(2 * spec.k() - 1); }

OneForm poincare_cartan_1form(const Lagrangian& L) {
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  OneForm th;
  th.coords = form_coordinates(spec);
  th.coeff.assign(th.coords.size(), Expr(0));
  ExprGrid P = jacobi_ostrogradsky_momenta(L);
  std::vector<Expr> dt{L.L()};
  for (int r = 1; r <= k; ++r)
    for (int A = 0; A < n; ++A) {
      th.coeff[1 + (r - 1) * n + A] = P[r - 1][A];
      dt.push_back(-(spec.q(r, A) * P[r - 1][A]));
    }
  th.coeff[0] = sym::add(std::move(dt));
  return th;
}

TwoForm poincare_cartan_2form(const Lagrangian& L) {
  OneForm th = poincare_cartan_1form(L);
  std::size_t N = th.coords.size();
  TwoForm om;
  om.coords = th.coords;
  // D[a][b] = d theta_a / d x^b
  ExprMatrix D(N, std::vector<Expr>(N));
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) D[a][b] = sym::diff(th.coeff[a], th.coords[b]);
  om.M.assign(N, std::vector<Expr>(N));
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) om.M[a][b] = D[a][b] - D[b][a];
  return om;
}

std::vector<double> contract(const std::vector<std::vector<double>>& M, const std::vector<double>& X) {
  std::size_t N = X.size();
  std::vector<double> out(N, 0.0);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) out[b] += X[a] * M[a][b];
  return out;
}

}  // namespace ostrograd
