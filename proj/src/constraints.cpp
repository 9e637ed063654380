#include "ostrograd/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <cstdio>
#include <set>

#include "ostrograd/error.hpp"
#include "ostrograd/linalg.hpp"
#include "ostrograd/numeric.hpp"

namespace ostrograd {

using sym::Number;

std::vector<std::string> unified_coordinates(const JetSpec& spec) {
  auto v = spec.jet_coordinates(2 * spec.k() - 1);
  for (const auto& p : spec.momentum_coordinates()) v.push_back(p);
  return v;
}

const char* to_string(ConstraintTier t) {
  switch (t) {
    case ConstraintTier::Graph: return "graph";
    case ConstraintTier::Image: return "image";
    case ConstraintTier::Chain: return "chain";
    case ConstraintTier::Configuration: return "configuration";
    case ConstraintTier::Kinetic: return "kinetic";
  }
  return "?";
}

const char* to_string(LedgerStatus s) {
  switch (s) {
    case LedgerStatus::Stabilized: return "stabilized";
    case LedgerStatus::MaxGenerationsHit: return "max-generations-hit";
    case LedgerStatus::Inconsistent: return "inconsistent";
  }
  return "?";
}

std::size_t ConstraintLedger::count() const {
  std::size_t c = 0;
  for (const auto& g : generations) c += g.size();
  return c;
}

VectorFieldAnsatz build_ansatz(const Lagrangian& L, bool force_type1) {
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  VectorFieldAnsatz v;
  v.order = 2 * k - 1;
  v.jet.assign(2 * k, std::vector<Expr>(n));
  for (int j = 0; j < 2 * k; ++j)
    for (int A = 0; A < n; ++A) {
      bool chain = j < k || (force_type1 && j <= 2 * k - 2);
      v.jet[j][A] = chain ? spec.q(j + 1, A) : spec.F(j, A);
    }
  v.momentum.assign(k, std::vector<Expr>(n));
  for (int i = 0; i < k; ++i)
    for (int A = 0; A < n; ++A) v.momentum[i][A] = i == 0 ? L.partial(0, A) : L.partial(i, A) - spec.p(i - 1, A);
  return v;
}

namespace {

Expr dot(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  std::vector<Expr> t;
  for (std::size_t i = 0; i < a.size(); ++i) t.push_back(a[i] * b[i]);
  return sym::add(std::move(t));
}

std::optional<Number> rational_approx(double x, long max_den = 100000, double tol = 1e-9) {
  if (!std::isfinite(x)) return std::nullopt;
  long h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  double r = x;
  for (int it = 0; it < 40; ++it) {
    double a = std::floor(r);
    if (std::abs(a) > 1e12) break;
    long ai = static_cast<long>(a);
    long h2 = ai * h0 + h1, k2 = ai * k0 + k1;
    if (k2 > max_den) break;
    h1 = h0, h0 = h2, k1 = k0, k0 = k2;
    if (std::abs(x - static_cast<double>(h0) / static_cast<double>(k0)) <= tol * std::max(1.0, std::abs(x)))
      return Number::rational(h0, k0);
    double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

Expr leading_coefficient(const Expr& e) {
  Expr t = e.kind() == sym::Kind::Add ? e.args()[0] : e;
  if (t.is_number()) return t;
  if (t.kind() == sym::Kind::Mul && t.args()[0].is_number()) return t.args()[0];
  return Expr(1);
}

Expr monic(const Expr& e) {
  Expr c = leading_coefficient(e);
  if (c.is_zero() || c.is_one()) return e;
  return e * sym::pow(c, -1);
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string gen_label(int g, int j) { return "phi^(" + std::to_string(g) + ")_" + std::to_string(j); }

}  // namespace

struct ConstraintAlgorithm::Impl {
  Lagrangian L;
  JetSpec spec;
  int n, k;
  ConstraintOptions opt;
  LegendreMap map;
  int corank = 0;
  sym::Rng rng;
  NumericEnv env;
  ZeroTest z;
  VectorFieldAnsatz X;
  std::vector<std::string> unknowns;
  sym::Bindings F_sub;
  std::vector<SolvedComponent> solved;
  sym::Bindings top_sub;
  std::vector<std::string> reduced;
  std::vector<sym::Name> low_momenta;
  std::vector<std::vector<Constraint>> gens;
  std::set<std::string> identity_fns;
  std::vector<Expr> sampler;
  LedgerStatus status = LedgerStatus::Stabilized;
  bool finished = false;
  bool image_complete = true;
  std::vector<std::string> notes;
  int steps = 0;
  int deferred_rows = 0;
  double deferred_residual = 0;
  std::size_t cache_key = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<double>> cache;

  Impl(const Lagrangian& lag, ConstraintOptions o)
      : L(lag), spec(lag.spec()), n(lag.n()), k(lag.k()), opt(o), rng(o.seed * 0x2545f4914f6cdd1dULL + 17),
        z(lag.spec(), o.seed) {
    if (opt.max_generations < 1) throw Error(ErrorKind::Argument, "max_generations must be at least 1");
    map = legendre_map(L);
    RegularityReport reg = regularity(L, 64, opt.seed);
    corank = reg.regular ? 0 : reg.corank;
    env = random_env(spec, rng);
    X = build_ansatz(L, opt.force_type1);
    for (int j = k; j < 2 * k; ++j)
      for (int A = 0; A < n; ++A)
        if (X.jet[j][A].is_symbol() && X.jet[j][A].name() == spec.F_name(j, A)) unknowns.push_back(spec.F_name(j, A));
    for (int A = 0; A < n; ++A) top_sub[spec.p_name(k - 1, A)] = map.p_hat[k - 1][A];
    reduced = spec.jet_coordinates(2 * k - 1);
    for (int i = 0; i + 1 < k; ++i)
      for (int A = 0; A < n; ++A) {
        reduced.push_back(spec.p_name(i, A));
        low_momenta.push_back(sym::intern(spec.p_name(i, A)));
      }
    std::vector<Constraint> g0;
    for (int i = 0; i < k; ++i)
      for (int A = 0; A < n; ++A)
        g0.push_back({"xi^" + std::to_string(i) + "_" + spec.dofs()[A], 0, ConstraintTier::Graph,
                      spec.p(i, A) - map.p_hat[i][A], false, false});
    if (corank > 0) find_image_constraints(g0);
    gens.push_back(std::move(g0));
  }

  // ------------------------------------------------------------ reductions

  Expr apply_identities(const Expr& e) const {
    if (identity_fns.empty()) return e;
    return sym::map_functions(e, [&](const Expr& f) -> std::optional<Expr> {
      if (!identity_fns.count(f.name())) return std::nullopt;
      auto args = f.args();
      const auto& ord = f.orders();
      for (std::size_t j = 0; j < args.size() && j < ord.size(); ++j) {
        if (ord[j] == 0 || !args[j].is_symbol()) continue;
        auto c = spec.classify(args[j].name());
        if (c.type == JetSpec::Coord::Jet && c.i == 0) return Expr(0);
      }
      return std::nullopt;
    });
  }

  Expr reduce(const Expr& e) const {
    Expr r = F_sub.empty() ? e : sym::substitute(e, F_sub);
    r = apply_identities(r);
    return sym::substitute(r, top_sub);
  }

  // ------------------------------------------------------------ numerics

  std::vector<double> random_point(const std::vector<std::string>& vars) {
    std::vector<double> x(vars.size());
    for (auto& v : x) v = rng.probe();
    return x;
  }

  // Gauss-Newton with minimum-norm steps onto {sys = 0}.
  struct Projector {
    std::size_t m, N;
    Evaluator ev;
    Projector(const std::vector<Expr>& sys, const std::vector<std::string>& vars, const NumericEnv& env)
        : m(sys.size()), N(vars.size()), ev(jacobian_outputs(sys, vars), vars, env) {}

    static std::vector<Expr> jacobian_outputs(const std::vector<Expr>& sys, const std::vector<std::string>& vars) {
      std::vector<Expr> outs = sys;
      for (const auto& c : sys)
        for (const auto& v : vars) outs.push_back(sym::diff(c, v));
      return outs;
    }

    double worst(const std::vector<double>& v) const {
      double w = 0;
      for (std::size_t i = 0; i < m; ++i) w = std::max(w, std::abs(v[i]));
      return w;
    }

    bool operator()(std::vector<double>& x) {
      if (m == 0) return true;
      for (int it = 0; it < 300; ++it) {
        std::vector<double> v = ev(x);
        if (!all_finite(v)) return false;
        if (worst(v) <= 1e-14) return true;
        Eigen::MatrixXd J(m, N);
        Eigen::VectorXd r(m);
        for (std::size_t i = 0; i < m; ++i) {
          r(i) = v[i];
          for (std::size_t c = 0; c < N; ++c) J(i, c) = v[m + i * N + c];
        }
        Eigen::VectorXd dx = J.completeOrthogonalDecomposition().solve(-r);
        if (!dx.allFinite()) return false;
        for (std::size_t c = 0; c < N; ++c) x[c] += dx(c);
      }
      std::vector<double> v = ev(x);
      return all_finite(v) && worst(v) <= 1e-10;
    }
  };

  std::vector<std::vector<double>> feasible(int count) {
    if (cache_key == sampler.size() && static_cast<int>(cache.size()) >= count)
      return {cache.begin(), cache.begin() + count};
    std::vector<std::vector<double>> pts;
    Projector project(sampler, reduced, env);
    for (int attempt = 0; attempt < 400 && static_cast<int>(pts.size()) < count; ++attempt) {
      std::vector<double> x = random_point(reduced);
      if (!project(x)) continue;
      // stay inside the probe box so points remain away from singular loci
      bool inside = true;
      for (double c : x) inside = inside && std::abs(c) <= 10.0;
      if (inside) pts.push_back(std::move(x));
    }
    if (static_cast<int>(pts.size()) < count)
      throw Error(ErrorKind::Evaluation, "feasible-point sampler exhausted the probe domain");
    cache_key = sampler.size();
    cache = pts;
    return pts;
  }

  // Vanishes relative to its cancellation scale at every point that evaluates.
  bool vanishes(const Expr& e, const std::vector<std::vector<double>>& pts) const {
    if (e.is_number()) return e.number().is_zero();
    Evaluator ev(std::span<const Expr>(&e, 1), reduced, env);
    int evaluated = 0;
    for (const auto& x : pts) {
      double v = 0, s = 0;
      ev.run_scaled(x, std::span<double>(&v, 1), std::span<double>(&s, 1));
      if (!std::isfinite(v) || !std::isfinite(s)) continue;
      ++evaluated;
      if (std::abs(v) > 1e-9 * std::max(s, 1e-300)) return false;
    }
    if (!evaluated) throw Error(ErrorKind::Evaluation, "constraint residual does not evaluate at any feasible point");
    return true;
  }

  // Does `cand` raise the Jacobian rank of `base` at some point?
  bool raises_rank(const std::vector<Expr>& base, const Expr& cand, const std::vector<std::vector<double>>& pts,
                   const std::vector<std::string>& vars) const {
    std::vector<Expr> outs;
    for (const auto& c : base)
      for (const auto& v : vars) outs.push_back(sym::diff(c, v));
    for (const auto& v : vars) outs.push_back(sym::diff(cand, v));
    Evaluator ev(outs, vars, env);
    std::size_t N = vars.size(), m = base.size();
    for (const auto& x : pts) {
      std::vector<double> g = ev(x);
      if (!all_finite(g)) continue;
      Eigen::MatrixXd J(m + 1, N);
      for (std::size_t i = 0; i <= m; ++i)
        for (std::size_t c = 0; c < N; ++c) J(i, c) = g[i * N + c];
      int before = m ? numeric_rank(J.topRows(m), 1e-8) : 0;
      if (numeric_rank(J, 1e-8) > before) return true;
    }
    return false;
  }

  // ------------------------------------------------------------ image side

  // Closed form of h (known to be independent of q_k) over t, q_<k, constants.
  std::optional<Expr> closed_form(const Expr& h) {
    if (z.is_zero(h)) return Expr(0);
    if (spec.order_of(h) < k) return h;
    if (auto m = monomial_fit(h)) return m;
    sym::Bindings fix;
    for (int A = 0; A < n; ++A)
      fix[spec.q_name(k, A)] = Expr::rational((A % 2 ? -1 : 1) * (A + 2), A + 3);
    Expr sub = sym::substitute(h, fix);
    if (z.is_zero(sub - h)) return sub;
    return std::nullopt;
  }

  // h = r * prod u_j^e_j over t, symbolic constants and dot products of q_<k.
  std::optional<Expr> monomial_fit(const Expr& h) {
    std::vector<Expr> basis;
    if (h.depends_on(spec.base())) basis.push_back(spec.t());
    std::vector<std::string> vars = spec.jet_coordinates(k);
    NumericEnv e2 = env;
    for (const auto& c : spec.constants())
      if (!(c.value && c.value->is_number()) && h.depends_on(c.name)) {
        basis.push_back(Expr::symbol(c.name));
        vars.push_back(c.name);
        e2.constants.erase(c.name);
      }
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) {
        Expr d = dot(spec.q_vec(i), spec.q_vec(j));
        bool uses = false;
        for (int A = 0; A < n; ++A) uses = uses || h.depends_on(spec.q_name(i, A)) || h.depends_on(spec.q_name(j, A));
        if (!uses) continue;
        if (n == 1 && i != j) continue;
        basis.push_back(n == 1 ? spec.q(i, 0) : d);
      }
    std::size_t b = basis.size(), N = b + 12;
    std::vector<Expr> outs{h};
    for (const auto& u : basis) outs.push_back(u);
    Evaluator ev(outs, vars, e2);
    Eigen::MatrixXd M(N, b + 1);
    Eigen::VectorXd y(N);
    std::vector<std::vector<double>> samples;
    for (std::size_t r = 0, tries = 0; r < N && tries < 50 * N; ++tries) {
      std::vector<double> v = ev(random_point(vars));
      bool ok = all_finite(v) && v[0] != 0;
      for (std::size_t j = 1; ok && j <= b; ++j) ok = v[j] != 0;
      if (!ok) continue;
      M(r, 0) = 1;
      for (std::size_t j = 0; j < b; ++j) M(r, j + 1) = std::log(std::abs(v[j + 1]));
      y(r) = std::log(std::abs(v[0]));
      samples.push_back(v);
      ++r;
    }
    if (samples.size() < N) return std::nullopt;
    Eigen::VectorXd sol = M.colPivHouseholderQr().solve(y);
    std::vector<Number> ex;
    for (std::size_t j = 0; j < b; ++j) {
      double e = std::round(2 * sol(j + 1)) / 2;
      if (std::abs(e - sol(j + 1)) > 1e-6) return std::nullopt;
      ex.push_back(Number::rational(static_cast<long>(std::lround(2 * e)), 2));
    }
    double r0 = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      double prod = 1;
      for (std::size_t j = 0; j < b; ++j) prod *= std::pow(samples[s][j + 1], ex[j].to_double());
      double r = samples[s][0] / prod;
      if (!std::isfinite(r)) return std::nullopt;
      if (s == 0)
        r0 = r;
      else if (std::abs(r - r0) > 1e-8 * std::abs(r0))
        return std::nullopt;
    }
    auto rq = rational_approx(r0);
    if (!rq) return std::nullopt;
    Expr out(*rq);
    for (std::size_t j = 0; j < b; ++j)
      if (!ex[j].is_zero()) out = out * sym::pow(basis[j], ex[j]);
    if (!z.is_zero(out - h)) return std::nullopt;
    return out;
  }

  void find_image_constraints(std::vector<Constraint>& g0) {
    std::vector<Expr> P = spec.p_vec(k - 1);
    const auto& Ph = map.p_hat[k - 1];
    std::vector<std::pair<Expr, Expr>> cands;
    for (int A = 0; A < n; ++A) cands.emplace_back(P[A], Ph[A]);
    for (int A = 0; A < n; ++A)
      for (int B = A + 1; B < n; ++B) {
        cands.emplace_back(P[A] + P[B], Ph[A] + Ph[B]);
        cands.emplace_back(P[A] - P[B], Ph[A] - Ph[B]);
      }
    for (int i = 1; i < k; ++i) cands.emplace_back(dot(P, spec.q_vec(i)), dot(Ph, spec.q_vec(i)));
    cands.emplace_back(dot(P, P), dot(Ph, Ph));

    auto jets = spec.jet_coordinates(k);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 3; ++i) pts.push_back(random_point(jets));
    std::vector<Expr> accepted;  // on the image, as functions of the jets
    std::vector<Expr> gradients_base;
    int found = 0;
    for (const auto& [f, h] : cands) {
      if (found == corank) break;
      bool independent = true;
      for (int B = 0; B < n && independent; ++B) independent = z.is_zero(sym::diff(h, spec.q_name(k, B)));
      if (!independent) continue;
      auto mu = closed_form(h);
      if (!mu) continue;
      Expr c = monic(f - *mu);
      // rank in the momentum directions, evaluated on the image
      std::vector<Expr> grad;
      for (const auto& p : P) grad.push_back(sym::substitute(sym::diff(c, p.name()), top_sub));
      if (!raises_rank_rows(gradients_base, grad, pts, jets)) continue;
      for (auto& g : grad) gradients_base.push_back(g);
      ++found;
      g0.push_back({gen_label(0, found), 0, ConstraintTier::Image, c, false, true});
    }
    if (found < corank) {
      image_complete = false;
      notes.push_back("found " + std::to_string(found) + " of " + std::to_string(corank) +
                      " image constraints; the rest are only given by the graph constraints");
    }
  }

  // rows: flattened gradient blocks of n entries each
  bool raises_rank_rows(const std::vector<Expr>& base, const std::vector<Expr>& cand,
                        const std::vector<std::vector<double>>& pts, const std::vector<std::string>& vars) const {
    std::vector<Expr> outs = base;
    for (const auto& c : cand) outs.push_back(c);
    Evaluator ev(outs, vars, env);
    std::size_t w = cand.size(), m = base.size() / w;
    for (const auto& x : pts) {
      std::vector<double> g = ev(x);
      if (!all_finite(g)) continue;
      Eigen::MatrixXd J(m + 1, w);
      for (std::size_t i = 0; i <= m; ++i)
        for (std::size_t c = 0; c < w; ++c) J(i, c) = g[i * w + c];
      int before = m ? numeric_rank(J.topRows(m), 1e-8) : 0;
      if (numeric_rank(J, 1e-8) > before) return true;
    }
    return false;
  }

  // ------------------------------------------------------------ steps

  VectorFieldAnsatz field() const {
    VectorFieldAnsatz v = X;
    if (!F_sub.empty())
      for (auto& row : v.jet)
        for (auto& e : row) e = sym::substitute(e, F_sub);
    return v;
  }

  bool is_unknown_free(const Expr& e) const {
    for (const auto& u : unknowns)
      if (e.depends_on(u) && !F_sub.count(u)) return false;
    return true;
  }

  // Replace a coefficient that still uses jets >= k by lambda * p^{k-1}_B when
  // it equals lambda * p_hat^{k-1}_B.
  std::optional<Expr> to_image(const Expr& c) {
    if (spec.order_of(c) < k) return c;
    auto vars = spec.jet_coordinates(2 * k - 1);
    for (int B = 0; B < n; ++B) {
      const Expr& ph = map.p_hat[k - 1][B];
      Expr pair[] = {c, ph};
      Evaluator ev(pair, vars, env);
      std::optional<double> ratio;
      bool ok = true;
      for (int s = 0; s < 3 && ok; ++s) {
        auto v = ev(random_point(vars));
        if (!all_finite(v) || v[1] == 0) {
          ok = false;
          break;
        }
        double r = v[0] / v[1];
        if (!ratio)
          ratio = r;
        else if (std::abs(r - *ratio) > 1e-9 * std::max(1.0, std::abs(*ratio)))
          ok = false;
      }
      if (!ok || !ratio) continue;
      auto lam = rational_approx(*ratio);
      if (!lam) continue;
      if (z.is_zero(c - Expr(*lam) * ph)) return Expr(*lam) * spec.p(k - 1, B);
    }
    return std::nullopt;
  }

  struct Candidate {
    Expr expr;
    ConstraintTier tier;
    bool image_form = true;
    bool identity = false;
    std::string label_suffix;  // ",x" for per-dof families
  };

  // Tangency residual of one image-side constraint; nullopt when tangent.
  std::optional<Candidate> chain_residual(const Constraint& c, const std::vector<std::vector<double>>& pts,
                                          std::vector<SolvedComponent>& solved_now) {
    Expr R = reduce(lie_derivative(spec, field(), c.expr));
    if (R.is_zero()) return std::nullopt;
    // residual that involves undetermined components fixes one of them
    for (const auto& u : unknowns) {
      if (F_sub.count(u) || !R.depends_on(u)) continue;
      Expr a = sym::diff(R, u);
      if (!sym::diff(a, u).is_zero() || z.is_zero(a)) continue;
      sym::Bindings zero{{u, Expr(0)}};
      Expr val = -sym::substitute(R, zero) / a;
      F_sub[u] = val;
      for (auto& [name, e] : F_sub) e = sym::substitute(e, {{u, val}});
      solved_now.push_back({u, val});
      return std::nullopt;
    }
    std::vector<Expr> comps;
    std::vector<std::vector<sym::PolyTerm>> comp_terms;
    try {
      auto terms = sym::polynomial_terms(R, low_momenta);
      std::map<int, std::vector<sym::PolyTerm>> by_degree;
      for (auto& t : terms) {
        int d = 0;
        for (int e : t.exponents) d += e;
        by_degree[d].push_back(t);
      }
      for (auto& [d, ts] : by_degree) comp_terms.push_back(ts);
    } catch (const Error&) {
      comp_terms.clear();
    }
    auto build = [&](const std::vector<sym::PolyTerm>& ts, bool image, bool& image_ok) {
      std::vector<Expr> out;
      for (const auto& t : ts) {
        Expr mono(1);
        for (std::size_t v = 0; v < low_momenta.size(); ++v)
          if (t.exponents[v]) mono = mono * sym::pow(Expr::symbol(*low_momenta[v]), static_cast<long>(t.exponents[v]));
        Expr coef = t.coefficient;
        if (image) {
          if (auto ic = to_image(coef))
            coef = *ic;
          else
            image_ok = false;
        }
        out.push_back(coef * mono);
      }
      return sym::add(std::move(out));
    };
    std::vector<Expr> kept;
    bool image_ok = true;
    if (comp_terms.empty()) {
      if (!vanishes(R, pts)) {
        kept.push_back(R);
        image_ok = spec.order_of(R) < k;
      }
    } else {
      for (const auto& ts : comp_terms) {
        bool dummy = true;
        Expr comp = build(ts, false, dummy);
        if (vanishes(comp, pts)) continue;
        kept.push_back(build(ts, true, image_ok));
      }
    }
    if (kept.empty()) return std::nullopt;
    Expr e = sym::add(kept);
    if (!image_ok) e = sym::add(kept);
    return Candidate{monic(e), ConstraintTier::Chain, image_ok && spec.order_of(e) < k, false, ""};
  }

  // Tangency of the graph constraints: the Euler-Lagrange rows, linear in the
  // unknown components. The pivot structure is found numerically; only the
  // pivot block is solved symbolically. Rows without a pivot are compatibility
  // conditions, examined numerically through their reduced right-hand sides.
  std::vector<Candidate> el_branch(const std::vector<std::vector<double>>& pts, std::vector<SolvedComponent>& solved_now) {
    std::vector<Expr> plc(n);
    for (int A = 0; A < n; ++A) plc[A] = Expr::symbol("_dLdq0_" + spec.dofs()[A]);
    VectorFieldAnsatz jet_only = X;
    jet_only.momentum.clear();
    std::vector<Expr> rows;
    for (int i = 0; i < k; ++i)
      for (int A = 0; A < n; ++A) {
        Expr G = i == 0 ? plc[A] : L.partial(i, A) - map.p_hat[i - 1][A];
        rows.push_back(G - lie_derivative(spec, jet_only, map.p_hat[i][A]));
      }
    std::size_t m = rows.size(), nu = unknowns.size();
    sym::Bindings zero, plc_zero, plc_real;
    for (const auto& u : unknowns) zero[u] = Expr(0);
    for (int A = 0; A < n; ++A) {
      plc_zero[plc[A].name()] = Expr(0);
      plc_real[plc[A].name()] = L.partial(0, A);
    }
    ExprMatrix M(m, std::vector<Expr>(nu));
    std::vector<Expr> b(m), b_kin(m);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t u = 0; u < nu; ++u) M[r][u] = sym::diff(rows[r], unknowns[u]);
      b[r] = -sym::substitute(rows[r], zero);
      b_kin[r] = sym::substitute(b[r], plc_zero);
    }
    // b depends on the placeholder dL/dq0^A only through row (0, A), as -dL/dq0^A.

    std::vector<Expr> outs;
    for (auto& row : M)
      for (auto& e : row) outs.push_back(e);
    for (auto& e : b_kin) outs.push_back(e);
    Evaluator ev(outs, reduced, env);
    struct Sample {
      Eigen::MatrixXd M;
      Eigen::VectorXd b, scale;
    };
    std::vector<Sample> samples;
    for (const auto& x : pts) {
      std::vector<double> v(outs.size()), s(outs.size());
      ev.run_scaled(x, v, s);
      if (!all_finite(v) || !all_finite(s)) continue;
      Sample smp{Eigen::MatrixXd(m, nu), Eigen::VectorXd(m), Eigen::VectorXd(m)};
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t u = 0; u < nu; ++u) {
          // identically vanishing entries come back as roundoff
          std::size_t j = r * nu + u;
          smp.M(r, u) = std::abs(v[j]) <= 1e-10 * s[j] ? 0.0 : v[j];
        }
        smp.b(r) = v[m * nu + r];
        smp.scale(r) = s[m * nu + r];
      }
      samples.push_back(std::move(smp));
    }
    if (samples.empty()) throw Error(ErrorKind::Evaluation, "Euler-Lagrange rows do not evaluate at any feasible point");

    // numeric pivots with full pivoting on the first sample
    std::vector<int> prow, pcol;
    {
      Eigen::MatrixXd A = samples[0].M;
      double big = nu ? A.cwiseAbs().maxCoeff() : 0.0;
      std::vector<bool> ru(m, false), cu(nu, false);
      while (true) {
        double best = 0;
        int br = -1, bc = -1;
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t u = 0; u < nu; ++u)
            if (!ru[r] && !cu[u] && std::abs(A(r, u)) > best) best = std::abs(A(r, u)), br = r, bc = u;
        if (br < 0 || best <= 1e-9 * big) break;
        ru[br] = cu[bc] = true;
        prow.push_back(br);
        pcol.push_back(bc);
        for (std::size_t r = 0; r < m; ++r) {
          if (static_cast<int>(r) == br) continue;
          double f = A(r, bc) / A(br, bc);
          A.row(r) -= f * A.row(br);
        }
      }
    }
    std::vector<int> free_cols, resid_rows;
    for (std::size_t u = 0; u < nu; ++u)
      if (std::find(pcol.begin(), pcol.end(), static_cast<int>(u)) == pcol.end()) free_cols.push_back(u);
    for (std::size_t r = 0; r < m; ++r)
      if (std::find(prow.begin(), prow.end(), static_cast<int>(r)) == prow.end()) resid_rows.push_back(r);

    // symbolic solve of the pivot block, free unknowns kept as symbols
    if (!pcol.empty()) {
      std::size_t rk = pcol.size();
      ExprMatrix B(rk, std::vector<Expr>(rk));
      std::vector<Expr> rhs(rk);
      for (std::size_t i = 0; i < rk; ++i) {
        for (std::size_t j = 0; j < rk; ++j) B[i][j] = M[prow[i]][pcol[j]];
        std::vector<Expr> t{sym::substitute(b[prow[i]], plc_real)};
        for (int f : free_cols) t.push_back(-(M[prow[i]][f] * Expr::symbol(unknowns[f])));
        rhs[i] = sym::add(std::move(t));
      }
      auto sol = solve_symbolic(B, rhs, z);
      if (!sol) throw Error(ErrorKind::Internal, "pivot block of the Euler-Lagrange rows tested singular");
      std::vector<std::pair<int, Expr>> ordered;
      for (std::size_t j = 0; j < rk; ++j) ordered.emplace_back(pcol[j], (*sol)[j]);
      std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [col, val] : ordered) solved_now.push_back({unknowns[col], val});
    }
    for (const auto& s : solved_now) F_sub[s.name] = s.value;

    // compatibility: c = b_R - M_RP M_PP^{-1} b_P for each residual row
    std::vector<bool> cfg(n, false);
    double worst_kin = 0;
    for (const auto& smp : samples) {
      std::size_t rk = pcol.size();
      Eigen::MatrixXd MPP(rk, rk), MRP(resid_rows.size(), rk);
      for (std::size_t i = 0; i < rk; ++i)
        for (std::size_t j = 0; j < rk; ++j) MPP(i, j) = smp.M(prow[i], pcol[j]);
      for (std::size_t i = 0; i < resid_rows.size(); ++i)
        for (std::size_t j = 0; j < rk; ++j) MRP(i, j) = smp.M(resid_rows[i], pcol[j]);
      Eigen::MatrixXd T = rk ? Eigen::MatrixXd(MRP * MPP.inverse()) : Eigen::MatrixXd::Zero(resid_rows.size(), 0);
      for (std::size_t i = 0; i < resid_rows.size(); ++i) {
        int r = resid_rows[i];
        double c = smp.b(r), s = smp.scale(r);
        for (std::size_t j = 0; j < rk; ++j) {
          c -= T(i, j) * smp.b(prow[j]);
          s += std::abs(T(i, j)) * smp.scale(prow[j]);
        }
        worst_kin = std::max(worst_kin, std::abs(c) / std::max(s, 1e-300));
        // placeholder coefficient of dL/dq0^A in row r
        for (int A = 0; A < n; ++A) {
          double w = r == A ? -1.0 : 0.0;
          for (std::size_t j = 0; j < rk; ++j)
            if (prow[j] == A) w += T(i, j);
          if (std::abs(w) > 1e-9) cfg[A] = true;
        }
      }
    }

    bool separable = true;
    for (int A = 0; A < n && separable; ++A) separable = spec.order_of(L.partial(0, A)) <= 0;
    std::vector<Candidate> out;
    if (!separable) {
      bool any = worst_kin > 1e-9;
      for (int A = 0; A < n; ++A) any = any || cfg[A];
      if (any) {
        for (int r : resid_rows) {
          Expr res = reduce(residual_row(M, b, prow, pcol, r, plc_real));
          if (!res.is_zero() && !vanishes(res, pts))
            out.push_back({monic(res), ConstraintTier::Kinetic, spec.order_of(res) < k, false, ""});
        }
      }
      return out;
    }
    if (worst_kin > 1e-9) {
      deferred_rows = static_cast<int>(resid_rows.size());
      deferred_residual = std::max(deferred_residual, worst_kin);
      notes.push_back("Euler-Lagrange compatibility leaves a nonvanishing kinetic residual (relative size " +
                      format_g(worst_kin) + "); reported as deferred, not as a constraint");
    }
    for (int A = 0; A < n; ++A) {
      if (!cfg[A]) continue;
      Expr d = L.partial(0, A);
      // opaque potentials: the condition is imposed on the function itself
      std::map<std::string, std::size_t> ar;
      sym::collect_functions(d, ar);
      auto saved = identity_fns;
      for (const auto& [name, _] : ar) identity_fns.insert(name);
      bool identity = !ar.empty() && apply_identities(d).is_zero();
      if (!identity) identity_fns = saved;
      out.push_back({d, ConstraintTier::Configuration, spec.order_of(d) < k, identity, "," + spec.dofs()[A]});
    }
    return out;
  }

  // Symbolic compatibility row b_r - M_rP M_PP^{-1} b_P (small systems only).
  Expr residual_row(const ExprMatrix& M, const std::vector<Expr>& b, const std::vector<int>& prow,
                    const std::vector<int>& pcol, int r, const sym::Bindings& plc_real) const {
    std::size_t rk = pcol.size();
    if (!rk) return sym::substitute(b[r], plc_real);
    ExprMatrix BT(rk, std::vector<Expr>(rk));
    std::vector<Expr> rhs(rk);
    for (std::size_t i = 0; i < rk; ++i) {
      for (std::size_t j = 0; j < rk; ++j) BT[i][j] = M[prow[j]][pcol[i]];
      rhs[i] = M[r][pcol[i]];
    }
    auto w = solve_symbolic(BT, rhs, z);  // w^T = M_rP M_PP^{-1}
    if (!w) throw Error(ErrorKind::Internal, "pivot block tested singular");
    std::vector<Expr> t{b[r]};
    for (std::size_t j = 0; j < rk; ++j) t.push_back(-((*w)[j] * b[prow[j]]));
    return sym::substitute(sym::add(std::move(t)), plc_real);
  }

  ConstraintAlgorithm::Step step() {
    ConstraintAlgorithm::Step st;
    if (finished) return st;
    int g = static_cast<int>(gens.size()) - 1;
    auto pts = feasible(4);
    std::vector<Candidate> cands;
    for (const auto& c : gens[g]) {
      if (c.tier == ConstraintTier::Graph || c.identity) continue;
      if (auto r = chain_residual(c, pts, st.solved)) cands.push_back(*r);
    }
    if (steps == 0)
      for (auto& c : el_branch(pts, st.solved)) cands.push_back(c);
    ++steps;
    for (const auto& s : st.solved) solved.push_back(s);

    std::vector<Expr> base = sampler;
    int index = 0, family = 0;
    for (const auto& cand : cands) {
      if (cand.expr.is_number()) {
        if (!cand.expr.number().is_zero()) {
          st.inconsistent = true;
          notes.push_back("tangency residual is a nonzero constant");
        }
        continue;
      }
      bool duplicate = false;
      for (const auto& f : st.found) duplicate = duplicate || sym::equivalent(f.expr, cand.expr, 8, opt.seed);
      if (duplicate) continue;
      if (!cand.identity) {
        Expr red = reduce(cand.expr);
        if (!raises_rank(base, red, pts, reduced)) continue;
        base.push_back(red);
      }
      std::string label;
      if (cand.label_suffix.empty()) {
        label = gen_label(g + 1, ++index);
      } else {
        if (!family) family = index + 1;
        label = gen_label(g + 1, family) + cand.label_suffix;
      }
      st.found.push_back({label, g + 1, cand.tier, cand.expr, cand.identity, cand.image_form});
    }
    if (st.inconsistent) {
      status = LedgerStatus::Inconsistent;
      finished = true;
      if (!st.found.empty()) gens.push_back(st.found);
      return st;
    }
    if (st.found.empty()) {
      status = LedgerStatus::Stabilized;
      finished = true;
      return st;
    }
    for (const auto& c : st.found)
      if (!c.identity) sampler.push_back(reduce(c.expr));
    gens.push_back(st.found);
    if (steps >= opt.max_generations) {
      status = LedgerStatus::MaxGenerationsHit;
      finished = true;
    }
    return st;
  }
};

ConstraintAlgorithm::ConstraintAlgorithm(const Lagrangian& L, ConstraintOptions opt)
    : impl_(std::make_unique<Impl>(L, opt)) {}
ConstraintAlgorithm::~ConstraintAlgorithm() = default;

const std::vector<Constraint>& ConstraintAlgorithm::primary() const { return impl_->gens.front(); }
const VectorFieldAnsatz& ConstraintAlgorithm::ansatz() const { return impl_->X; }
ConstraintAlgorithm::Step ConstraintAlgorithm::tangency_step() { return impl_->step(); }
bool ConstraintAlgorithm::done() const { return impl_->finished; }
const NumericEnv& ConstraintAlgorithm::env() const { return impl_->env; }
std::vector<std::string> ConstraintAlgorithm::reduced_coordinates() const { return impl_->reduced; }
std::vector<std::vector<double>> ConstraintAlgorithm::feasible(int count) { return impl_->feasible(count); }

std::vector<std::vector<double>> ConstraintAlgorithm::feasible_full(int count) {
  auto& I = *impl_;
  auto pts = I.feasible(count);
  // the lower graph constraints fix jets above k-1 along the image
  std::vector<Expr> sys = I.sampler;
  for (int i = 0; i + 1 < I.k; ++i)
    for (int A = 0; A < I.n; ++A) sys.push_back(I.reduce(I.spec.p(i, A) - I.map.p_hat[i][A]));
  Impl::Projector project(sys, I.reduced, I.env);
  std::vector<Expr> top(I.map.p_hat[I.k - 1].begin(), I.map.p_hat[I.k - 1].end());
  Evaluator ev(top, I.reduced, I.env);
  for (auto& x : pts) {
    if (!project(x)) throw Error(ErrorKind::Evaluation, "feasible point does not lift to the graph");
    auto p = ev(x);
    x.insert(x.end(), p.begin(), p.end());
  }
  return pts;
}

ConstraintLedger ConstraintAlgorithm::ledger() const {
  const auto& I = *impl_;
  ConstraintLedger out;
  out.generations = I.gens;
  out.status = I.status;
  out.solved = I.solved;
  for (const auto& u : I.unknowns)
    if (!I.F_sub.count(u)) out.free_components.push_back(u);
  out.field = I.field();
  out.corank = I.corank;
  out.type1 = I.opt.force_type1;
  out.image_complete = I.image_complete;
  out.notes = I.notes;
  out.deferred_rows = I.deferred_rows;
  out.deferred_residual = I.deferred_residual;
  return out;
}

ConstraintLedger run_constraint_algorithm(const Lagrangian& L, const ConstraintOptions& opt) {
  ConstraintAlgorithm alg(L, opt);
  while (!alg.done()) alg.tangency_step();
  return alg.ledger();
}

}  // namespace ostrograd
