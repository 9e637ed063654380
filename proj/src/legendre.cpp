#include "ostrograd/legendre.hpp"

#include <cmath>
#include <sstream>

#include "ostrograd/error.hpp"
#include "ostrograd/linalg.hpp"

namespace ostrograd {

LegendreMap legendre_map(const Lagrangian& L) {
  LegendreMap m;
  m.p_hat = jacobi_ostrogradsky_momenta(L);
  std::vector<Expr> terms{L.L()};
  for (int r = 1; r <= L.k(); ++r)
    for (int A = 0; A < L.n(); ++A) terms.push_back(-(L.spec().q(r, A) * m.p_hat[r - 1][A]));
  m.extended_p = sym::add(std::move(terms));
  return m;
}

ExprGrid momenta_by_recursion(const Lagrangian& L) {
  int k = L.k(), n = L.n();
  ExprGrid P(k, std::vector<Expr>(n));
  for (int A = 0; A < n; ++A) P[k - 1][A] = L.partial(k, A);
  for (int r = k - 1; r >= 1; --r)
    for (int A = 0; A < n; ++A)
      P[r - 1][A] = L.partial(r, A) - total_derivative(L.spec(), P[r][A], 2 * k - 1 - r);
  return P;
}

Expr unified_hamiltonian(const Lagrangian& L) {
  const auto& spec = L.spec();
  std::vector<Expr> terms{-L.L()};
  for (int i = 0; i < L.k(); ++i)
    for (int A = 0; A < L.n(); ++A) terms.push_back(spec.p(i, A) * spec.q(i + 1, A));
  return sym::add(std::move(terms));
}

std::vector<std::string> phase_coordinates(const JetSpec& spec) {
  auto v = spec.jet_coordinates(spec.k() - 1);
  for (const auto& p : spec.momentum_coordinates()) v.push_back(p);
  return v;
}

const Expr& Hamiltonian::expr() const {
  if (!symbolic()) throw Error(ErrorKind::Argument, "Hamiltonian has no closed form (numeric inversion)");
  return H_;
}

std::vector<double> HamiltonianEvaluator::rhs(std::span<const double> x) const {
  HamiltonianSample s = sample(x);
  std::vector<double> out = s.dH_dp;
  for (double v : s.dH_dq) out.push_back(-v);
  return out;
}

namespace {

std::string point_text(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ']';
  return os.str();
}

class SymbolicEvaluator : public HamiltonianEvaluator {
 public:
  SymbolicEvaluator(const JetSpec& spec, const Expr& H, const NumericEnv& env) : kn_(spec.k() * spec.n()) {
    std::vector<Expr> out{H, sym::diff(H, spec.base())};
    for (int i = 0; i < spec.k(); ++i)
      for (int A = 0; A < spec.n(); ++A) out.push_back(sym::diff(H, spec.q_name(i, A)));
    for (int i = 0; i < spec.k(); ++i)
      for (int A = 0; A < spec.n(); ++A) out.push_back(sym::diff(H, spec.p_name(i, A)));
    ev_ = Evaluator(out, phase_coordinates(spec), env);
  }

  HamiltonianSample sample(std::span<const double> x) const override {
    std::vector<double> v = ev_(x);
    if (!all_finite(v)) throw Error(ErrorKind::Evaluation, "Hamiltonian not finite at " + point_text(x));
    HamiltonianSample s;
    s.H = v[0];
    s.dH_dt = v[1];
    s.dH_dq.assign(v.begin() + 2, v.begin() + 2 + kn_);
    s.dH_dp.assign(v.begin() + 2 + kn_, v.end());
    return s;
  }

 private:
  std::size_t kn_;
  Evaluator ev_;
};

class NewtonEvaluator : public HamiltonianEvaluator {
 public:
  NewtonEvaluator(const Lagrangian& L, const NumericEnv& env) : n_(L.n()), k_(L.k()) {
    const auto& spec = L.spec();
    ExprMatrix W = hessian(L);
    std::vector<Expr> g;
    for (int A = 0; A < n_; ++A) g.push_back(L.partial(k_, A));
    for (auto& row : W)
      for (auto& e : row) g.push_back(e);
    auto vars = spec.jet_coordinates(k_);
    newton_ = Evaluator(g, vars, env);
    std::vector<Expr> f{L.L(), sym::diff(L.L(), spec.base())};
    for (int i = 0; i < k_; ++i)
      for (int A = 0; A < n_; ++A) f.push_back(L.partial(i, A));
    values_ = Evaluator(f, vars, env);
  }

  HamiltonianSample sample(std::span<const double> x) const override {
    int n = n_, k = k_;
    std::size_t kn = static_cast<std::size_t>(k * n);
    // jet point (t, q_0..q_{k-1}, q_k)
    std::vector<double> y(x.begin(), x.begin() + 1 + kn);
    std::vector<double> p(x.begin() + 1 + kn, x.end());
    y.resize(1 + kn + n, 0.0);
    Eigen::VectorXd pk(n);
    for (int A = 0; A < n; ++A) pk(A) = p[(k - 1) * n + A];
    auto residual = [&](std::vector<double>& yy, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
      std::vector<double> v = newton_(yy);
      if (!all_finite(v)) return false;
      r.resize(n);
      J.resize(n, n);
      for (int A = 0; A < n; ++A) r(A) = v[A] - pk(A);
      for (int A = 0; A < n; ++A)
        for (int B = 0; B < n; ++B) J(A, B) = v[n + A * n + B];
      return true;
    };
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    bool converged = false;
    double tol = 1e-12 * (1.0 + pk.lpNorm<Eigen::Infinity>());
    if (residual(y, r, J)) {
      for (int it = 0; it < 50; ++it) {
        if (r.lpNorm<Eigen::Infinity>() <= tol) {
          converged = true;
          break;
        }
        Eigen::VectorXd step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) break;
        double lambda = 1.0, r0 = r.norm();
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
          std::vector<double> trial = y;
          for (int A = 0; A < n; ++A) trial[1 + kn + A] += lambda * step(A);
          Eigen::VectorXd r2;
          Eigen::MatrixXd J2;
          if (residual(trial, r2, J2) && r2.norm() < r0 * (1 - 1e-4 * lambda)) {
            y.swap(trial);
            r = r2;
            J = J2;
            accepted = true;
            break;
          }
          lambda *= 0.5;
        }
        if (!accepted) {
          converged = r.lpNorm<Eigen::Infinity>() <= 1e3 * tol;
          break;
        }
      }
      if (!converged) converged = r.lpNorm<Eigen::Infinity>() <= tol;
    }
    if (!converged)
      throw Error(ErrorKind::Convergence, "Legendre inversion by Newton did not converge at " + point_text(x));
    std::vector<double> v = values_(y);
    HamiltonianSample s;
    double coupling = 0;
    for (int i = 0; i < k; ++i)
      for (int A = 0; A < n; ++A) coupling += p[i * n + A] * y[1 + (i + 1) * n + A];
    s.H = coupling - v[0];
    s.dH_dt = -v[1];
    s.dH_dq.resize(kn);
    s.dH_dp.resize(kn);
    for (int i = 0; i < k; ++i)
      for (int A = 0; A < n; ++A) {
        double dL = v[2 + i * n + A];
        s.dH_dq[i * n + A] = (i == 0 ? 0.0 : p[(i - 1) * n + A]) - dL;
        s.dH_dp[i * n + A] = y[1 + (i + 1) * n + A];
      }
    return s;
  }

 private:
  int n_, k_;
  Evaluator newton_, values_;
};

}  // namespace

std::shared_ptr<const HamiltonianEvaluator> Hamiltonian::bind(const NumericEnv& env) const {
  if (symbolic()) return std::make_shared<SymbolicEvaluator>(lag_->spec(), H_, env);
  return std::make_shared<NewtonEvaluator>(*lag_, env);
}

Hamiltonian hamiltonian(const Lagrangian& L, const LegendreMap& map, std::uint64_t seed) {
  RegularityReport reg = regularity(L, 64, seed);
  if (!reg.regular)
    throw Error(ErrorKind::Singular, "Legendre map not invertible (singular Hessian, corank " +
                                         std::to_string(reg.corank) + ") - use constraint algorithm");
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  Hamiltonian h;
  h.lag_ = std::make_shared<Lagrangian>(L);
  ExprMatrix W = hessian(L);
  ZeroTest z(spec, seed);
  bool affine = true;
  for (int A = 0; A < n && affine; ++A)
    for (int B = 0; B < n && affine; ++B)
      for (int C = 0; C < n && affine; ++C) affine = sym::diff(W[A][B], spec.q_name(k, C)).is_zero();
  if (affine) {
    sym::Bindings zero_qk;
    for (int A = 0; A < n; ++A) zero_qk[spec.q_name(k, A)] = Expr(0);
    std::vector<Expr> rhs;
    for (int A = 0; A < n; ++A) rhs.push_back(spec.p(k - 1, A) - sym::substitute(map.p_hat[k - 1][A], zero_qk));
    auto sol = solve_symbolic(W, rhs, z);
    if (sol) {
      sym::Bindings qk;
      for (int A = 0; A < n; ++A) qk[spec.q_name(k, A)] = (*sol)[A];
      std::vector<Expr> terms{-sym::substitute(L.L(), qk)};
      for (int i = 0; i < k; ++i)
        for (int A = 0; A < n; ++A) terms.push_back(spec.p(i, A) * (i + 1 < k ? spec.q(i + 1, A) : (*sol)[A]));
      h.prov_ = Hamiltonian::Provenance::Symbolic;
      h.H_ = sym::add(std::move(terms));
      h.qk_ = *sol;
      return h;
    }
  }
  h.prov_ = Hamiltonian::Provenance::Numeric;
  return h;
}

std::vector<Expr> hamilton_equations(const JetSpec& spec, const Expr& H) {
  std::vector<Expr> out;
  for (int i = 0; i < spec.k(); ++i)
    for (int A = 0; A < spec.n(); ++A) out.push_back(sym::diff(H, spec.p_name(i, A)));
  for (int i = 0; i < spec.k(); ++i)
    for (int A = 0; A < spec.n(); ++A) out.push_back(-sym::diff(H, spec.q_name(i, A)));
  return out;
}

std::vector<Expr> hamilton_equations(const Hamiltonian& H) { return hamilton_equations(H.lagrangian().spec(), H.expr()); }

LegendreJacobian::LegendreJacobian(const Lagrangian& L, const LegendreMap& map, const NumericEnv& env) {
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  auto vars = spec.jet_coordinates(2 * k - 1);
  std::vector<Expr> comp{spec.t()};
  for (int i = 0; i < k; ++i)
    for (int A = 0; A < n; ++A) comp.push_back(spec.q(i, A));
  for (int i = 0; i < k; ++i)
    for (int A = 0; A < n; ++A) comp.push_back(map.p_hat[i][A]);
  comp.push_back(map.extended_p);
  std::vector<Expr> outs;
  for (const auto& c : comp)
    for (const auto& v : vars) outs.push_back(sym::diff(c, v));
  rows_ = comp.size();
  cols_ = vars.size();
  ev_ = Evaluator(outs, vars, env);
}

LegendreRanks LegendreJacobian::ranks(std::span<const double> point, double rel_tol) const {
  std::vector<double> v(rows_ * cols_), s(rows_ * cols_);
  ev_.run_scaled(point, v, s);
  if (!all_finite(v)) throw Error(ErrorKind::Evaluation, "Legendre Jacobian is not finite at the point");
  Eigen::MatrixXd J(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) {
      double x = v[r * cols_ + c];
      J(r, c) = std::abs(x) <= 1e-10 * s[r * cols_ + c] ? 0.0 : x;
    }
  return {numeric_rank(J.topRows(rows_ - 1), rel_tol), numeric_rank(J, rel_tol)};
}

}  // namespace ostrograd
