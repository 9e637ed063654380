#include "ostrograd/dynamics.hpp"

#include <cmath>
#include <limits>

#include "ostrograd/error.hpp"

namespace ostrograd {

const char* to_string(Side s) { return s == Side::Lagrangian ? "lagrangian" : "hamiltonian"; }

namespace {

std::vector<Expr> semispray_outputs(const Lagrangian& L) {
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  auto el = euler_lagrange(L);
  sym::Bindings top;
  for (int A = 0; A < n; ++A) top[spec.q_name(2 * k, A)] = Expr(0);
  std::vector<Expr> outs;
  for (int A = 0; A < n; ++A)
    for (int B = 0; B < n; ++B) outs.push_back(sym::diff(el[A], spec.q_name(2 * k, B)));
  for (int A = 0; A < n; ++A) outs.push_back(sym::substitute(el[A], top));
  return outs;
}

std::vector<double> with_time(double t, std::span<const double> y) {
  std::vector<double> x;
  x.reserve(y.size() + 1);
  x.push_back(t);
  x.insert(x.end(), y.begin(), y.end());
  return x;
}

}  // namespace

Semispray::Semispray(const Lagrangian& L, const NumericEnv& env, double cond_limit)
    : n_(L.n()), k_(L.k()), dim_(2 * L.k() * L.n()), cond_limit_(cond_limit) {
  auto outs = semispray_outputs(L);
  ev_ = Evaluator(outs, L.spec().jet_coordinates(2 * k_ - 1), env);
}

std::vector<double> Semispray::acceleration(double t, std::span<const double> y, double* cond) const {
  if (static_cast<int>(y.size()) != dim_) throw Error(ErrorKind::Argument, "state has the wrong dimension");
  std::vector<double> v = ev_(with_time(t, y));
  if (!all_finite(v)) throw Error(ErrorKind::Evaluation, "semispray coefficients are not finite at t = " + std::to_string(t));
  // EL = M q_{2k} + r, so F = -M^{-1} r
  Eigen::MatrixXd M(n_, n_);
  Eigen::VectorXd r(n_);
  for (int A = 0; A < n_; ++A) {
    for (int B = 0; B < n_; ++B) M(A, B) = v[A * n_ + B];
    r(A) = v[n_ * n_ + A];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double c = s(n_ - 1) > 0 ? s(0) / s(n_ - 1) : std::numeric_limits<double>::infinity();
  if (cond) *cond = c;
  if (!(c <= cond_limit_)) throw Error(ErrorKind::Singular, "singular point - use constraint algorithm");
  Eigen::VectorXd F = svd.solve(-r);
  return {F.data(), F.data() + n_};
}

std::vector<double> Semispray::rhs(double t, std::span<const double> y) const {
  std::vector<double> out(y.begin() + n_, y.end());
  auto F = acceleration(t, y);
  out.insert(out.end(), F.begin(), F.end());
  return out;
}

Trajectory rk4(const OdeRhs& f, std::vector<double> y, const IntegratorConfig& cfg) {
  if (!(cfg.h > 0) || !std::isfinite(cfg.h)) throw Error(ErrorKind::Argument, "step h must be positive");
  if (!(cfg.t1 > cfg.t0)) throw Error(ErrorKind::Argument, "t1 must exceed t0");
  if (!all_finite(y)) throw Error(ErrorKind::Argument, "initial state is not finite");
  double span = cfg.t1 - cfg.t0;
  long steps = std::max(1L, static_cast<long>(std::ceil(span / cfg.h - 1e-9)));
  double h = span / steps;
  Trajectory tr;
  tr.h = h;
  tr.t.push_back(cfg.t0);
  tr.x.push_back(y);
  std::size_t d = y.size();
  std::vector<double> tmp(d);
  auto axpy = [&](const std::vector<double>& k, double a) {
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + a * k[i];
    return std::span<const double>(tmp);
  };
  try {
    for (long i = 0; i < steps; ++i) {
      double t = cfg.t0 + i * h;
      auto k1 = f(t, y);
      auto k2 = f(t + h / 2, axpy(k1, h / 2));
      auto k3 = f(t + h / 2, axpy(k2, h / 2));
      auto k4 = f(t + h, axpy(k3, h));
      for (std::size_t j = 0; j < d; ++j) y[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
      if (!all_finite(y)) throw Error(ErrorKind::Evaluation, "state became non-finite");
      tr.t.push_back(i + 1 == steps ? cfg.t1 : cfg.t0 + (i + 1) * h);
      tr.x.push_back(y);
    }
  } catch (const Error& e) {
    tr.truncated = true;
    tr.error = std::string(e.what()) + " (at t = " + std::to_string(tr.t.back()) + ")";
  }
  return tr;
}

Trajectory integrate_lagrangian(const Lagrangian& L, const NumericEnv& env, std::vector<double> init,
                                const IntegratorConfig& cfg) {
  Semispray X(L, env, cfg.cond_limit);
  if (static_cast<int>(init.size()) != X.dimension())
    throw Error(ErrorKind::Argument, "initial state needs " + std::to_string(X.dimension()) + " entries");
  X.acceleration(cfg.t0, init);  // a singular start is an error, not a truncation
  auto tr = rk4([&](double t, std::span<const double> y) { return X.rhs(t, y); }, std::move(init), cfg);
  tr.side = Side::Lagrangian;
  auto c = L.spec().jet_coordinates(2 * L.k() - 1);
  tr.coords.assign(c.begin() + 1, c.end());
  return tr;
}

Trajectory integrate_hamiltonian(const Hamiltonian& H, const NumericEnv& env, std::vector<double> init,
                                 const IntegratorConfig& cfg) {
  const auto& spec = H.lagrangian().spec();
  auto c = phase_coordinates(spec);
  if (init.size() + 1 != c.size())
    throw Error(ErrorKind::Argument, "initial state needs " + std::to_string(c.size() - 1) + " entries");
  auto ev = H.bind(env);
  auto tr = rk4([&](double t, std::span<const double> y) { return ev->rhs(with_time(t, y)); }, std::move(init), cfg);
  tr.side = Side::Hamiltonian;
  tr.coords.assign(c.begin() + 1, c.end());
  return tr;
}

Trajectory legendre_transport(const Lagrangian& L, const LegendreMap& map, const NumericEnv& env,
                              const Trajectory& traj) {
  if (traj.side != Side::Lagrangian) throw Error(ErrorKind::Argument, "transport needs a Lagrangian trajectory");
  int n = L.n(), k = L.k();
  std::vector<Expr> outs;
  for (int i = 0; i < k; ++i)
    for (int A = 0; A < n; ++A) outs.push_back(map.p_hat[i][A]);
  Evaluator ev(outs, L.spec().jet_coordinates(2 * k - 1), env);
  Trajectory out;
  out.side = Side::Hamiltonian;
  out.h = traj.h;
  auto c = phase_coordinates(L.spec());
  out.coords.assign(c.begin() + 1, c.end());
  out.truncated = traj.truncated;
  out.error = traj.error;
  for (std::size_t s = 0; s < traj.t.size(); ++s) {
    auto p = ev(with_time(traj.t[s], traj.x[s]));
    if (!all_finite(p)) throw Error(ErrorKind::Evaluation, "Legendre map is not finite at t = " + std::to_string(traj.t[s]));
    std::vector<double> y(traj.x[s].begin(), traj.x[s].begin() + k * n);
    y.insert(y.end(), p.begin(), p.end());
    out.t.push_back(traj.t[s]);
    out.x.push_back(std::move(y));
  }
  return out;
}

std::vector<double> central_weights(int d) {
  if (d < 0) throw Error(ErrorKind::Argument, "negative derivative order");
  int m = (d + 1) / 2, N = 2 * m + 1;
  // Fornberg's recursion at x0 = 0 over nodes -m..m
  std::vector<std::vector<double>> c(d + 1, std::vector<double>(N, 0.0));
  c[0][0] = 1;
  double c1 = 1;
  auto x = [&](int i) { return static_cast<double>(i - m); };
  for (int i = 1; i < N; ++i) {
    double c2 = 1;
    for (int j = 0; j < i; ++j) {
      double c3 = x(i) - x(j);
      c2 *= c3;
      for (int q = std::min(i, d); q >= 0; --q) {
        if (j == i - 1) {
          double prev = q ? c[q - 1][i - 1] : 0.0;
          c[q][i] = c1 / c2 * (q * prev - x(i - 1) * c[q][i - 1]);
        }
        c[q][j] = (x(i) * c[q][j] - (q ? q * c[q - 1][j] : 0.0)) / c3;
      }
    }
    c1 = c2;
  }
  return c[d];
}

namespace {

bool autonomous(const Lagrangian& L) { return !L.L().depends_on(L.spec().base()); }

std::vector<double> nan_vector(std::size_t n) { return std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()); }

double finite_max(const std::vector<double>& v) {
  double m = 0;
  for (double x : v)
    if (std::isfinite(x)) m = std::max(m, x);
  return m;
}

// Centered first derivative of the states, second order accurate.
std::vector<double> velocity(const Trajectory& tr, std::size_t s) {
  std::vector<double> v(tr.x[s].size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = (tr.x[s + 1][j] - tr.x[s - 1][j]) / (2 * tr.h);
  return v;
}

}  // namespace

Diagnostics residuals(const Lagrangian& L, const NumericEnv& env, const Trajectory& traj) {
  if (traj.side != Side::Lagrangian) throw Error(ErrorKind::Argument, "expected a Lagrangian trajectory");
  const auto& spec = L.spec();
  int n = L.n(), k = L.k();
  auto vars = spec.jet_coordinates(2 * k - 1);
  std::size_t S = traj.t.size();
  Diagnostics d;
  d.equation = nan_vector(S);
  d.omega = nan_vector(S);

  // a[i][A] = dL/dq_i^A along the samples, then sum (-1)^i D^i a_i
  std::vector<Expr> parts;
  for (int i = 0; i <= k; ++i)
    for (int A = 0; A < n; ++A) parts.push_back(L.partial(i, A));
  Evaluator pe(parts, vars, env);
  std::vector<std::vector<double>> a(S);
  for (std::size_t s = 0; s < S; ++s) a[s] = pe(with_time(traj.t[s], traj.x[s]));
  std::vector<std::vector<double>> w(k + 1);
  for (int i = 0; i <= k; ++i) w[i] = central_weights(i);
  std::size_t M = (k + 1) / 2;
  for (std::size_t s = M; s + M < S; ++s) {
    double worst = 0;
    for (int A = 0; A < n; ++A) {
      double el = 0;
      for (int i = 0; i <= k; ++i) {
        int m = static_cast<int>(w[i].size() / 2);
        double di = 0;
        for (int o = -m; o <= m; ++o) di += w[i][o + m] * a[s + o][i * n + A];
        el += (i % 2 ? -1.0 : 1.0) * di / std::pow(traj.h, i);
      }
      worst = std::max(worst, std::abs(el));
    }
    d.equation[s] = worst;
  }

  TwoForm Om = poincare_cartan_2form(L);
  std::vector<Expr> flat;
  for (auto& row : Om.M)
    for (auto& e : row) flat.push_back(e);
  Evaluator oe(flat, vars, env);
  std::size_t D = vars.size();
  for (std::size_t s = 1; s + 1 < S; ++s) {
    auto m = oe(with_time(traj.t[s], traj.x[s]));
    std::vector<double> V{1.0};
    auto v = velocity(traj, s);
    V.insert(V.end(), v.begin(), v.end());
    double worst = 0;
    for (std::size_t b = 0; b < D; ++b) {
      double acc = 0;
      for (std::size_t a2 = 0; a2 < D; ++a2) acc += V[a2] * m[a2 * D + b];
      worst = std::max(worst, std::abs(acc));
    }
    d.omega[s] = worst;
  }
  d.equation_max = finite_max(d.equation);
  d.omega_max = finite_max(d.omega);

  d.autonomous = autonomous(L);
  if (d.autonomous) {
    LegendreMap map = legendre_map(L);
    std::vector<Expr> terms{-L.L()};
    for (int i = 0; i < k; ++i)
      for (int A = 0; A < n; ++A) terms.push_back(map.p_hat[i][A] * spec.q(i + 1, A));
    Expr E = sym::add(std::move(terms));
    Evaluator ee(std::span<const Expr>(&E, 1), vars, env);
    double E0 = ee(with_time(traj.t[0], traj.x[0]))[0];
    for (std::size_t s = 1; s < S; ++s)
      d.energy_drift = std::max(d.energy_drift, std::abs(ee(with_time(traj.t[s], traj.x[s]))[0] - E0));
  }
  return d;
}

Diagnostics residuals(const Hamiltonian& H, const NumericEnv& env, const Trajectory& traj) {
  if (traj.side != Side::Hamiltonian) throw Error(ErrorKind::Argument, "expected a Hamiltonian trajectory");
  auto ev = H.bind(env);
  std::size_t S = traj.t.size();
  Diagnostics d;
  d.equation = nan_vector(S);
  for (std::size_t s = 1; s + 1 < S; ++s) {
    auto f = ev->rhs(with_time(traj.t[s], traj.x[s]));
    auto v = velocity(traj, s);
    double worst = 0;
    for (std::size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(v[j] - f[j]));
    d.equation[s] = worst;
  }
  d.equation_max = finite_max(d.equation);
  d.autonomous = autonomous(H.lagrangian());
  if (d.autonomous) {
    double H0 = ev->sample(with_time(traj.t[0], traj.x[0])).H;
    for (std::size_t s = 1; s < S; ++s)
      d.energy_drift = std::max(d.energy_drift, std::abs(ev->sample(with_time(traj.t[s], traj.x[s])).H - H0));
  }
  return d;
}

std::vector<double> kernel_residuals(const Lagrangian& L, const Semispray& X, const NumericEnv& env,
                                     const std::vector<std::vector<double>>& points) {
  TwoForm Om = poincare_cartan_2form(L);
  std::vector<Expr> flat;
  for (auto& row : Om.M)
    for (auto& e : row) flat.push_back(e);
  Evaluator oe(flat, Om.coords, env);
  std::size_t D = Om.coords.size();
  std::vector<double> out;
  for (const auto& p : points) {
    if (p.size() != D) throw Error(ErrorKind::Argument, "point has the wrong dimension");
    std::span<const double> y(p.data() + 1, p.size() - 1);
    std::vector<double> V{1.0};
    auto f = X.rhs(p[0], y);
    V.insert(V.end(), f.begin(), f.end());
    std::vector<std::vector<double>> M(D, std::vector<double>(D));
    auto m = oe(p);
    for (std::size_t a = 0; a < D; ++a)
      for (std::size_t b = 0; b < D; ++b) M[a][b] = m[a * D + b];
    double worst = 0;
    for (double c : contract(M, V)) worst = std::max(worst, std::abs(c));
    out.push_back(worst);
  }
  return out;
}

}  // namespace ostrograd
