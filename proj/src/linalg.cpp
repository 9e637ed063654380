#include "ostrograd/linalg.hpp"

#include <cmath>
#include <functional>

namespace ostrograd {

ZeroTest::ZeroTest(const JetSpec& spec, std::uint64_t seed, int probes) : seed_(seed), probes_(probes) {
  for (int p = 0; p < probes; ++p) {
    sym::Rng rng(seed * 7919 + static_cast<std::uint64_t>(p) + 1);
    envs_.push_back(random_env(spec, rng));
  }
}

double ZeroTest::value_of(const std::string& symbol, int probe) const {
  std::uint64_t h = std::hash<std::string>{}(symbol);
  sym::Rng rng(h ^ (seed_ * 0x9e3779b97f4a7c15ULL) ^ (static_cast<std::uint64_t>(probe) << 32));
  return rng.probe();
}

std::optional<double> ZeroTest::magnitude(const Expr& e) const {
  if (e.is_number()) return std::abs(e.number().to_double());
  auto vars = e.free_symbols();
  for (int p = 0; p < probes_; ++p) {
    std::vector<std::string> free;
    std::vector<double> x;
    for (const auto& v : vars) {
      if (envs_[p].constants.count(v)) continue;
      free.push_back(v);
      x.push_back(value_of(v, p));
    }
    Evaluator ev(std::span<const Expr>(&e, 1), free, envs_[p]);
    double out = 0;
    ev.run(x, std::span<double>(&out, 1));
    if (std::isfinite(out)) return std::abs(out);
  }
  return std::nullopt;
}

bool ZeroTest::is_zero(const Expr& e) const {
  if (e.is_number()) return e.number().is_zero();
  auto vars = e.free_symbols();
  bool evaluated = false;
  for (int p = 0; p < probes_; ++p) {
    std::vector<std::string> free;
    std::vector<double> x;
    for (const auto& v : vars) {
      if (envs_[p].constants.count(v)) continue;
      free.push_back(v);
      x.push_back(value_of(v, p));
    }
    Evaluator ev(std::span<const Expr>(&e, 1), free, envs_[p]);
    double out = 0, scale = 0;
    ev.run_scaled(x, std::span<double>(&out, 1), std::span<double>(&scale, 1));
    if (!std::isfinite(out) || !std::isfinite(scale)) continue;
    evaluated = true;
    if (std::abs(out) > 1e-9 * (1e-300 + scale)) return false;
  }
  return evaluated;
}

std::optional<std::vector<Expr>> solve_symbolic(ExprMatrix A, std::vector<Expr> b, const ZeroTest& z) {
  std::size_t n = A.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = n;
    for (std::size_t r = c; r < n; ++r) {
      if (z.is_zero(A[r][c])) continue;
      if (piv == n || A[r][c].size() < A[piv][c].size()) piv = r;
    }
    if (piv == n) return std::nullopt;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    Expr inv = sym::pow(A[c][c], -1);
    for (std::size_t j = c; j < n; ++j) A[c][j] = A[c][j] * inv;
    b[c] = b[c] * inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || A[r][c].is_zero()) continue;
      Expr f = A[r][c];
      for (std::size_t j = c; j < n; ++j) A[r][j] = A[r][j] - f * A[c][j];
      b[r] = b[r] - f * b[c];
    }
  }
  return b;
}

Elimination eliminate(ExprMatrix A, std::vector<Expr> b, const ZeroTest& z) {
  std::size_t m = A.size(), c = m ? A[0].size() : 0;
  Elimination out;
  out.pivot_row.assign(c, -1);
  std::vector<bool> used(m, false);
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t piv = m;
    for (std::size_t r = 0; r < m; ++r) {
      if (used[r] || A[r][j].is_zero() || z.is_zero(A[r][j])) continue;
      if (piv == m || A[r][j].size() < A[piv][j].size()) piv = r;
    }
    if (piv == m) continue;
    used[piv] = true;
    out.pivot_row[j] = static_cast<int>(piv);
    Expr inv = sym::pow(A[piv][j], -1);
    for (std::size_t q = 0; q < c; ++q)
      if (q != j) A[piv][q] = A[piv][q] * inv;
    A[piv][j] = Expr(1);
    b[piv] = b[piv] * inv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == piv || A[r][j].is_zero()) continue;
      Expr f = A[r][j];
      for (std::size_t q = 0; q < c; ++q)
        if (q != j && !A[piv][q].is_zero()) A[r][q] = A[r][q] - f * A[piv][q];
      A[r][j] = Expr(0);
      b[r] = b[r] - f * b[piv];
    }
  }
  for (std::size_t r = 0; r < m; ++r)
    if (!used[r]) out.residual_rows.push_back(static_cast<int>(r));
  out.A = std::move(A);
  out.b = std::move(b);
  return out;
}

Expr Elimination::solution(std::size_t j, const std::vector<Expr>& unknowns) const {
  int r = pivot_row[j];
  std::vector<Expr> terms{b[r]};
  for (std::size_t f = 0; f < pivot_row.size(); ++f)
    if (pivot_row[f] < 0 && !A[r][f].is_zero()) terms.push_back(-(A[r][f] * unknowns[f]));
  return sym::add(std::move(terms));
}

}  // namespace ostrograd
