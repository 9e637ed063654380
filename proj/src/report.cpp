#include "ostrograd/report.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "ostrograd/constraints.hpp"
#include "ostrograd/dynamics.hpp"
#include "ostrograd/error.hpp"
#include "ostrograd/legendre.hpp"
#include "ostrograd/serialize.hpp"

namespace ostrograd {

namespace {

constexpr const char* kSchema = "ostrograd/1";

Json expr_json(const Expr& e, const ReportOptions& opt) {
  std::size_t size = e.size();
  if (size > kMaxReportedNodes) return Json{{"omitted", true}, {"nodes", size}};
  if (!opt.infix) return sym::to_prefix(e);
  return Json{{"prefix", sym::to_prefix(e)}, {"infix", sym::to_infix(e)}};
}

Json header(const ModelFile& m, std::string_view command) {
  Json j;
  j["schema"] = kSchema;
  j["command"] = command;
  j["model"] = m.name;
  j["dofs"] = m.dofs;
  j["order"] = m.order;
  j["base"] = m.base;
  return j;
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- analysis

Json analyze(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "analyze");
  auto reg = regularity(L, 64, opt.seed);
  j["regular"] = reg.regular;
  j["classification"] = reg.regular ? "regular" : "singular";
  j["corank"] = reg.corank;
  j["probes"] = reg.probes;
  j["singular_probes"] = reg.singular_probes;
  j["lagrangian"] = expr_json(L.L(), opt);
  Json W = Json::array();
  for (const auto& row : hessian(L)) {
    Json r = Json::array();
    for (const auto& e : row) r.push_back(expr_json(e, opt));
    W.push_back(r);
  }
  j["hessian"] = W;
  return j;
}

Json el(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "el");
  j["equation_order"] = 2 * L.k();
  Json eqs = Json::array();
  auto E = euler_lagrange(L);
  for (int A = 0; A < L.n(); ++A) eqs.push_back({{"dof", L.spec().dofs()[A]}, {"expr", expr_json(E[A], opt)}});
  j["equations"] = eqs;
  return j;
}

Json cartan1(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "cartan1");
  auto th = poincare_cartan_1form(L);
  Json c = Json::array();
  for (std::size_t a = 0; a < th.coords.size(); ++a)
    if (!th.coeff[a].is_zero()) c.push_back({{"coord", th.coords[a]}, {"expr", expr_json(th.coeff[a], opt)}});
  j["coordinates"] = th.coords;
  j["coefficients"] = c;
  return j;
}

Json cartan2(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "cartan2");
  auto om = poincare_cartan_2form(L);
  Json c = Json::array();
  for (std::size_t a = 0; a < om.coords.size(); ++a)
    for (std::size_t b = a + 1; b < om.coords.size(); ++b)
      if (!om.M[a][b].is_zero())
        c.push_back({{"row", om.coords[a]}, {"col", om.coords[b]}, {"expr", expr_json(om.M[a][b], opt)}});
  j["coordinates"] = om.coords;
  j["convention"] = "Omega = sum_{row<col} M[row][col] d(row) ^ d(col)";
  j["entries"] = c;
  return j;
}

Json legendre(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "legendre");
  auto map = legendre_map(L);
  j["regular"] = regularity(L, 64, opt.seed).regular;
  Json p = Json::array();
  for (int i = 0; i < L.k(); ++i)
    for (int A = 0; A < L.n(); ++A)
      p.push_back({{"name", L.spec().p_name(i, A)}, {"expr", expr_json(map.p_hat[i][A], opt)}});
  j["p_hat"] = p;
  j["p_extended"] = expr_json(map.extended_p, opt);
  return j;
}

Json hamiltonian_report(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "hamiltonian");
  auto H = hamiltonian(L, legendre_map(L), opt.seed);
  j["provenance"] = H.symbolic() ? "symbolic" : "numeric";
  auto coords = phase_coordinates(L.spec());
  if (H.symbolic()) {
    j["H"] = expr_json(H.expr(), opt);
    Json qk = Json::array();
    for (int A = 0; A < L.n(); ++A)
      qk.push_back({{"name", L.spec().q_name(L.k(), A)}, {"expr", expr_json(H.qk_solution()[A], opt)}});
    j["qk_solution"] = qk;
    Json eqs = Json::array();
    auto rhs = hamilton_equations(H);
    for (std::size_t i = 0; i < rhs.size(); ++i) eqs.push_back({{"coord", coords[i + 1]}, {"rate", expr_json(rhs[i], opt)}});
    j["equations"] = eqs;
  } else {
    j["note"] = "the Legendre map is inverted numerically; H is available pointwise only";
  }
  j["coordinates"] = coords;
  return j;
}

Json constraint_json(const Constraint& c, const ReportOptions& opt) {
  return {{"label", c.label}, {"generation", c.generation}, {"tier", to_string(c.tier)},
          {"identity", c.identity}, {"image_form", c.image_form}, {"expr", expr_json(c.expr, opt)}};
}

Json constraints(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "constraints");
  ConstraintOptions co{opt.max_generations, opt.type1, opt.seed};
  auto led = run_constraint_algorithm(L, co);
  j["status"] = to_string(led.status);
  j["type1"] = led.type1;
  j["corank"] = led.corank;
  j["image_complete"] = led.image_complete;
  Json gens = Json::array();
  for (const auto& g : led.generations) {
    Json arr = Json::array();
    for (const auto& c : g) arr.push_back(constraint_json(c, opt));
    gens.push_back(arr);
  }
  j["generations"] = gens;
  j["constraint_count"] = led.count();
  Json solved = Json::array();
  for (const auto& s : led.solved) solved.push_back({{"name", s.name}, {"expr", expr_json(s.value, opt)}});
  j["solved_components"] = solved;
  j["free_components"] = led.free_components;
  auto type = classify_semispray(L.spec(), led.field, opt.seed);
  j["semispray_type"] = type ? Json(*type) : Json(nullptr);
  j["deferred"] = {{"rows", led.deferred_rows}, {"residual", led.deferred_residual}};
  j["notes"] = led.notes;
  return j;
}

// ---------------------------------------------------------------- simulate

std::vector<double> initial_state(const Json& init, const std::vector<std::string>& coords) {
  std::vector<double> y(coords.size(), 0.0);
  if (init.is_null()) return y;
  if (init.is_array()) {
    if (init.size() != coords.size())
      throw Error(ErrorKind::Argument, "init needs " + std::to_string(coords.size()) + " entries");
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!init[i].is_number()) throw Error(ErrorKind::Argument, "init entries must be numbers");
      y[i] = init[i].get<double>();
    }
    return y;
  }
  if (init.is_object()) {
    for (const auto& [key, v] : init.items()) {
      auto it = std::find(coords.begin(), coords.end(), key);
      if (it == coords.end()) throw Error(ErrorKind::Argument, "init names unknown coordinate '" + key + "'");
      if (!v.is_number()) throw Error(ErrorKind::Argument, "init value for '" + key + "' must be a number");
      y[it - coords.begin()] = v.get<double>();
    }
    return y;
  }
  throw Error(ErrorKind::Argument, "init must be an array or an object");
}

Json diagnostics_json(const Diagnostics& d, bool lagrangian) {
  Json j;
  j[lagrangian ? "el_residual_max" : "hamilton_residual_max"] = d.equation_max;
  if (lagrangian) j["omega_residual_max"] = d.omega_max;
  j["autonomous"] = d.autonomous;
  j["energy_drift"] = d.autonomous ? Json(d.energy_drift) : Json(nullptr);
  return j;
}

Json traj_json(const Trajectory& tr) {
  return {{"side", to_string(tr.side)}, {"h", tr.h}, {"samples", tr.t.size()}, {"truncated", tr.truncated},
          {"error", tr.truncated ? Json(tr.error) : Json(nullptr)}, {"final", tr.x.back()}};
}

std::vector<double> energies(const Lagrangian& L, const NumericEnv& env, const Trajectory& tr) {
  const auto& spec = L.spec();
  auto map = legendre_map(L);
  std::vector<Expr> terms{-L.L()};
  for (int i = 0; i < L.k(); ++i)
    for (int A = 0; A < L.n(); ++A) terms.push_back(map.p_hat[i][A] * spec.q(i + 1, A));
  Expr E = sym::add(std::move(terms));
  Evaluator ev(std::span<const Expr>(&E, 1), spec.jet_coordinates(2 * L.k() - 1), env);
  std::vector<double> out;
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    std::vector<double> x{tr.t[s]};
    x.insert(x.end(), tr.x[s].begin(), tr.x[s].end());
    out.push_back(ev(x)[0]);
  }
  return out;
}

std::vector<double> energies(const Hamiltonian& H, const NumericEnv& env, const Trajectory& tr) {
  auto ev = H.bind(env);
  std::vector<double> out;
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    std::vector<double> x{tr.t[s]};
    x.insert(x.end(), tr.x[s].begin(), tr.x[s].end());
    out.push_back(ev->sample(x).H);
  }
  return out;
}

Json simulate(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "simulate");
  if (opt.side != "lagrangian" && opt.side != "hamiltonian" && opt.side != "both")
    throw Error(ErrorKind::Argument, "side must be lagrangian, hamiltonian or both");
  NumericEnv env = defined_env(L.spec());
  IntegratorConfig cfg{opt.h, opt.t0, opt.t1};
  std::vector<std::string> cols{L.spec().base()};
  std::vector<std::vector<double>> table;  // columns after t, per sample
  Trajectory base;
  auto append = [&](const std::vector<std::string>& names, const std::string& prefix,
                    const std::vector<std::vector<double>>& rows) {
    for (const auto& n : names) cols.push_back(prefix + n);
    if (table.empty()) table.resize(rows.size());
    for (std::size_t s = 0; s < rows.size() && s < table.size(); ++s)
      table[s].insert(table[s].end(), rows[s].begin(), rows[s].end());
  };
  auto column = [](const std::vector<double>& v) {
    std::vector<std::vector<double>> r;
    for (double x : v) r.push_back({x});
    return r;
  };
  Json sides = Json::array();
  if (opt.side == "hamiltonian") {
    auto H = hamiltonian(L, legendre_map(L), opt.seed);
    auto pc = phase_coordinates(L.spec());
    std::vector<std::string> names(pc.begin() + 1, pc.end());
    auto tr = integrate_hamiltonian(H, env, initial_state(opt.init, names), cfg);
    auto d = residuals(H, env, tr);
    base = tr;
    append(names, "", tr.x);
    append({"hamilton_residual"}, "", column(d.equation));
    append({"energy"}, "", column(energies(H, env, tr)));
    Json s = traj_json(tr);
    s["diagnostics"] = diagnostics_json(d, false);
    sides.push_back(s);
  } else {
    auto jc = L.spec().jet_coordinates(2 * L.k() - 1);
    std::vector<std::string> names(jc.begin() + 1, jc.end());
    auto tr = integrate_lagrangian(L, env, initial_state(opt.init, names), cfg);
    auto d = residuals(L, env, tr);
    base = tr;
    append(names, "", tr.x);
    append({"el_residual", "omega_residual"}, "", [&] {
      std::vector<std::vector<double>> r;
      for (std::size_t s = 0; s < tr.t.size(); ++s) r.push_back({d.equation[s], d.omega[s]});
      return r;
    }());
    append({"energy"}, "", column(energies(L, env, tr)));
    Json s = traj_json(tr);
    s["diagnostics"] = diagnostics_json(d, true);
    sides.push_back(s);
    if (opt.side == "both") {
      auto map = legendre_map(L);
      auto H = hamiltonian(L, map, opt.seed);
      auto fl = legendre_transport(L, map, env, tr);
      auto pc = phase_coordinates(L.spec());
      std::vector<std::string> hn(pc.begin() + 1, pc.end());
      auto th = integrate_hamiltonian(H, env, fl.x[0], cfg);
      auto dh = residuals(H, env, th);
      append(hn, "fl_", fl.x);
      append(hn, "h_", th.x);
      std::vector<double> gap(tr.t.size(), std::nan(""));
      double worst = 0;
      for (std::size_t s = 0; s < th.t.size() && s < fl.t.size(); ++s) {
        double g = 0;
        for (std::size_t c = 0; c < hn.size(); ++c) g = std::max(g, std::abs(fl.x[s][c] - th.x[s][c]));
        gap[s] = g;
        worst = std::max(worst, g);
      }
      append({"flow_gap"}, "", column(gap));
      Json hs = traj_json(th);
      hs["diagnostics"] = diagnostics_json(dh, false);
      sides.push_back(hs);
      j["flow_gap_max"] = worst;
    }
  }
  j["side"] = opt.side;
  j["trajectories"] = sides;
  j["columns"] = cols;
  std::ostringstream csv;
  for (std::size_t c = 0; c < cols.size(); ++c) csv << (c ? "," : "") << cols[c];
  csv << '\n';
  for (std::size_t s = 0; s < base.t.size(); ++s) {
    csv << num(base.t[s]);
    for (std::size_t c = 0; c < table[s].size(); ++c) csv << ',' << (std::isnan(table[s][c]) ? "" : num(table[s][c]));
    for (std::size_t c = table[s].size() + 1; c < cols.size(); ++c) csv << ',';
    csv << '\n';
  }
  j["csv"] = csv.str();
  return j;
}

// ---------------------------------------------------------------- check

struct CheckOutcome {
  bool passed;
  Json detail;
};

std::vector<std::vector<double>> probe_points(std::size_t dim, int count, sym::Rng& rng) {
  std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
  for (auto& p : pts)
    for (auto& c : p) c = rng.probe();
  return pts;
}

Json check(const ModelFile& m, const Lagrangian& L, const ReportOptions& opt) {
  Json j = header(m, "check");
  const auto& spec = L.spec();
  sym::Rng rng(opt.seed * 0x9e3779b97f4a7c15ULL + 1);
  NumericEnv env = random_env(spec, rng);
  auto vars = spec.jet_coordinates(2 * L.k() - 1);
  auto map = legendre_map(L);
  auto reg = regularity(L, 64, opt.seed);
  Json results = Json::array();
  bool all = true;
  auto record = [&](const std::string& name, const std::function<CheckOutcome()>& f) {
    Json r{{"name", name}};
    try {
      auto o = f();
      r["passed"] = o.passed;
      r["detail"] = o.detail;
      all = all && o.passed;
    } catch (const Error& e) {
      r["passed"] = false;
      r["detail"] = std::string("error: ") + e.what();
      all = false;
    }
    results.push_back(r);
  };

  record("model-roundtrip", [&] {
    bool ok = parse_model(print_model(m)) == m;
    return CheckOutcome{ok, ok ? "printed model re-parses identically" : "printed model differs after re-parsing"};
  });
  record("momentum-recursion", [&] {
    auto rec = momenta_by_recursion(L);
    bool ok = true;
    for (int i = 0; i < L.k(); ++i)
      for (int A = 0; A < L.n(); ++A) ok = ok && sym::equivalent(rec[i][A], map.p_hat[i][A], 32, opt.seed);
    return CheckOutcome{ok, "p^_{r-1} = dL/dq_r - d_T p^_r against the sum formula"};
  });
  record("legendre-rank", [&] {
    LegendreJacobian J(L, map, env);
    bool ok = true;
    Json seen = Json::array();
    std::set<std::pair<int, int>> pairs;
    for (const auto& p : probe_points(vars.size(), 16, rng)) {
      auto r = J.ranks(p);
      ok = ok && r.fl == r.extended;
      pairs.insert({r.fl, r.extended});
    }
    for (auto [a, b] : pairs) seen.push_back({{"fl", a}, {"extended", b}});
    return CheckOutcome{ok, seen};
  });
  if (reg.regular) {
    record("cartan-kernel", [&] {
      Semispray X(L, env);
      double worst = 0;
      for (double r : kernel_residuals(L, X, env, probe_points(vars.size(), 16, rng))) worst = std::max(worst, r);
      return CheckOutcome{worst < 1e-8, Json{{"max_contraction", worst}, {"tolerance", 1e-8}}};
    });
    record("hamilton-pushforward", [&] {
      // FL_*(X_L) = X_H o FL
      Semispray X(L, env);
      auto H = hamiltonian(L, map, opt.seed);
      auto ev = H.bind(env);
      int n = L.n(), k = L.k();
      std::vector<Expr> grads;
      for (int i = 0; i < k; ++i)
        for (int A = 0; A < n; ++A) {
          grads.push_back(map.p_hat[i][A]);
          for (const auto& v : vars) grads.push_back(sym::diff(map.p_hat[i][A], v));
        }
      Evaluator ge(grads, vars, env);
      double worst = 0;
      for (const auto& p : probe_points(vars.size(), 16, rng)) {
        std::span<const double> y(p.data() + 1, p.size() - 1);
        auto f = X.rhs(p[0], y);
        std::vector<double> V{1.0};
        V.insert(V.end(), f.begin(), f.end());
        auto g = ge(p);
        std::vector<double> phase{p[0]};
        phase.insert(phase.end(), p.begin() + 1, p.begin() + 1 + k * n);
        std::vector<double> push(f.begin(), f.begin() + k * n);
        std::size_t stride = vars.size() + 1;
        for (int c = 0; c < k * n; ++c) {
          phase.push_back(g[c * stride]);
          double acc = 0;
          for (std::size_t v = 0; v < vars.size(); ++v) acc += g[c * stride + 1 + v] * V[v];
          push.push_back(acc);
        }
        auto h = ev->rhs(phase);
        for (std::size_t c = 0; c < h.size(); ++c)
          worst = std::max(worst, std::abs(h[c] - push[c]) / std::max(1.0, std::abs(h[c])));
      }
      return CheckOutcome{worst < 1e-8, Json{{"max_relative_gap", worst}, {"tolerance", 1e-8}}};
    });
  }
  ConstraintAlgorithm alg(L, {opt.max_generations, opt.type1, opt.seed});
  record("constraints", [&] {
    while (!alg.done()) alg.tangency_step();
    auto led = alg.ledger();
    bool ok = led.status != LedgerStatus::Inconsistent;
    Json d{{"status", to_string(led.status)}, {"generations", led.generations.size()}, {"constraints", led.count()}};
    if (reg.regular) {
      bool unique = led.free_components.empty() && classify_semispray(spec, led.field, opt.seed) == 1;
      d["unique_type1_semispray"] = unique;
      ok = ok && unique && led.generations.size() == 1;
    }
    return CheckOutcome{ok, d};
  });
  record("feasible-points", [&] {
    while (!alg.done()) alg.tangency_step();
    auto led = alg.ledger();
    std::vector<Expr> active;
    for (const auto& g : led.generations)
      for (const auto& c : g)
        if (!c.identity) active.push_back(c.expr);
    Evaluator ev(active, unified_coordinates(spec), alg.env());
    double worst = 0;
    for (const auto& x : alg.feasible_full(8))
      for (double v : ev(x)) worst = std::max(worst, std::abs(v));
    return CheckOutcome{worst <= 1e-10, Json{{"max_violation", worst}, {"tolerance", 1e-10}}};
  });
  j["regular"] = reg.regular;
  j["checks"] = results;
  j["passed"] = all;
  return j;
}

}  // namespace

ReportOptions ReportOptions::from_json(const nlohmann::json& j) {
  ReportOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw Error(ErrorKind::Argument, "options must be a JSON object");
  auto number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorKind::Argument, "option '" + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(ErrorKind::Argument, "option '" + key + "' must be finite");
    return d;
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw Error(ErrorKind::Argument, "option 'seed' must be a non-negative integer");
      o.seed = v.get<std::uint64_t>();
    } else if (key == "type1" || key == "infix") {
      if (!v.is_boolean()) throw Error(ErrorKind::Argument, "option '" + key + "' must be true or false");
      (key == "type1" ? o.type1 : o.infix) = v.get<bool>();
    } else if (key == "max_generations") {
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 100)
        throw Error(ErrorKind::Argument, "option 'max_generations' must be an integer in [1, 100]");
      o.max_generations = v.get<int>();
    } else if (key == "side") {
      if (!v.is_string()) throw Error(ErrorKind::Argument, "option 'side' must be a string");
      o.side = v.get<std::string>();
      if (o.side != "lagrangian" && o.side != "hamiltonian" && o.side != "both")
        throw Error(ErrorKind::Argument, "side must be lagrangian, hamiltonian or both");
    } else if (key == "h") {
      o.h = number(v, key);
      if (!(o.h > 0)) throw Error(ErrorKind::Argument, "option 'h' must be positive");
    } else if (key == "t0") {
      o.t0 = number(v, key);
    } else if (key == "t1") {
      o.t1 = number(v, key);
    } else if (key == "init") {
      o.init = v;
    } else {
      throw Error(ErrorKind::Argument, "unknown option '" + key + "'");
    }
  }
  return o;
}

const std::vector<std::string>& report_commands() {
  static const std::vector<std::string> c{"analyze", "el", "cartan1", "cartan2", "legendre",
                                          "hamiltonian", "constraints", "simulate", "check"};
  return c;
}

Json run_report(const ModelFile& model, std::string_view command, const ReportOptions& opt) {
  Lagrangian L = model.build();
  if (command == "analyze") return analyze(model, L, opt);
  if (command == "el") return el(model, L, opt);
  if (command == "cartan1") return cartan1(model, L, opt);
  if (command == "cartan2") return cartan2(model, L, opt);
  if (command == "legendre") return legendre(model, L, opt);
  if (command == "hamiltonian") return hamiltonian_report(model, L, opt);
  if (command == "constraints") return constraints(model, L, opt);
  if (command == "simulate") return simulate(model, L, opt);
  if (command == "check") return check(model, L, opt);
  throw Error(ErrorKind::Argument, "unknown command '" + std::string(command) + "'");
}

}  // namespace ostrograd
