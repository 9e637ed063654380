#include "ostrograd/numeric.hpp"

#include <cmath>
#include <memory>
#include <mutex>

#include "ostrograd/error.hpp"

namespace ostrograd {

NumericEnv random_env(const JetSpec& spec, sym::Rng& rng) {
  NumericEnv env;
  for (const auto& c : spec.constants()) {
    if (c.value && c.value->is_number())
      env.constants[c.name] = c.value->number().to_double();
    else
      env.constants[c.name] = rng.probe();
  }
  std::map<std::string, std::size_t> arities;
  for (const auto& p : spec.params()) arities[p.name] = p.args.size();
  env.fns = sym::random_functions(arities, rng);
  return env;
}

namespace {

// Callback backed by a symbolic definition; derivatives are formed lazily.
class DefinedFunction {
 public:
  DefinedFunction(const ParamFunction& p, std::map<std::string, double> constants)
      : args_(p.args), base_(*p.definition), constants_(std::move(constants)) {}

  long double operator()(std::span<const long double> x, std::span<const int> orders) {
    std::vector<int> key(orders.begin(), orders.end());
    const Entry* e;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it == cache_.end()) {
        Expr d = base_;
        for (std::size_t j = 0; j < key.size(); ++j)
          for (int r = 0; r < key[j]; ++r) d = sym::diff(d, args_[j]);
        std::vector<std::string> vars = args_;
        for (const auto& [n, _] : constants_) vars.push_back(n);
        std::vector<sym::Name> names;
        for (const auto& v : vars) names.push_back(sym::intern(v));
        auto entry = std::make_unique<Entry>();
        entry->tape = sym::TapeL(std::span<const Expr>(&d, 1), names, {});
        it = cache_.emplace(key, std::move(entry)).first;
      }
      e = it->second.get();
    }
    std::vector<long double> in(x.begin(), x.end());
    for (const auto& [_, v] : constants_) in.push_back(v);
    long double out = 0;
    e->tape.run(in, std::span<long double>(&out, 1));
    return out;
  }

 private:
  struct Entry {
    sym::TapeL tape;
  };
  std::vector<std::string> args_;
  Expr base_;
  std::map<std::string, double> constants_;
  std::mutex mu_;
  std::map<std::vector<int>, std::unique_ptr<Entry>> cache_;
};

}  // namespace

NumericEnv defined_env(const JetSpec& spec) {
  NumericEnv env;
  for (const auto& c : spec.constants()) {
    if (!c.value || !c.value->is_number())
      throw Error(ErrorKind::Argument, "constant '" + c.name + "' needs a numeric value for simulation");
    env.constants[c.name] = c.value->number().to_double();
  }
  for (const auto& p : spec.params()) {
    if (!p.definition)
      throw Error(ErrorKind::Argument, "parameter function '" + p.name + "' needs a definition for simulation");
    auto f = std::make_shared<DefinedFunction>(p, env.constants);
    env.fns.set(p.name, [f](std::span<const long double> x, std::span<const int> o) { return (*f)(x, o); });
  }
  return env;
}

Evaluator::Evaluator(std::span<const Expr> outputs, const std::vector<std::string>& vars, const NumericEnv& env)
    : nvars_(vars.size()) {
  std::vector<sym::Name> names;
  for (const auto& v : vars) names.push_back(sym::intern(v));
  for (const auto& [n, v] : env.constants) {
    names.push_back(sym::intern(n));
    consts_.push_back(v);
  }
  tape_ = sym::Tape(outputs, names, env.fns);
}

void Evaluator::run(std::span<const double> x, std::span<double> out) const {
  if (x.size() != nvars_) throw Error(ErrorKind::Internal, "evaluator input size mismatch");
  std::vector<double> in(x.begin(), x.end());
  in.insert(in.end(), consts_.begin(), consts_.end());
  tape_.run(in, out);
}

std::vector<double> Evaluator::operator()(std::span<const double> x) const {
  std::vector<double> out(outputs());
  run(x, out);
  return out;
}

void Evaluator::run_scaled(std::span<const double> x, std::span<double> out, std::span<double> scale) const {
  std::vector<double> in(x.begin(), x.end());
  in.insert(in.end(), consts_.begin(), consts_.end());
  tape_.run_scaled(in, out, scale);
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

int numeric_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

}  // namespace ostrograd
