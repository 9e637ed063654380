// ostrograd: command-line front end over the C API.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ostrograd.h"

namespace {

using nlohmann::ordered_json;

struct Flags {
  std::string model;
  std::uint64_t seed = 42;
  bool type1 = false;
  int max_generations = 8;
  std::string side = "lagrangian";
  double h = 1e-3, t0 = 0, t1 = 1;
  std::string init;
  std::string out;
  bool pretty = false;
};

int exit_code(ostrograd_status s) { return s == OSTROGRAD_ERR_INTERNAL ? 2 : 1; }

int fail(ostrograd_status s) {
  std::cerr << "ostrograd: " << ostrograd_status_name(s) << ": " << ostrograd_last_error() << "\n";
  return exit_code(s);
}

int user_error(const std::string& msg) {
  std::cerr << "ostrograd: argument error: " << msg << "\n";
  return 1;
}

// --init accepts JSON text or @path to a JSON file
bool read_init(const std::string& arg, ordered_json& out, std::string& err) {
  std::string text = arg;
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) {
      err = "cannot open init file '" + arg.substr(1) + "'";
      return false;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    out = ordered_json::parse(text);
  } catch (const std::exception& e) {
    err = std::string("--init is not valid JSON: ") + e.what();
    return false;
  }
  return true;
}

int run(const std::string& command, const Flags& f, bool seed_given) {
  ordered_json opts;
  std::uint64_t seed = f.seed;
  if (!seed_given) {
    if (const char* env = std::getenv("OSTROGRAD_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        seed = std::stoull(env, &used);
        if (used != std::strlen(env)) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        return user_error(std::string("OSTROGRAD_SEED is not a non-negative integer: '") + env + "'");
      }
    }
  }
  opts["seed"] = seed;
  if (command == "constraints" || command == "check") {
    opts["type1"] = f.type1;
    opts["max_generations"] = f.max_generations;
  }
  if (command == "simulate") {
    opts["side"] = f.side;
    opts["h"] = f.h;
    opts["t0"] = f.t0;
    opts["t1"] = f.t1;
    if (!f.init.empty()) {
      std::string err;
      ordered_json init;
      if (!read_init(f.init, init, err)) return user_error(err);
      opts["init"] = init;
    }
  }
  if (f.pretty) opts["infix"] = true;

  ostrograd_model* raw = nullptr;
  if (auto s = ostrograd_model_load(f.model.c_str(), &raw); s != OSTROGRAD_OK) return fail(s);
  std::unique_ptr<ostrograd_model, decltype(&ostrograd_model_free)> model(raw, ostrograd_model_free);
  char* out = nullptr;
  std::string optext = opts.dump();
  if (auto s = ostrograd_run(model.get(), command.c_str(), optext.c_str(), &out); s != OSTROGRAD_OK) return fail(s);
  ordered_json report = ordered_json::parse(out);
  ostrograd_string_free(out);

  int code = 0;
  if (command == "check" && !report.value("passed", false)) code = 1;
  if (command == "simulate") {
    std::string csv = report["csv"].get<std::string>();
    report.erase("csv");
    for (const auto& t : report["trajectories"])
      if (t.value("truncated", false)) code = 1;
    if (f.out.empty()) {
      std::cout << csv;
      if (code) std::cerr << "ostrograd: integration stopped early: " << report["trajectories"][0]["error"] << "\n";
      return code;
    }
    std::ofstream file(f.out, std::ios::binary);
    if (!file) return user_error("cannot write '" + f.out + "'");
    file << csv;
  } else if (!f.out.empty()) {
    std::ofstream file(f.out, std::ios::binary);
    if (!file) return user_error("cannot write '" + f.out + "'");
    file << (f.pretty ? report.dump(2) : report.dump()) << "\n";
    return code;
  }
  std::cout << (f.pretty ? report.dump(2) : report.dump()) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Higher-order Lagrangian mechanics: Legendre maps, Euler-Lagrange and Cartan forms, "
               "constraint ledgers and trajectories"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ostrograd_version()));
  Flags f;
  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {
      {"analyze", "regularity of the Hessian in the top jet"},
      {"el", "Euler-Lagrange equations"},
      {"cartan1", "Poincare-Cartan 1-form"},
      {"cartan2", "Poincare-Cartan 2-form"},
      {"legendre", "Legendre-Ostrogradsky map"},
      {"hamiltonian", "Hamiltonian and Hamilton's equations (regular models)"},
      {"constraints", "constraint ledger of the unified formalism"},
      {"simulate", "integrate the dynamics with fixed-step RK4 and write CSV"},
      {"check", "run the invariant suites on the model"},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seeds;
  for (const auto& c : cmds) {
    auto* s = app.add_subcommand(c.name, c.help);
    s->set_help_flag("--help", "print this help");  // -h would clash with --h
    s->add_option("model", f.model, "model file")->required()->check(CLI::ExistingFile);
    seeds.push_back(s->add_option("--seed", f.seed, "probe seed (default: $OSTROGRAD_SEED, else 42)"));
    s->add_flag("--pretty", f.pretty, "indented JSON with infix expressions");
    s->add_option("--out", f.out, "write the report (CSV for simulate) to a file");
    std::string name = c.name;
    if (name == "constraints" || name == "check") {
      s->add_flag("--type1", f.type1, "impose the holonomic ansatz F_j = q_{j+1} below the top jet");
      s->add_option("--max-generations", f.max_generations, "stop after this many tangency steps")
          ->check(CLI::Range(1, 100));
    }
    if (name == "simulate") {
      s->add_option("--side", f.side, "lagrangian, hamiltonian or both")
          ->check(CLI::IsMember({"lagrangian", "hamiltonian", "both"}));
      s->add_option("--h", f.h, "step size")->check(CLI::PositiveNumber);
      s->add_option("--t0", f.t0, "start of the span");
      s->add_option("--t1", f.t1, "end of the span");
      s->add_option("--init", f.init, "initial state as JSON (array or {coord: value}) or @file");
    }
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return run(subs[i]->get_name(), f, seeds[i]->count() > 0);
  return 1;
}
