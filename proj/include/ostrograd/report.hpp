#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ostrograd/model.hpp"

namespace ostrograd {

using Json = nlohmann::ordered_json;

struct ReportOptions {
  std::uint64_t seed = 42;
  bool type1 = false;
  int max_generations = 8;
  bool infix = false;  // add infix strings next to the prefix forms
  std::string side = "lagrangian";  // simulate: lagrangian | hamiltonian | both
  double h = 1e-3, t0 = 0, t1 = 1;
  Json init;  // array in state order, or object keyed by coordinate name

  /// Keys as in the struct; unknown keys and bad values give Error(Argument).
  static ReportOptions from_json(const nlohmann::json& j);
};

const std::vector<std::string>& report_commands();

/// Deterministic report for one command. simulate carries its table under
/// "csv".
Json run_report(const ModelFile& model, std::string_view command, const ReportOptions& opt);

/// Expressions above this many nodes are reported by size only.
inline constexpr std::size_t kMaxReportedNodes = 20000;

}  // namespace ostrograd
