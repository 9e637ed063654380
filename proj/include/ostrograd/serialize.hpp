#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "ostrograd/expr.hpp"

namespace ostrograd::sym {

/// Parenthesized prefix form, e.g. (+ (* 2 q1y) (^ q2y 1/2)) or
/// (fn mu (1) x). Parsing rebuilds the exact tree (no normalization), so
/// to_prefix(parse_prefix(s)) == s for any s produced by to_prefix.
std::string to_prefix(const Expr& e);
Expr parse_prefix(std::string_view text);

/// JSON tree: {"kind": "add", "children": [...]}, numbers carry "value" as a
/// token string so that rationals and doubles survive exactly.
nlohmann::json to_json(const Expr& e);
Expr from_json(const nlohmann::json& j);

/// Human-readable infix form accepted by the model language.
std::string to_infix(const Expr& e);

}  // namespace ostrograd::sym
