#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ostrograd/jetspace.hpp"
#include "ostrograd/lagrangian.hpp"

namespace ostrograd {

/// A parsed `.model` file:
///
///   model beam;
///   dof y;
///   order 2;
///   base x;
///   param mu(x) = 1 + x^2/4;    # definition optional
///   const alpha = 1;            # or `const alpha;` to keep it symbolic
///   lagrangian = 1/2*mu(x)*d(y,2)^2 + rho(x)*y;
///
/// Expressions: + - * / ^, sqrt sin cos exp log, coordinates q<i><dof> or
/// d(dof, i), a bare dof name for q0<dof>, q<i> for the vector over all
/// dofs inside dot(u, v), norm2(u) and parameter argument lists, derivative
/// notation mu'(x) and V[0,1,0](t, q0x, q0y).
struct ModelFile {
  std::string name;
  std::vector<std::string> dofs;
  int order = 1;
  std::string base = "t";
  std::vector<ParamFunction> params;
  std::vector<Constant> constants;
  Expr lagrangian;

  JetSpec spec() const;
  Lagrangian build() const;
};

/// Error(Parse) for syntax, Error(Semantic) for rule violations; messages
/// start with "line L, column C:".
ModelFile parse_model(std::string_view text);
ModelFile load_model(const std::string& path);

/// Canonical text; parse_model(print_model(m)) == m.
std::string print_model(const ModelFile& m);

bool operator==(const ModelFile& a, const ModelFile& b);

}  // namespace ostrograd
