#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "ostrograd/error.hpp"
#include "ostrograd/model.hpp"
#include "random_expr.hpp"

using namespace ostrograd;
using sym::Expr;

namespace {

std::string models(const std::string& f) { return std::string(OSTROGRAD_SOURCE_DIR) + "/models/" + f; }

ErrorKind kind_of(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

std::string message_of(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("beam model") {
  auto m = load_model(models("beam.model"));
  CHECK(m.name == "beam");
  CHECK(m.dofs == std::vector<std::string>{"y"});
  CHECK(m.order == 2);
  CHECK(m.base == "x");
  auto L = m.build();
  CHECK(L.n() == 1);
  CHECK(L.k() == 2);
  CHECK(sym::equivalent(L.L(), fixtures::beam().L()));
}

TEST_CASE("particle model expands the dot-product sugar") {
  auto m = load_model(models("particle.model"));
  CHECK(m.dofs.size() == 3);
  REQUIRE(m.params.size() == 1);
  CHECK(m.params[0].args == std::vector<std::string>{"t", "q0x", "q0y", "q0z"});
  auto L = m.build();
  CHECK(L.n() == 3);
  CHECK(L.k() == 2);
  CHECK(sym::equivalent(L.L(), fixtures::particle(3).L()));
}

TEST_CASE("definitions, constants and derivative notation") {
  auto m = parse_model(
      "model m; dof a, b; order 1; const c = 3/2; const s;\n"
      "param f(t) = c*t^2; param g(t, q0) ;\n"
      "lagrangian = f'(t)*q1a + g[1,0,2](t, a, b) + s*exp(-q1b) + 2.5e-1*a;");
  CHECK(m.constants[0].value->number() == sym::Number::rational(3, 2));
  CHECK_FALSE(m.constants[1].value);
  JetSpec s = m.spec();
  Expr t = s.t();
  Expr expected = sym::fn("f", {t}, {1}) * s.q(1, 0) + sym::fn("g", {t, s.q(0, 0), s.q(0, 1)}, {1, 0, 2}) +
                  Expr::symbol("s") * sym::exp(-s.q(1, 1)) + Expr::real(0.25) * s.q(0, 0);
  CHECK(m.lagrangian == expected);
  CHECK(m.params[0].definition->depends_on("c"));
}

TEST_CASE("printing round-trips") {
  for (const char* f : {"beam.model", "particle.model", "beam_simulate.model", "oscillator.model",
                        "homogeneous_beam.model"}) {
    auto m = load_model(models(f));
    auto text = print_model(m);
    auto again = parse_model(text);
    CHECK(again == m);
    CHECK(print_model(again) == text);
  }
  sym::Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    ModelFile m;
    m.name = "r";
    m.dofs = {"x", "y"};
    m.order = 2;
    m.params = {{"mu", {"t"}, std::nullopt}};
    Expr e = testing_util::random_expr(rng, {"t", "q0x", "q1y", "q2x"}, 4);
    m.lagrangian = sym::fn("mu", {Expr::symbol("t")}, {static_cast<int>(trial % 3)}) + e;
    auto again = parse_model(print_model(m));
    CHECK_MESSAGE(again == m, print_model(m));
  }
}

TEST_CASE("syntax errors carry positions") {
  CHECK(kind_of("model m; dof y; order 2; lagrangian = q1y + ;") == ErrorKind::Parse);
  CHECK(message_of("model m;\ndof y;\norder 2;\nlagrangian = q1y +* 2;") ==
        "line 4, column 19: expected an expression but found '*'");
  CHECK(kind_of("model m; dof y; order 2; lagrangian = q1y") == ErrorKind::Parse);
  CHECK(kind_of("model m; dof y; order 2; lagrangian = q1y $ 2;") == ErrorKind::Parse);
  CHECK(kind_of("dof y;") == ErrorKind::Parse);
  CHECK(kind_of("model m; dof y; order 2; frobnicate;") == ErrorKind::Parse);
}

TEST_CASE("semantic errors") {
  CHECK(message_of("model m; dof y; order 2; lagrangian = d(y,3);") ==
        "line 1, column 43: coordinate d(y,3) exceeds order 2");
  CHECK(kind_of("model m; dof y; order 2; lagrangian = q3y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 2; lagrangian = foo;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y, y; order 2; lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 2; const y = 1; lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 2; param mu(t); param mu(t); lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 2; lagrangian = y; lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 2;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 0; lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; lagrangian = y^q1y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; lagrangian = q1;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; param mu(t); lagrangian = mu(t, y);") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; param mu(t) = t + y; lagrangian = mu(t);") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; lagrangian = dot(q1, y);") == ErrorKind::Semantic);
  CHECK(kind_of("model m; param mu(t); dof y; order 1; lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; const q1 = 2; lagrangian = y;") == ErrorKind::Semantic);
  CHECK(kind_of("model m; dof y; order 1; lagrangian = y/0;") == ErrorKind::Semantic);
  CHECK_THROWS_AS(load_model(models("missing.model")), Error);
}
