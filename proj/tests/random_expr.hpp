#pragma once

#include <string>
#include <vector>

#include "ostrograd/eval.hpp"
#include "ostrograd/expr.hpp"

namespace testing_util {

using namespace ostrograd::sym;

// Random smooth expression over the given symbols, with an opaque unary
// function `mu` of the first symbol thrown in occasionally.
inline Expr random_expr(Rng& rng, const std::vector<std::string>& syms, int depth) {
  auto leaf = [&]() -> Expr {
    double u = rng.uniform();
    if (u < 0.2) return Expr::rational(static_cast<long>(rng.bits() % 7) - 3, 1 + static_cast<long>(rng.bits() % 3));
    if (u < 0.3) return fn("mu", {Expr::symbol(syms[0])});
    return Expr::symbol(syms[rng.bits() % syms.size()]);
  };
  if (depth <= 0) return leaf();
  switch (rng.bits() % 8) {
    case 0:
    case 1:
      return random_expr(rng, syms, depth - 1) + random_expr(rng, syms, depth - 1);
    case 2:
    case 3:
      return random_expr(rng, syms, depth - 1) * random_expr(rng, syms, depth - 1);
    case 4:
      return pow(random_expr(rng, syms, depth - 1), static_cast<long>(rng.bits() % 3) + 1);
    case 5: {
      Expr s = random_expr(rng, syms, depth - 1);
      return sqrt(s * s + 1);
    }
    case 6:
      return sin(random_expr(rng, syms, depth - 1));
    default:
      return exp(random_expr(rng, syms, depth - 2));
  }
}

}  // namespace testing_util
