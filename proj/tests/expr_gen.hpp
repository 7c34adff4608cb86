#pragma once

// Random expression generator over the full grammar, shared by the unit and
// acceptance suites. Division and log/sqrt arguments are kept away from their
// domain boundaries so most sampled points evaluate cleanly.
#include <string>

#include "pwapass/expr.hpp"
#include "pwapass/rng.hpp"

namespace testgen {

inline pwapass::expr::Expression random_expression(pwapass::Rng& rng, int depth,
                                                   int nvars) {
  using pwapass::expr::Expression;
  const double r = rng.uniform01();
  std::string s;
  if (depth <= 0 || r < 0.25) {
    if (rng.bernoulli(0.5)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", rng.uniform(0.2, 2.5));
      s = buf;
    } else {
      s = "x" + std::to_string(1 + static_cast<int>(rng.next_u64() % nvars));
    }
    return Expression::parse(s);
  }
  const Expression a = random_expression(rng, depth - 1, nvars);
  const Expression b = random_expression(rng, depth - 1, nvars);
  switch (static_cast<int>(rng.next_u64() % 10)) {
    case 0: s = "(" + a.pretty_print() + ")+(" + b.pretty_print() + ")"; break;
    case 1: s = "(" + a.pretty_print() + ")-(" + b.pretty_print() + ")"; break;
    case 2: s = "(" + a.pretty_print() + ")*(" + b.pretty_print() + ")"; break;
    case 3: s = "(" + a.pretty_print() + ")/(2.0+(" + b.pretty_print() + ")^2)"; break;
    case 4: s = "sin(" + a.pretty_print() + ")"; break;
    case 5: s = "cos(" + a.pretty_print() + ")"; break;
    case 6: s = "exp((" + a.pretty_print() + ")/8)"; break;
    case 7: s = "log(1.5+(" + a.pretty_print() + ")^2)"; break;
    case 8: s = "sqrt(1.5+(" + a.pretty_print() + ")^2)"; break;
    default: s = "(" + a.pretty_print() + ")^3"; break;
  }
  return Expression::parse(s);
}

}  // namespace testgen
