#include <doctest.h>

#include <cmath>

#include "pwapass/expr.hpp"
#include "pwapass/rng.hpp"

using pwapass::Rng;
using pwapass::expr::EvalError;
using pwapass::expr::Expression;
using pwapass::expr::Kind;
using pwapass::expr::ParseError;

TEST_CASE("parse builds the expected trees") {
  const Expression e = Expression::parse("4*sin(x1)+x2");
  REQUIRE(e.root());
  CHECK(e.root()->kind == Kind::kAdd);
  CHECK(e.root()->a->kind == Kind::kMul);
  CHECK(e.root()->a->b->kind == Kind::kSin);
  CHECK(e.root()->b->kind == Kind::kVariable);

  const Expression p = Expression::parse("x1^2 - 3");
  CHECK(p.root()->kind == Kind::kSub);
  CHECK(p.root()->a->kind == Kind::kPow);
  CHECK(p.root()->a->exponent == 2);
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    Expression::parse("sin(");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(Expression::parse("foo(x1)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("x0 + 1"), ParseError);
  CHECK_THROWS_AS(Expression::parse("y1"), ParseError);
  CHECK_THROWS_AS(Expression::parse("1 + "), ParseError);
}

TEST_CASE("evaluate") {
  CHECK(Expression::parse("4*sin(x1)+x2").evaluate({0, 1, 0}) == doctest::Approx(1.0));
  CHECK(Expression::parse("x1+x3").evaluate({2, 0, 5}) == doctest::Approx(7.0));
  // 4*sin(0.31), frozen from a high-precision evaluation
  CHECK(Expression::parse("4*sin(x1)").evaluate({0.31}) ==
        doctest::Approx(1.2202345457737740).epsilon(1e-14));
  CHECK_THROWS_AS(Expression::parse("log(x1)").evaluate({-1.0}), EvalError);
  CHECK_THROWS_AS(Expression::parse("1/x1").evaluate({0.0}), EvalError);
  // the error names the offending subexpression
  try {
    Expression::parse("1 + log(x1-x1)").evaluate({3.0});
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.subexpression().find("log") != std::string::npos);
  }
}

TEST_CASE("differentiate textbook cases") {
  const Expression d1 = Expression::parse("4*sin(x1)").differentiate(0).fold();
  CHECK(d1.structurally_equal(Expression::parse("4*cos(x1)")));

  const Expression d2 = Expression::parse("4*sin(x1)+x2").differentiate(1).fold();
  CHECK(d2.structurally_equal(Expression::parse("1")));

  const Expression d3 = Expression::parse("x1^2").differentiate(0).fold();
  CHECK(d3.evaluate({0.3}) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("pretty print round trip") {
  for (const char* src : {"4*sin(x1)+x2", "x1^2 - 3", "-(x1*x2)/(1+x3^2)",
                          "sqrt(exp(x1))*tan(x2) - log(2.5)"}) {
    const Expression e = Expression::parse(src);
    const Expression back = Expression::parse(e.pretty_print());
    CHECK(back.structurally_equal(e));
  }
}

namespace {

// random expression generator over the full grammar
pwapass::expr::Expression random_expression(Rng& rng, int depth, int nvars) {
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
  const int pick = static_cast<int>(rng.next_u64() % 10);
  switch (pick) {
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

}  // namespace

TEST_CASE("symbolic derivative matches central finite differences") {
  Rng rng(2024);
  const int nvars = 3;
  int checked = 0;
  for (int e = 0; e < 100; ++e) {
    const Expression ex = random_expression(rng, 3, nvars);
    std::vector<Expression> grads;
    for (int v = 0; v < nvars; ++v) grads.push_back(ex.differentiate(v).fold());
    for (int p = 0; p < 10; ++p) {
      std::vector<double> x(nvars);
      for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
      for (int v = 0; v < nvars; ++v) {
        const double h = 1e-6;
        std::vector<double> xp = x, xm = x;
        xp[v] += h;
        xm[v] -= h;
        double fd, sym;
        try {
          fd = (ex.evaluate(xp) - ex.evaluate(xm)) / (2 * h);
          sym = grads[v].evaluate(x);
        } catch (const EvalError&) {
          continue;  // domain edge; skip the point
        }
        if (!std::isfinite(fd) || std::abs(fd) > 1e6) continue;
        CHECK(std::abs(sym - fd) <= 1e-5 * (1.0 + std::abs(sym)));
        ++checked;
      }
    }
  }
  CHECK(checked > 1500);  // the generator must not degenerate
}

TEST_CASE("round trip property on random expressions") {
  Rng rng(555);
  for (int e = 0; e < 100; ++e) {
    const Expression ex = random_expression(rng, 3, 3);
    CHECK(Expression::parse(ex.pretty_print()).structurally_equal(ex));
  }
}

TEST_CASE("pi literal and disturbance-style parsing") {
  const Expression w = Expression::parse("0.02*sin(0.2*pi*k)*exp(-k/25)", {"k"});
  CHECK(w.evaluate({0.0}) == doctest::Approx(0.0));
  CHECK(w.evaluate({2.5}) ==
        doctest::Approx(0.02 * std::sin(0.2 * M_PI * 2.5) * std::exp(-2.5 / 25)));
}
