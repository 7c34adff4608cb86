#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwapass::expr {

// Scalar expression AST over variables x1..xn (or caller-supplied names).
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' integer)?
//   base   := number | variable | func '(' expr ')' | '(' expr ')' | '-' base
//   func   in {sin, cos, tan, exp, log, sqrt}
// plus the named constant `pi`. The power operator takes integer constant
// exponents only, which keeps symbolic differentiation exact.
//
// Expressions are immutable after construction; nodes are shared between
// trees, so evaluation from many threads is safe.

enum class Kind {
  kConstant,
  kVariable,  // index is 0-based internally; "x1" -> 0
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,  // integer exponent in `exponent`
  kSin,
  kCos,
  kTan,
  kExp,
  kLog,
  kSqrt,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Kind kind;
  double value = 0.0;   // kConstant
  int var_index = -1;   // kVariable
  long exponent = 0;    // kPow
  NodePtr a, b;         // operands
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::string subexpr)
      : std::runtime_error(what + " in subexpression: " + subexpr),
        subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const { return subexpr_; }

 private:
  std::string subexpr_;
};

class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  // Parse with the default variable scheme x1, x2, ...
  static Expression parse(const std::string& source);
  // Parse with explicit variable names; names[i] binds to component i of the
  // evaluation point (used for disturbance signals in the single variable k).
  static Expression parse(const std::string& source,
                          const std::vector<std::string>& names);

  double evaluate(const std::vector<double>& x) const;

  // Unsimplified symbolic partial derivative with respect to variable
  // var_index (0-based). Apply fold() before evaluating repeatedly.
  Expression differentiate(int var_index) const;

  // Constant folding / algebraic cleanup (0*x, x+0, x^1, function-of-constant
  // and the like). Exact folds only.
  Expression fold() const;

  std::string pretty_print() const;

  // Largest variable index referenced, plus one (0 for constant expressions).
  int max_variable() const;

  bool structurally_equal(const Expression& other) const;

  const NodePtr& root() const { return root_; }

 private:
  NodePtr root_;
};

}  // namespace pwapass::expr
