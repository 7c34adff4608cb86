#include "pwapass/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace pwapass::expr {

namespace {

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kConstant;
  n->value = v;
  return n;
}

NodePtr variable(int idx) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kVariable;
  n->var_index = idx;
  return n;
}

NodePtr power(NodePtr base, long e) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kPow;
  n->a = std::move(base);
  n->exponent = e;
  return n;
}

struct Parser {
  const std::string& src;
  const std::vector<std::string>* names;  // null -> x1..xn scheme
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= src.size();
  }
  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Kind::kAdd, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make(Kind::kSub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = make(Kind::kMul, lhs, parse_factor());
      } else if (accept('/')) {
        lhs = make(Kind::kDiv, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    NodePtr b = parse_base();
    if (accept('^')) {
      skip_ws();
      bool negative = false;
      if (pos < src.size() && (src[pos] == '-' || src[pos] == '+')) {
        negative = src[pos] == '-';
        ++pos;
      }
      if (pos >= src.size() || !std::isdigit(static_cast<unsigned char>(src[pos])))
        fail("expected integer exponent after '^'");
      long e = 0;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
        e = e * 10 + (src[pos] - '0');
        if (e > 1000000) fail("exponent too large");
        ++pos;
      }
      return power(b, negative ? -e : e);
    }
    return b;
  }

  NodePtr parse_base() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of input");
    const char c = src[pos];
    if (c == '-') {
      ++pos;
      return make(Kind::kNeg, parse_base());
    }
    if (c == '(') {
      ++pos;
      NodePtr e = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos;
    while (pos < src.size() &&
           (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
      ++pos;
    // exponent part like 1e-3
    if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
      std::size_t p = pos + 1;
      if (p < src.size() && (src[p] == '+' || src[p] == '-')) ++p;
      if (p < src.size() && std::isdigit(static_cast<unsigned char>(src[p]))) {
        pos = p;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      }
    }
    const std::string tok = src.substr(start, pos - start);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return constant(v);
    } catch (const std::exception&) {
      pos = start;
      fail("malformed number '" + tok + "'");
    }
  }

  NodePtr parse_name() {
    const std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    const std::string name = src.substr(start, pos - start);
    if (peek() == '(') {
      Kind k;
      if (name == "sin") k = Kind::kSin;
      else if (name == "cos") k = Kind::kCos;
      else if (name == "tan") k = Kind::kTan;
      else if (name == "exp") k = Kind::kExp;
      else if (name == "log") k = Kind::kLog;
      else if (name == "sqrt") k = Kind::kSqrt;
      else {
        pos = start;
        fail("unknown function '" + name + "'");
      }
      ++pos;  // consume '('
      NodePtr arg = parse_expr();
      if (!accept(')')) fail("expected ')' after function argument");
      return make(k, arg);
    }
    if (name == "pi") return constant(M_PI);
    if (names) {
      for (std::size_t i = 0; i < names->size(); ++i)
        if ((*names)[i] == name) return variable(static_cast<int>(i));
      pos = start;
      fail("unknown variable '" + name + "'");
    }
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        const long idx = std::strtol(name.c_str() + 1, nullptr, 10);
        if (idx >= 1) return variable(static_cast<int>(idx - 1));
      }
    }
    pos = start;
    fail("unknown variable '" + name + "'");
  }
};

std::string print_node(const Node& n);

std::string print_child(const NodePtr& c) { return print_node(*c); }

std::string print_node(const Node& n) {
  std::ostringstream os;
  switch (n.kind) {
    case Kind::kConstant: {
      os.precision(17);
      os << n.value;
      return os.str();
    }
    case Kind::kVariable:
      return "x" + std::to_string(n.var_index + 1);
    case Kind::kNeg:
      return "(-" + print_child(n.a) + ")";
    case Kind::kAdd:
      return "(" + print_child(n.a) + "+" + print_child(n.b) + ")";
    case Kind::kSub:
      return "(" + print_child(n.a) + "-" + print_child(n.b) + ")";
    case Kind::kMul:
      return "(" + print_child(n.a) + "*" + print_child(n.b) + ")";
    case Kind::kDiv:
      return "(" + print_child(n.a) + "/" + print_child(n.b) + ")";
    case Kind::kPow:
      return "(" + print_child(n.a) + "^" + std::to_string(n.exponent) + ")";
    case Kind::kSin: return "sin(" + print_child(n.a) + ")";
    case Kind::kCos: return "cos(" + print_child(n.a) + ")";
    case Kind::kTan: return "tan(" + print_child(n.a) + ")";
    case Kind::kExp: return "exp(" + print_child(n.a) + ")";
    case Kind::kLog: return "log(" + print_child(n.a) + ")";
    case Kind::kSqrt: return "sqrt(" + print_child(n.a) + ")";
  }
  return "?";
}

double eval_node(const Node& n, const std::vector<double>& x) {
  switch (n.kind) {
    case Kind::kConstant:
      return n.value;
    case Kind::kVariable:
      if (n.var_index < 0 || static_cast<std::size_t>(n.var_index) >= x.size())
        throw EvalError("variable index out of range", print_node(n));
      return x[static_cast<std::size_t>(n.var_index)];
    case Kind::kNeg:
      return -eval_node(*n.a, x);
    case Kind::kAdd:
      return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Kind::kSub:
      return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Kind::kMul:
      return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Kind::kDiv: {
      const double den = eval_node(*n.b, x);
      if (den == 0.0) throw EvalError("division by zero", print_node(n));
      return eval_node(*n.a, x) / den;
    }
    case Kind::kPow: {
      const double b = eval_node(*n.a, x);
      const double v = std::pow(b, static_cast<double>(n.exponent));
      if (!std::isfinite(v)) throw EvalError("non-finite power", print_node(n));
      return v;
    }
    case Kind::kSin: return std::sin(eval_node(*n.a, x));
    case Kind::kCos: return std::cos(eval_node(*n.a, x));
    case Kind::kTan: {
      const double v = std::tan(eval_node(*n.a, x));
      if (!std::isfinite(v)) throw EvalError("tan out of range", print_node(n));
      return v;
    }
    case Kind::kExp: {
      const double v = std::exp(eval_node(*n.a, x));
      if (!std::isfinite(v)) throw EvalError("exp overflow", print_node(n));
      return v;
    }
    case Kind::kLog: {
      const double a = eval_node(*n.a, x);
      if (a <= 0.0) throw EvalError("log of non-positive value", print_node(n));
      return std::log(a);
    }
    case Kind::kSqrt: {
      const double a = eval_node(*n.a, x);
      if (a < 0.0) throw EvalError("sqrt of negative value", print_node(n));
      return std::sqrt(a);
    }
  }
  throw EvalError("corrupt node", "?");
}

NodePtr diff_node(const NodePtr& n, int v);

NodePtr chain(Kind k, const NodePtr& outer_arg, NodePtr outer_deriv, int v) {
  (void)k;
  return make(Kind::kMul, std::move(outer_deriv), diff_node(outer_arg, v));
}

NodePtr diff_node(const NodePtr& n, int v) {
  switch (n->kind) {
    case Kind::kConstant:
      return constant(0.0);
    case Kind::kVariable:
      return constant(n->var_index == v ? 1.0 : 0.0);
    case Kind::kNeg:
      return make(Kind::kNeg, diff_node(n->a, v));
    case Kind::kAdd:
      return make(Kind::kAdd, diff_node(n->a, v), diff_node(n->b, v));
    case Kind::kSub:
      return make(Kind::kSub, diff_node(n->a, v), diff_node(n->b, v));
    case Kind::kMul:
      return make(Kind::kAdd, make(Kind::kMul, diff_node(n->a, v), n->b),
                  make(Kind::kMul, n->a, diff_node(n->b, v)));
    case Kind::kDiv:
      // (a'b - a b') / b^2
      return make(Kind::kDiv,
                  make(Kind::kSub, make(Kind::kMul, diff_node(n->a, v), n->b),
                       make(Kind::kMul, n->a, diff_node(n->b, v))),
                  power(n->b, 2));
    case Kind::kPow: {
      if (n->exponent == 0) return constant(0.0);
      // e * a^(e-1) * a'
      return make(Kind::kMul,
                  make(Kind::kMul, constant(static_cast<double>(n->exponent)),
                       power(n->a, n->exponent - 1)),
                  diff_node(n->a, v));
    }
    case Kind::kSin:
      return chain(n->kind, n->a, make(Kind::kCos, n->a), v);
    case Kind::kCos:
      return chain(n->kind, n->a, make(Kind::kNeg, make(Kind::kSin, n->a)), v);
    case Kind::kTan:
      // 1 / cos(a)^2
      return chain(n->kind, n->a,
                   make(Kind::kDiv, constant(1.0), power(make(Kind::kCos, n->a), 2)), v);
    case Kind::kExp:
      return chain(n->kind, n->a, make(Kind::kExp, n->a), v);
    case Kind::kLog:
      return make(Kind::kDiv, diff_node(n->a, v), n->a);
    case Kind::kSqrt:
      return make(Kind::kDiv, diff_node(n->a, v),
                  make(Kind::kMul, constant(2.0), make(Kind::kSqrt, n->a)));
  }
  return constant(0.0);
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::kConstant && n->value == v;
}

NodePtr fold_node(const NodePtr& n) {
  switch (n->kind) {
    case Kind::kConstant:
    case Kind::kVariable:
      return n;
    default:
      break;
  }
  NodePtr a = n->a ? fold_node(n->a) : nullptr;
  NodePtr b = n->b ? fold_node(n->b) : nullptr;
  const bool ca = a && a->kind == Kind::kConstant;
  const bool cb = b && b->kind == Kind::kConstant;

  auto try_const = [&](double v) -> NodePtr {
    return std::isfinite(v) ? constant(v) : nullptr;
  };

  switch (n->kind) {
    case Kind::kNeg:
      if (ca)
        if (auto c = try_const(-a->value)) return c;
      return make(Kind::kNeg, a);
    case Kind::kAdd:
      if (ca && cb)
        if (auto c = try_const(a->value + b->value)) return c;
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      return make(Kind::kAdd, a, b);
    case Kind::kSub:
      if (ca && cb)
        if (auto c = try_const(a->value - b->value)) return c;
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return fold_node(make(Kind::kNeg, b));
      return make(Kind::kSub, a, b);
    case Kind::kMul:
      if (ca && cb)
        if (auto c = try_const(a->value * b->value)) return c;
      if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      return make(Kind::kMul, a, b);
    case Kind::kDiv:
      if (ca && cb && b->value != 0.0)
        if (auto c = try_const(a->value / b->value)) return c;
      if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant(0.0);
      if (is_const(b, 1.0)) return a;
      return make(Kind::kDiv, a, b);
    case Kind::kPow: {
      if (n->exponent == 0) return constant(1.0);
      if (n->exponent == 1) return a;
      if (ca)
        if (auto c = try_const(std::pow(a->value, static_cast<double>(n->exponent))))
          return c;
      return power(a, n->exponent);
    }
    case Kind::kSin:
      if (ca)
        if (auto c = try_const(std::sin(a->value))) return c;
      return make(Kind::kSin, a);
    case Kind::kCos:
      if (ca)
        if (auto c = try_const(std::cos(a->value))) return c;
      return make(Kind::kCos, a);
    case Kind::kTan:
      if (ca)
        if (auto c = try_const(std::tan(a->value))) return c;
      return make(Kind::kTan, a);
    case Kind::kExp:
      if (ca)
        if (auto c = try_const(std::exp(a->value))) return c;
      return make(Kind::kExp, a);
    case Kind::kLog:
      if (ca && a->value > 0.0)
        if (auto c = try_const(std::log(a->value))) return c;
      return make(Kind::kLog, a);
    case Kind::kSqrt:
      if (ca && a->value >= 0.0)
        if (auto c = try_const(std::sqrt(a->value))) return c;
      return make(Kind::kSqrt, a);
    default:
      return n;
  }
}

bool equal_nodes(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::kConstant:
      return a->value == b->value;
    case Kind::kVariable:
      return a->var_index == b->var_index;
    case Kind::kPow:
      return a->exponent == b->exponent && equal_nodes(a->a, b->a);
    default:
      return equal_nodes(a->a, b->a) && equal_nodes(a->b, b->b);
  }
}

int max_var(const NodePtr& n) {
  if (!n) return 0;
  int m = (n->kind == Kind::kVariable) ? n->var_index + 1 : 0;
  if (n->a) m = std::max(m, max_var(n->a));
  if (n->b) m = std::max(m, max_var(n->b));
  return m;
}

}  // namespace

Expression Expression::parse(const std::string& source) {
  Parser p{source, nullptr};
  NodePtr root = p.parse_expr();
  if (!p.at_end()) p.fail("trailing input");
  return Expression(root);
}

Expression Expression::parse(const std::string& source,
                             const std::vector<std::string>& names) {
  Parser p{source, &names};
  NodePtr root = p.parse_expr();
  if (!p.at_end()) p.fail("trailing input");
  return Expression(root);
}

double Expression::evaluate(const std::vector<double>& x) const {
  if (!root_) throw EvalError("empty expression", "");
  return eval_node(*root_, x);
}

Expression Expression::differentiate(int var_index) const {
  if (!root_) throw std::invalid_argument("differentiate: empty expression");
  return Expression(diff_node(root_, var_index));
}

Expression Expression::fold() const {
  if (!root_) return *this;
  return Expression(fold_node(root_));
}

std::string Expression::pretty_print() const {
  if (!root_) return "";
  return print_node(*root_);
}

int Expression::max_variable() const { return max_var(root_); }

bool Expression::structurally_equal(const Expression& other) const {
  return equal_nodes(root_, other.root_);
}

}  // namespace pwapass::expr
