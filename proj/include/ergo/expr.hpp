#pragma once

// Scalar expressions in one variable `x`.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ['^' integer]
//   primary := number | 'x' | bound-name | func '(' args ')' | '(' sum ')'
// Functions: abs exp log sqrt pos negpart (one argument), min max (two).
// `pos(u)` is max(u, 0) and `negpart(u)` is max(-u, 0). Exponents are integer
// literals, optionally signed or parenthesized: x^2, x^-1, x^(-1).
//
// Trees are immutable and shared. Each Expr also carries a flat postfix
// program which is what eval() runs, so evaluation in inner loops does not
// chase pointers.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergo/error.hpp"

namespace ergo {

enum class Op : std::uint8_t {
  Const,
  Var,
  Neg,
  Abs,
  Exp,
  Log,
  Sqrt,
  PosPart,
  NegPart,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Min,
  Max,
};

constexpr int arity(Op op) noexcept {
  switch (op) {
    case Op::Const:
    case Op::Var:
      return 0;
    case Op::Neg:
    case Op::Abs:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::PosPart:
    case Op::NegPart:
    case Op::Pow:
      return 1;
    default:
      return 2;
  }
}

constexpr bool is_smooth_op(Op op) noexcept {
  return op != Op::Abs && op != Op::PosPart && op != Op::NegPart && op != Op::Min &&
         op != Op::Max;
}

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int exponent = 0;    // Pow
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

class Expr {
 public:
  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double v) {
    ExprNode n;
    n.op = Op::Const;
    n.value = v;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }
  static Expr variable() {
    ExprNode n;
    n.op = Op::Var;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }
  static Expr unary(Op op, const Expr& a) {
    ExprNode n;
    n.op = op;
    n.lhs = a.root_;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }
  static Expr binary(Op op, const Expr& a, const Expr& b) {
    ExprNode n;
    n.op = op;
    n.lhs = a.root_;
    n.rhs = b.root_;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }
  static Expr power(const Expr& a, int exponent) {
    ExprNode n;
    n.op = Op::Pow;
    n.exponent = exponent;
    n.lhs = a.root_;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }

  const ExprNode& root() const noexcept { return *root_; }

  /// Evaluate at x. Throws EvalError outside the domain.
  double operator()(double x) const;

  bool is_smooth() const noexcept { return smooth_; }

  /// True when the expression is a Const node.
  bool is_constant() const noexcept { return root_->op == Op::Const; }

  /// Fully parenthesized text; parse(str()) evaluates identically.
  std::string str() const;

 private:
  struct Instr {
    Op op;
    int exponent;
    double value;
  };

  explicit Expr(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) { compile(); }

  void compile();
  static void emit(const ExprNode& n, std::vector<Instr>& out, bool& smooth);
  [[noreturn]] static void domain_error(const char* what, double arg);

  std::shared_ptr<const ExprNode> root_;
  std::shared_ptr<const std::vector<Instr>> program_;
  int depth_ = 0;
  bool smooth_ = true;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
inline Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }

// ---------------------------------------------------------------------------
// Compilation and evaluation

inline void Expr::emit(const ExprNode& n, std::vector<Instr>& out, bool& smooth) {
  if (!is_smooth_op(n.op)) smooth = false;
  if (n.lhs) emit(*n.lhs, out, smooth);
  if (n.rhs) emit(*n.rhs, out, smooth);
  out.push_back(Instr{n.op, n.exponent, n.value});
}

inline void Expr::compile() {
  auto prog = std::make_shared<std::vector<Instr>>();
  smooth_ = true;
  emit(*root_, *prog, smooth_);
  int depth = 0;
  for (const auto& in : *prog) {
    depth += 1 - arity(in.op);
    depth_ = std::max(depth_, depth);
  }
  program_ = std::move(prog);
}

inline void Expr::domain_error(const char* what, double arg) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s (argument %.17g)", what, arg);
  throw EvalError(buf);
}

inline double Expr::operator()(double x) const {
  constexpr int kInline = 48;
  std::array<double, kInline> small{};
  std::unique_ptr<double[]> big;
  double* st = small.data();
  if (depth_ > kInline) {
    big = std::make_unique<double[]>(static_cast<std::size_t>(depth_));
    st = big.get();
  }
  int sp = 0;
  const Instr* const end = program_->data() + program_->size();
  for (const Instr* ip = program_->data(); ip != end; ++ip) {
    const Instr& in = *ip;
    switch (in.op) {
      case Op::Const:
        st[sp++] = in.value;
        break;
      case Op::Var:
        st[sp++] = x;
        break;
      case Op::Neg:
        st[sp - 1] = -st[sp - 1];
        break;
      case Op::Abs:
        st[sp - 1] = std::fabs(st[sp - 1]);
        break;
      case Op::Exp:
        st[sp - 1] = std::exp(st[sp - 1]);
        break;
      case Op::Log:
        if (!(st[sp - 1] > 0.0)) domain_error("log of non-positive value", st[sp - 1]);
        st[sp - 1] = std::log(st[sp - 1]);
        break;
      case Op::Sqrt:
        if (!(st[sp - 1] >= 0.0)) domain_error("sqrt of negative value", st[sp - 1]);
        st[sp - 1] = std::sqrt(st[sp - 1]);
        break;
      case Op::PosPart:
        st[sp - 1] = st[sp - 1] > 0.0 ? st[sp - 1] : 0.0;
        break;
      case Op::NegPart:
        st[sp - 1] = st[sp - 1] < 0.0 ? -st[sp - 1] : 0.0;
        break;
      case Op::Pow:
        if (in.exponent < 0 && st[sp - 1] == 0.0) domain_error("negative power of zero", 0.0);
        st[sp - 1] = std::pow(st[sp - 1], in.exponent);
        break;
      case Op::Add:
        --sp;
        st[sp - 1] += st[sp];
        break;
      case Op::Sub:
        --sp;
        st[sp - 1] -= st[sp];
        break;
      case Op::Mul:
        --sp;
        st[sp - 1] *= st[sp];
        break;
      case Op::Div:
        --sp;
        if (st[sp] == 0.0) domain_error("division by zero", st[sp - 1]);
        st[sp - 1] /= st[sp];
        break;
      case Op::Min:
        --sp;
        st[sp - 1] = std::fmin(st[sp - 1], st[sp]);
        break;
      case Op::Max:
        --sp;
        st[sp - 1] = std::fmax(st[sp - 1], st[sp]);
        break;
    }
  }
  return st[0];
}

inline double eval(const Expr& e, double x) { return e(x); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0.0) return "(" + s + ")";
  return s;
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Abs: return "abs";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::PosPart: return "pos";
    case Op::NegPart: return "negpart";
    case Op::Min: return "min";
    case Op::Max: return "max";
    default: return "";
  }
}

inline void print(const ExprNode& n, std::string& out) {
  switch (n.op) {
    case Op::Const:
      out += format_real(n.value);
      return;
    case Op::Var:
      out += 'x';
      return;
    case Op::Neg:
      out += "(-";
      print(*n.lhs, out);
      out += ')';
      return;
    case Op::Pow:
      out += '(';
      print(*n.lhs, out);
      out += '^';
      if (n.exponent < 0)
        out += "(" + std::to_string(n.exponent) + ")";
      else
        out += std::to_string(n.exponent);
      out += ')';
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      static constexpr std::string_view kSym[] = {" + ", " - ", " * ", " / "};
      out += '(';
      print(*n.lhs, out);
      out += kSym[static_cast<int>(n.op) - static_cast<int>(Op::Add)];
      print(*n.rhs, out);
      out += ')';
      return;
    }
    case Op::Min:
    case Op::Max:
      out += function_name(n.op);
      out += '(';
      print(*n.lhs, out);
      out += ", ";
      print(*n.rhs, out);
      out += ')';
      return;
    default:
      out += function_name(n.op);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string Expr::str() const {
  std::string out;
  detail::print(*root_, out);
  return out;
}

inline std::string to_string(const Expr& e) { return e.str(); }

// ---------------------------------------------------------------------------
// Parsing

/// Named constants substituted at parse time, e.g. {{"s", 0.25}}.
using Bindings = std::map<std::string, double, std::less<>>;

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, const Bindings& bindings) : src_(src), bindings_(bindings) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = lhs + parse_product();
      else if (accept('-'))
        lhs = lhs - parse_product();
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * parse_unary();
      else if (accept('/'))
        lhs = lhs / parse_unary();
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    int exponent = parse_integer_exponent();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '^') fail("chained '^' is ambiguous; add parentheses");
    return Expr::power(base, exponent);
  }

  int parse_integer_exponent() {
    bool paren = accept('(');
    bool negative = false;
    if (accept('-'))
      negative = true;
    else
      accept('+');
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
    if (start == pos_) fail("exponent must be an integer literal");
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
      fail("exponent must be an integer literal");
    int value = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc{}) {
      pos_ = start;
      fail("exponent out of range");
    }
    if (paren) expect(')');
    return negative ? -value : value;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      expect(')');
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), value,
                                     std::chars_format::general);
    if (ec != std::errc{}) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    if (pos_ < src_.size() && is_ident_start(src_[pos_])) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::constant(value);
  }

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return Expr::variable();

    struct Fn {
      std::string_view name;
      Op op;
    };
    static constexpr Fn kFunctions[] = {
        {"abs", Op::Abs},     {"exp", Op::Exp},         {"log", Op::Log},
        {"sqrt", Op::Sqrt},   {"pos", Op::PosPart},     {"negpart", Op::NegPart},
        {"min", Op::Min},     {"max", Op::Max},
    };
    for (const auto& fn : kFunctions) {
      if (fn.name != name) continue;
      expect('(');
      Expr a = parse_sum();
      if (arity(fn.op) == 2) {
        expect(',');
        Expr b = parse_sum();
        expect(')');
        return Expr::binary(fn.op, a, b);
      }
      expect(')');
      return Expr::unary(fn.op, a);
    }
    if (auto it = bindings_.find(name); it != bindings_.end()) return Expr::constant(it->second);
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  const Bindings& bindings_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse expression text. Throws ParseError (with byte offset) on bad input.
inline Expr parse(std::string_view src, const Bindings& bindings = {}) {
  return detail::Parser(src, bindings).parse_all();
}

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

inline bool is_const(const Expr& e, double v) {
  return e.root().op == Op::Const && e.root().value == v;
}

inline Expr add(const Expr& a, const Expr& b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.root().value + b.root().value);
  return a + b;
}

inline Expr sub(const Expr& a, const Expr& b) {
  if (is_const(b, 0.0)) return a;
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.root().value - b.root().value);
  if (is_const(a, 0.0)) return -b;
  return a - b;
}

inline Expr mul(const Expr& a, const Expr& b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.root().value * b.root().value);
  return a * b;
}

inline Expr neg(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.root().value);
  return -a;
}

inline Expr rebuild(const ExprNode& n) {
  switch (arity(n.op)) {
    case 0:
      return n.op == Op::Var ? Expr::variable() : Expr::constant(n.value);
    case 1:
      return n.op == Op::Pow ? Expr::power(rebuild(*n.lhs), n.exponent)
                             : Expr::unary(n.op, rebuild(*n.lhs));
    default:
      return Expr::binary(n.op, rebuild(*n.lhs), rebuild(*n.rhs));
  }
}

inline Expr differentiate(const ExprNode& n) {
  switch (n.op) {
    case Op::Const:
      return Expr::constant(0.0);
    case Op::Var:
      return Expr::constant(1.0);
    case Op::Neg:
      return neg(differentiate(*n.lhs));
    case Op::Add:
      return add(differentiate(*n.lhs), differentiate(*n.rhs));
    case Op::Sub:
      return sub(differentiate(*n.lhs), differentiate(*n.rhs));
    case Op::Mul: {
      Expr u = rebuild(*n.lhs), v = rebuild(*n.rhs);
      return add(mul(differentiate(*n.lhs), v), mul(u, differentiate(*n.rhs)));
    }
    case Op::Div: {
      Expr u = rebuild(*n.lhs), v = rebuild(*n.rhs);
      Expr num = sub(mul(differentiate(*n.lhs), v), mul(u, differentiate(*n.rhs)));
      if (is_const(num, 0.0)) return num;
      return num / Expr::power(v, 2);
    }
    case Op::Pow: {
      if (n.exponent == 0) return Expr::constant(0.0);
      Expr u = rebuild(*n.lhs);
      Expr inner = n.exponent == 1 ? Expr::constant(1.0) : Expr::power(u, n.exponent - 1);
      return mul(mul(Expr::constant(static_cast<double>(n.exponent)), inner),
                 differentiate(*n.lhs));
    }
    case Op::Exp:
      return mul(rebuild(n), differentiate(*n.lhs));
    case Op::Log: {
      Expr du = differentiate(*n.lhs);
      if (is_const(du, 0.0)) return du;
      return du / rebuild(*n.lhs);
    }
    case Op::Sqrt: {
      Expr du = differentiate(*n.lhs);
      if (is_const(du, 0.0)) return du;
      return du / mul(Expr::constant(2.0), rebuild(n));
    }
    default:
      throw NonSmoothError(std::string("cannot differentiate non-smooth node '") +
                           function_name(n.op) + "'");
  }
}

}  // namespace detail

/// Symbolic derivative of order 1 or 2. Requires a smooth expression
/// (no abs, pos, negpart, min, max); throws NonSmoothError otherwise.
inline Expr deriv(const Expr& e, int order = 1) {
  if (order != 1 && order != 2) throw Error("deriv: order must be 1 or 2");
  if (!e.is_smooth())
    throw NonSmoothError("cannot differentiate '" + e.str() + "': contains a non-smooth node");
  Expr d = detail::differentiate(e.root());
  if (order == 2) d = detail::differentiate(d.root());
  return d;
}

}  // namespace ergo
