#include "finsler/expr.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace finsler {
namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  double number = 0.0;
  int line = 1, column = 1;
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Number: return "number";
    case Tok::Ident: return "identifier";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && is_space(src_[pos_])) bump();
    tok_.line = line_;
    tok_.column = column_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text = {};
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': single(Tok::Plus); return;
      case '-': single(Tok::Minus); return;
      case '*': single(Tok::Star); return;
      case '/': single(Tok::Slash); return;
      case '^': single(Tok::Caret); return;
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      case ',': single(Tok::Comma); return;
      default: break;
    }
    if (c >= '0' && c <= '9') {
      lex_number();
      return;
    }
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) bump();
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_,
                     column_);
  }

  void lex_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') bump();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      bump();
      if (pos_ >= src_.size() || src_[pos_] < '0' || src_[pos_] > '9')
        throw ParseError("malformed number: digits required after '.'", line_,
                         column_);
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
        bump();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      bump();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        bump();
      if (pos_ >= src_.size() || src_[pos_] < '0' || src_[pos_] > '9')
        throw ParseError("malformed number: exponent digits required", line_,
                         tok_.column);
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
        bump();
    }
    tok_.kind = Tok::Number;
    tok_.text = src_.substr(start, pos_ - start);
    double value = 0.0;
    const auto res = std::from_chars(tok_.text.data(),
                                     tok_.text.data() + tok_.text.size(), value);
    if (res.ec != std::errc())
      throw ParseError("malformed number", tok_.line, tok_.column);
    tok_.number = value;
  }

  void single(Tok kind) {
    tok_.kind = kind;
    tok_.text = src_.substr(pos_, 1);
    bump();
  }

  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1, column_ = 1;
  Token tok_;
};

class Parser {
 public:
  Parser(std::string_view src, int dim) : lex_(src), dim_(dim) {}

  ExprPtr run() {
    ExprPtr e = expr();
    const Token& t = lex_.peek();
    if (t.kind != Tok::End)
      throw ParseError(std::string("unexpected ") + tok_name(t.kind), t.line,
                       t.column,
                       {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
    return e;
  }

 private:
  static std::shared_ptr<Expr> node(Expr::Kind kind, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  ExprPtr expr() {
    ExprPtr left = term();
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      const Token op = lex_.take();
      ExprPtr right = term();
      auto e = node(Expr::Kind::Binary, op);
      e->op = op.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      e->a = left;
      e->b = right;
      left = e;
    }
    return left;
  }

  ExprPtr term() {
    ExprPtr left = unary();
    while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
      const Token op = lex_.take();
      ExprPtr right = unary();
      auto e = node(Expr::Kind::Binary, op);
      e->op = op.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      e->a = left;
      e->b = right;
      left = e;
    }
    return left;
  }

  ExprPtr unary() {
    if (lex_.peek().kind == Tok::Minus) {
      const Token op = lex_.take();
      auto e = node(Expr::Kind::Neg, op);
      e->a = unary();
      return e;
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (lex_.peek().kind == Tok::Caret) {
      const Token op = lex_.take();
      const Token at = lex_.peek();
      ExprPtr exponent = unary();
      require_constant(*exponent, at);
      auto e = node(Expr::Kind::Binary, op);
      e->op = BinaryOp::Pow;
      e->a = base;
      e->b = exponent;
      return e;
    }
    return base;
  }

  ExprPtr primary() {
    const Token t = lex_.peek();
    switch (t.kind) {
      case Tok::Number: {
        lex_.take();
        auto e = node(Expr::Kind::Number, t);
        e->number = t.number;
        return e;
      }
      case Tok::LParen: {
        lex_.take();
        ExprPtr inner = expr();
        expect(Tok::RParen);
        return inner;
      }
      case Tok::Ident:
        return identifier();
      default:
        throw ParseError(std::string("expected expression, found ") +
                             tok_name(t.kind),
                         t.line, t.column,
                         {"number", "identifier", "'('", "'-'"});
    }
  }

  ExprPtr identifier() {
    const Token t = lex_.take();
    if (lex_.peek().kind == Tok::LParen) return call(t);

    int coord = 0;
    if (coordinate_index(t.text, coord)) {
      if (coord < 1 || coord > dim_)
        throw ParseError("unknown variable '" + std::string(t.text) +
                             "': chart dimension is " + std::to_string(dim_),
                         t.line, t.column);
      auto e = node(t.text[0] == 'x' ? Expr::Kind::VarX : Expr::Kind::VarY, t);
      e->var_index = coord - 1;
      return e;
    }
    auto e = node(Expr::Kind::Param, t);
    e->name = std::string(t.text);
    return e;
  }

  ExprPtr call(const Token& name) {
    expect(Tok::LParen);
    std::vector<ExprPtr> args;
    args.push_back(expr());
    while (lex_.peek().kind == Tok::Comma) {
      lex_.take();
      args.push_back(expr());
    }
    expect(Tok::RParen);

    if (name.text == "pow") {
      if (args.size() != 2)
        throw ParseError("pow expects 2 arguments, got " +
                             std::to_string(args.size()),
                         name.line, name.column);
      require_constant(*args[1], name);
      auto e = node(Expr::Kind::Binary, name);
      e->op = BinaryOp::Pow;
      e->a = args[0];
      e->b = args[1];
      return e;
    }

    FuncKind kind;
    if (name.text == "sqrt") kind = FuncKind::Sqrt;
    else if (name.text == "exp") kind = FuncKind::Exp;
    else if (name.text == "log") kind = FuncKind::Log;
    else if (name.text == "sin") kind = FuncKind::Sin;
    else if (name.text == "cos") kind = FuncKind::Cos;
    else
      throw ParseError("unknown function '" + std::string(name.text) + "'",
                       name.line, name.column,
                       {"sqrt", "exp", "log", "sin", "cos", "pow"});
    if (args.size() != 1)
      throw ParseError(std::string(name.text) + " expects 1 argument, got " +
                           std::to_string(args.size()),
                       name.line, name.column);
    auto e = node(Expr::Kind::Func, name);
    e->func = kind;
    e->a = args[0];
    return e;
  }

  void require_constant(const Expr& exponent, const Token& at) {
    if (references_x(exponent) || references_y(exponent))
      throw ParseError("exponent must be a constant expression", at.line,
                       at.column);
  }

  void expect(Tok kind) {
    const Token& t = lex_.peek();
    if (t.kind != kind)
      throw ParseError(std::string("expected ") + tok_name(kind) + ", found " +
                           tok_name(t.kind),
                       t.line, t.column, {tok_name(kind)});
    lex_.take();
  }

  // x<k> / y<k> with k a positive decimal integer, no leading zeros.
  static bool coordinate_index(std::string_view text, int& out) {
    if (text.size() < 2 || (text[0] != 'x' && text[0] != 'y')) return false;
    if (text[1] == '0') return false;
    int value = 0;
    for (std::size_t i = 1; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return false;
      value = value * 10 + (text[i] - '0');
      if (value > 1000) return false;
    }
    out = value;
    return true;
  }

  Lexer lex_;
  int dim_;
};

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Binary:
      switch (e.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
      return 0;
    case Expr::Kind::Neg: return 3;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_rec(const Expr& e, std::string& out, int parent_prec, bool right) {
  const int prec = precedence(e);
  const bool parens =
      prec < parent_prec || (prec == parent_prec && right && prec <= 2);
  if (parens) out += '(';
  switch (e.kind) {
    case Expr::Kind::Number:
      out += format_number(e.number);
      break;
    case Expr::Kind::Param:
      out += e.name;
      break;
    case Expr::Kind::VarX:
      out += 'x';
      out += std::to_string(e.var_index + 1);
      break;
    case Expr::Kind::VarY:
      out += 'y';
      out += std::to_string(e.var_index + 1);
      break;
    case Expr::Kind::Neg:
      out += '-';
      print_rec(*e.a, out, 3, true);
      break;
    case Expr::Kind::Binary: {
      const char* op = nullptr;
      switch (e.op) {
        case BinaryOp::Add: op = " + "; break;
        case BinaryOp::Sub: op = " - "; break;
        case BinaryOp::Mul: op = "*"; break;
        case BinaryOp::Div: op = "/"; break;
        case BinaryOp::Pow: op = "^"; break;
      }
      if (e.op == BinaryOp::Pow) {
        // Left operand binds tighter than '^'; exponent re-enters at unary.
        print_rec(*e.a, out, 5, false);
        out += op;
        print_rec(*e.b, out, 3, true);
      } else {
        print_rec(*e.a, out, prec, false);
        out += op;
        print_rec(*e.b, out, prec, true);
      }
      break;
    }
    case Expr::Kind::Func: {
      switch (e.func) {
        case FuncKind::Sqrt: out += "sqrt"; break;
        case FuncKind::Exp: out += "exp"; break;
        case FuncKind::Log: out += "log"; break;
        case FuncKind::Sin: out += "sin"; break;
        case FuncKind::Cos: out += "cos"; break;
      }
      out += '(';
      print_rec(*e.a, out, 0, false);
      out += ')';
      break;
    }
  }
  if (parens) out += ')';
}

// Generic evaluator over a scalar with jet-compatible operations. Lift turns
// a double constant into the scalar type.
template <class Scalar, class Lift>
Scalar eval_generic(const Expr& e, std::span<const Scalar> x,
                    std::span<const Scalar> y, const ParamMap& params,
                    const Lift& lift) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  switch (e.kind) {
    case Expr::Kind::Number:
      return lift(e.number);
    case Expr::Kind::Param: {
      auto it = params.find(e.name);
      if (it == params.end())
        throw EvalError("unbound parameter '" + e.name + "'", print_expr(e));
      return lift(it->second);
    }
    case Expr::Kind::VarX:
      if (e.var_index >= int(x.size()))
        throw EvalError("dimension mismatch: expression uses x" +
                            std::to_string(e.var_index + 1) + " but only " +
                            std::to_string(x.size()) +
                            " chart coordinates were supplied",
                        print_expr(e));
      return x[std::size_t(e.var_index)];
    case Expr::Kind::VarY:
      if (e.var_index >= int(y.size()))
        throw EvalError("dimension mismatch: expression uses y" +
                            std::to_string(e.var_index + 1) + " but only " +
                            std::to_string(y.size()) +
                            " fiber coordinates were supplied",
                        print_expr(e));
      return y[std::size_t(e.var_index)];
    case Expr::Kind::Neg:
      return -eval_generic(*e.a, x, y, params, lift);
    case Expr::Kind::Binary: {
      if (e.op == BinaryOp::Pow) {
        const double q = eval_const(*e.b, params);
        Scalar base = eval_generic(*e.a, x, y, params, lift);
        try {
          using std::pow;
          return pow(base, q);
        } catch (const std::domain_error& err) {
          throw EvalError(err.what(), print_expr(e));
        }
      }
      Scalar a = eval_generic(*e.a, x, y, params, lift);
      Scalar b = eval_generic(*e.b, x, y, params, lift);
      try {
        switch (e.op) {
          case BinaryOp::Add: return a + b;
          case BinaryOp::Sub: return a - b;
          case BinaryOp::Mul: return a * b;
          case BinaryOp::Div: return a / b;
          default: break;
        }
      } catch (const std::domain_error& err) {
        throw EvalError(err.what(), print_expr(e));
      }
      throw EvalError("unhandled operator", print_expr(e));
    }
    case Expr::Kind::Func: {
      Scalar a = eval_generic(*e.a, x, y, params, lift);
      try {
        switch (e.func) {
          case FuncKind::Sqrt: return sqrt(a);
          case FuncKind::Exp: return exp(a);
          case FuncKind::Log: return log(a);
          case FuncKind::Sin: return sin(a);
          case FuncKind::Cos: return cos(a);
        }
      } catch (const std::domain_error& err) {
        throw EvalError(err.what(), print_expr(e));
      }
      throw EvalError("unhandled function", print_expr(e));
    }
  }
  throw EvalError("unhandled node kind", print_expr(e));
}

// Scalar-double guards matching the jet domain rules.
double checked_div(double a, double b, const Expr& e) {
  if (b == 0.0) throw EvalError("division by zero", print_expr(e));
  return a / b;
}

}  // namespace

ExprPtr parse_expr(std::string_view source, int dim) {
  if (dim < 1 || dim > kMaxDim)
    throw SpecError("dimension must lie in [1, " + std::to_string(kMaxDim) +
                    "], got " + std::to_string(dim));
  return Parser(source, dim).run();
}

std::string print_expr(const Expr& e) {
  std::string out;
  print_rec(e, out, 0, false);
  return out;
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Number:
      return a.number == b.number;
    case Expr::Kind::Param:
      return a.name == b.name;
    case Expr::Kind::VarX:
    case Expr::Kind::VarY:
      return a.var_index == b.var_index;
    case Expr::Kind::Neg:
      return expr_equal(*a.a, *b.a);
    case Expr::Kind::Binary:
      return a.op == b.op && expr_equal(*a.a, *b.a) && expr_equal(*a.b, *b.b);
    case Expr::Kind::Func:
      return a.func == b.func && expr_equal(*a.a, *b.a);
  }
  return false;
}

bool references_x(const Expr& e) {
  if (e.kind == Expr::Kind::VarX) return true;
  if (e.a && references_x(*e.a)) return true;
  return e.b && references_x(*e.b);
}

bool references_y(const Expr& e) {
  if (e.kind == Expr::Kind::VarY) return true;
  if (e.a && references_y(*e.a)) return true;
  return e.b && references_y(*e.b);
}

void collect_params(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Param) out.insert(e.name);
  if (e.a) collect_params(*e.a, out);
  if (e.b) collect_params(*e.b, out);
}

int leaf_count(const Expr& e) {
  if (!e.a && !e.b) return 1;
  return (e.a ? leaf_count(*e.a) : 0) + (e.b ? leaf_count(*e.b) : 0);
}

int node_depth(const Expr& e) {
  const int da = e.a ? node_depth(*e.a) : 0;
  const int db = e.b ? node_depth(*e.b) : 0;
  return 1 + std::max(da, db);
}

double eval_const(const Expr& e, const ParamMap& params) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return e.number;
    case Expr::Kind::Param: {
      auto it = params.find(e.name);
      if (it == params.end())
        throw EvalError("unbound parameter '" + e.name + "'", print_expr(e));
      return it->second;
    }
    case Expr::Kind::Neg:
      return -eval_const(*e.a, params);
    case Expr::Kind::Binary: {
      const double a = eval_const(*e.a, params);
      const double b = eval_const(*e.b, params);
      switch (e.op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return checked_div(a, b, e);
        case BinaryOp::Pow: return std::pow(a, b);
      }
      break;
    }
    case Expr::Kind::Func: {
      const double a = eval_const(*e.a, params);
      switch (e.func) {
        case FuncKind::Sqrt:
          if (a < 0.0)
            throw EvalError("sqrt of a negative value", print_expr(e));
          return std::sqrt(a);
        case FuncKind::Exp: return std::exp(a);
        case FuncKind::Log:
          if (a <= 0.0)
            throw EvalError("log of a non-positive value", print_expr(e));
          return std::log(a);
        case FuncKind::Sin: return std::sin(a);
        case FuncKind::Cos: return std::cos(a);
      }
      break;
    }
    default:
      break;
  }
  throw EvalError("not a constant expression", print_expr(e));
}

namespace {

// Plain double arithmetic with the same domain checks as jet evaluation, so
// the two evaluation paths reject exactly the same inputs.
struct DoubleGuard {
  double v;
  DoubleGuard operator-() const { return {-v}; }
  friend DoubleGuard operator+(DoubleGuard a, DoubleGuard b) {
    return {a.v + b.v};
  }
  friend DoubleGuard operator-(DoubleGuard a, DoubleGuard b) {
    return {a.v - b.v};
  }
  friend DoubleGuard operator*(DoubleGuard a, DoubleGuard b) {
    return {a.v * b.v};
  }
  friend DoubleGuard operator/(DoubleGuard a, DoubleGuard b) {
    if (b.v == 0.0) throw std::domain_error("division by zero");
    return {a.v / b.v};
  }
  friend DoubleGuard sqrt(DoubleGuard a) {
    if (a.v < 0.0) throw std::domain_error("sqrt of a negative value");
    return {std::sqrt(a.v)};
  }
  friend DoubleGuard exp(DoubleGuard a) { return {std::exp(a.v)}; }
  friend DoubleGuard log(DoubleGuard a) {
    if (a.v <= 0.0) throw std::domain_error("log of a non-positive value");
    return {std::log(a.v)};
  }
  friend DoubleGuard sin(DoubleGuard a) { return {std::sin(a.v)}; }
  friend DoubleGuard cos(DoubleGuard a) { return {std::cos(a.v)}; }
  friend DoubleGuard pow(DoubleGuard a, double q) {
    if (a.v < 0.0 && q != std::round(q))
      throw std::domain_error("pow: non-integer exponent needs a positive base");
    if (a.v == 0.0 && q < 0.0)
      throw std::domain_error("pow: zero base with negative exponent");
    return {std::pow(a.v, q)};
  }
};

}  // namespace

double eval_double(const Expr& e, std::span<const double> x,
                   std::span<const double> y, const ParamMap& params) {
  std::vector<DoubleGuard> gx(x.size()), gy(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = {x[i]};
  for (std::size_t i = 0; i < y.size(); ++i) gy[i] = {y[i]};
  const auto lift = [](double v) { return DoubleGuard{v}; };
  return eval_generic<DoubleGuard>(e, gx, gy, params, lift).v;
}

Jet eval_jet_expr(const Expr& e, std::span<const Jet> x,
                  std::span<const Jet> y, const ParamMap& params,
                  const std::shared_ptr<const JetLayout>& layout) {
  const auto lift = [&layout](double v) { return Jet::constant(layout, v); };
  return eval_generic<Jet>(e, x, y, params, lift);
}

Jet eval_jet(const Expr& e, std::span<const double> x,
             std::span<const double> y, const ParamMap& params) {
  if (x.size() != y.size())
    throw EvalError("dimension mismatch: x and y must have equal length", "");
  auto layout = JetLayout::get(int(x.size()));
  std::vector<Jet> jx, jy;
  jx.reserve(x.size());
  jy.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    jx.push_back(Jet::seed_x(layout, int(i), x[i]));
  for (std::size_t i = 0; i < y.size(); ++i)
    jy.push_back(Jet::seed_y(layout, int(i), y[i]));
  return eval_jet_expr(e, jx, jy, params, layout);
}

}  // namespace finsler
