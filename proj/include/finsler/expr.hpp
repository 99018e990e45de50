#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "finsler/errors.hpp"
#include "finsler/jet.hpp"

namespace finsler {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class FuncKind { Sqrt, Exp, Log, Sin, Cos };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression tree node. Variables are the chart coordinates x1..xn and the
/// fiber coordinates y1..yn (0-based var_index internally); any other
/// identifier is a named parameter bound at spec load time.
struct Expr {
  enum class Kind { Number, Param, VarX, VarY, Neg, Binary, Func };

  Kind kind{};
  double number = 0.0;
  std::string name;
  int var_index = 0;
  BinaryOp op{};
  FuncKind func{};
  ExprPtr a, b;
  int line = 1, column = 1;
};

/// Parse one expression against a declared chart dimension. Throws
/// ParseError with a 1-based source position and the expected token set.
ExprPtr parse_expr(std::string_view source, int dim);

/// Canonical text form with minimal parentheses; parse_expr(print_expr(e))
/// reproduces e node for node.
std::string print_expr(const Expr& e);

bool expr_equal(const Expr& a, const Expr& b);
bool references_x(const Expr& e);
bool references_y(const Expr& e);
void collect_params(const Expr& e, std::set<std::string>& out);
int leaf_count(const Expr& e);
int node_depth(const Expr& e);

using ParamMap = std::map<std::string, double>;

/// Fold a constant subtree (numbers and bound parameters only); throws
/// EvalError when the subtree references a coordinate or an unbound name.
double eval_const(const Expr& e, const ParamMap& params);

/// Plain scalar evaluation at one (x, y).
double eval_double(const Expr& e, std::span<const double> x,
                   std::span<const double> y, const ParamMap& params);

/// Jet-valued evaluation; x and y are seeded jets of one shared layout.
Jet eval_jet_expr(const Expr& e, std::span<const Jet> x,
                  std::span<const Jet> y, const ParamMap& params,
                  const std::shared_ptr<const JetLayout>& layout);

/// Evaluate an expression on seeded coordinates: every derivative of the
/// result against the truncation set is available on the returned jet.
Jet eval_jet(const Expr& e, std::span<const double> x,
             std::span<const double> y, const ParamMap& params);

}  // namespace finsler
