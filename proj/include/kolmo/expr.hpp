#pragma once

#include "kolmo/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace kolmo {

/// Syntax error, unknown identifier or arity mismatch. `line`/`column` are 1-based.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Division by zero or a non-finite intermediate during evaluation.
class EvalError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class Op {
  Num, Time, Var,
  Add, Sub, Mul, Div, Pow, Neg,
  Sin, Cos, Exp, Abs, Tanh, Step,
  Min, Max, Powb,
};

/// Expression tree node. `var` is the 0-based x index for Op::Var.
struct ExprNode {
  Op op = Op::Num;
  double value = 0.0;
  int var = 0;
  std::vector<ExprNode> args;

  bool operator==(const ExprNode& o) const;
};

/// Compiled coefficient expression over (t, x1..xN).
class Expr {
 public:
  Expr();  // constant 0
  static Expr constant(double v);
  /// Parses `src`; variables x1..x{max_var} are accepted.
  static Expr parse(const std::string& src, int max_var);

  double eval(double t, std::span<const double> x) const;
  double eval(double t, const Vec& x) const { return eval(t, std::span<const double>(x.data(), x.size())); }

  const ExprNode& ast() const { return root_; }
  /// Fully parenthesized source; numbers with 17 significant digits.
  std::string to_string() const;

  bool is_constant() const { return !uses_t_ && !uses_x_; }
  bool depends_on_x() const { return uses_x_; }
  bool depends_on_t() const { return uses_t_; }
  /// Contains step(): may jump along any curve in (t, x).
  bool has_step() const { return has_step_; }
  /// Value of a constant expression.
  double constant_value() const;

 private:
  struct Instr {
    Op op;
    double value;
    int var;
  };
  void compile();

  ExprNode root_;
  std::vector<Instr> prog_;
  int max_stack_ = 1;
  bool uses_t_ = false;
  bool uses_x_ = false;
  bool has_step_ = false;
};

/// Convenience wrapper: Expr::parse(src, max_var).
inline Expr parse_expr(const std::string& src, int max_var) { return Expr::parse(src, max_var); }

}  // namespace kolmo
