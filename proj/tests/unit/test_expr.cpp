#include "kolmo/expr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace kolmo;

namespace {

double ev(const std::string& s, double t = 0.0, std::vector<double> x = {0.0, 0.0, 0.0}) {
  return Expr::parse(s, 3).eval(t, std::span<const double>(x));
}

}  // namespace

TEST(Expr, Literal) {
  const Expr e = Expr::parse("1", 2);
  EXPECT_TRUE(e.is_constant());
  EXPECT_EQ(e.constant_value(), 1.0);
  EXPECT_EQ(e.ast().op, Op::Num);
}

TEST(Expr, GrammarForcedShape) {
  const Expr e = Expr::parse("1 + 0.25*sin(x2)", 2);
  const ExprNode& r = e.ast();
  ASSERT_EQ(r.op, Op::Add);
  ASSERT_EQ(r.args.size(), 2u);
  EXPECT_EQ(r.args[0].op, Op::Num);
  ASSERT_EQ(r.args[1].op, Op::Mul);
  EXPECT_EQ(r.args[1].args[0].value, 0.25);
  ASSERT_EQ(r.args[1].args[1].op, Op::Sin);
  EXPECT_EQ(r.args[1].args[1].args[0].op, Op::Var);
  EXPECT_EQ(r.args[1].args[1].args[0].var, 1);
}

TEST(Expr, StepSemantics) {
  EXPECT_EQ(ev("1 + 0.5*step(t-0.5)", 0.75), 1.5);
  EXPECT_EQ(ev("1 + 0.5*step(t-0.5)", 0.5), 1.5);
  EXPECT_EQ(ev("1 + 0.5*step(t-0.5)", 0.25), 1.0);
  EXPECT_TRUE(Expr::parse("step(t)", 1).has_step());
}

TEST(Expr, Precedence) {
  EXPECT_EQ(ev("2^3^2"), 512.0);        // right associative
  EXPECT_EQ(ev("-2^2"), -4.0);          // ^ binds tighter than unary minus
  EXPECT_EQ(ev("2*3+4"), 10.0);
  EXPECT_EQ(ev("2-3-4"), -5.0);
  EXPECT_EQ(ev("8/4/2"), 1.0);
  EXPECT_EQ(ev("min(3, max(1, 2))"), 2.0);
  EXPECT_NEAR(ev("powb(x1, 0.5)", 0, {-4.0, 0, 0}), 2.0, 1e-15);
  EXPECT_NEAR(ev("tanh(x3) + abs(x2) + exp(0) + cos(0)", 0, {0, -3.0, 0}), 5.0, 1e-15);
  EXPECT_NEAR(ev("1e-3 * 2.5E2"), 0.25, 1e-15);
}

TEST(Expr, ErrorsCarryPositions) {
  try {
    Expr::parse("1 +\n  foo(x1)", 2);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 3);
  }
  EXPECT_THROW(Expr::parse("x3", 2), ParseError);
  EXPECT_THROW(Expr::parse("sin(1, 2)", 2), ParseError);
  EXPECT_THROW(Expr::parse("min(1)", 2), ParseError);
  EXPECT_THROW(Expr::parse("(1 + 2", 2), ParseError);
  EXPECT_THROW(Expr::parse("1 2", 2), ParseError);
  EXPECT_THROW(Expr::parse("", 2), ParseError);
  EXPECT_THROW(Expr::parse("x0", 2), ParseError);
}

TEST(Expr, DivisionByZeroIsAnEvaluationError) {
  EXPECT_THROW(ev("1/x1"), EvalError);
  EXPECT_THROW(ev("exp(1000)"), EvalError);
  EXPECT_NO_THROW(ev("1/(x1+1)"));
}

TEST(Expr, DependencyFlags) {
  EXPECT_TRUE(Expr::parse("t + 1", 2).depends_on_t());
  EXPECT_FALSE(Expr::parse("t + 1", 2).depends_on_x());
  EXPECT_TRUE(Expr::parse("x1", 2).depends_on_x());
}

TEST(Expr, PrintParseRoundTrip) {
  for (const char* s : {"1 + 0.25*sin(x2)", "-x1^2^0.5", "min(t, -(-3))", "powb(x1 - x2, 1/3)",
                        "0.1 + 1e-17 * step(-t)", "((((x3))))"}) {
    const Expr a = Expr::parse(s, 3);
    const Expr b = Expr::parse(a.to_string(), 3);
    EXPECT_TRUE(a.ast() == b.ast()) << s << " -> " << a.to_string();
  }
  // 17 significant digits make literals round-trip exactly.
  const Expr c = Expr::parse("0.1", 1);
  EXPECT_EQ(Expr::parse(c.to_string(), 1).constant_value(), 0.1);
}

TEST(Expr, RandomTokenStreamsNeverCrash) {
  const std::vector<std::string> tokens = {"1",   "2.5", "x1",  "x2", "x9", "t",    "+",    "-",    "*",
                                           "/",   "^",   "(",   ")",  ",",  "sin",  "min",  "powb", "step",
                                           "foo", "@",   "1e",  ".",  "e",  "\n",   " ",    "max(", "abs"};
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - 1), len(0, 12);
  int parsed = 0, rejected = 0;
  for (int k = 0; k < 20000; ++k) {
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += tokens[pick(rng)];
    try {
      const Expr e = Expr::parse(s, 2);
      ++parsed;
      const double x[2] = {0.3, -0.7};
      try {
        e.eval(0.5, std::span<const double>(x, 2));
      } catch (const EvalError&) {
      }
    } catch (const ParseError& e) {
      ++rejected;
      EXPECT_GE(e.line(), 1);
      EXPECT_GE(e.column(), 1);
    }
  }
  EXPECT_GT(parsed, 0);
  EXPECT_GT(rejected, 0);
}

TEST(Expr, UnknownIdentifiersAlwaysRejected) {
  for (const char* s : {"y1", "sinh(1)", "T", "x", "pi", "X1", "stepp(t)"})
    EXPECT_THROW(Expr::parse(s, 3), ParseError) << s;
}
