#include "kolmo/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace kolmo {

ParseError::ParseError(const std::string& msg, int line, int column)
    : ConfigError([&] {
        std::ostringstream os;
        os << "parse error at line " << line << ", column " << column << ": " << msg;
        return os.str();
      }()),
      line_(line),
      column_(column) {}

bool ExprNode::operator==(const ExprNode& o) const {
  if (op != o.op) return false;
  if (op == Op::Num && value != o.value) return false;
  if (op == Op::Var && var != o.var) return false;
  return args == o.args;
}

namespace {

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::string text;
  double value = 0.0;
  int line = 1;
  int col = 1;
};

constexpr int kMaxDepth = 200;

struct FuncInfo {
  const char* name;
  Op op;
  int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Op::Sin, 1},  {"cos", Op::Cos, 1},   {"exp", Op::Exp, 1}, {"abs", Op::Abs, 1},
    {"tanh", Op::Tanh, 1}, {"step", Op::Step, 1}, {"min", Op::Min, 2}, {"max", Op::Max, 2},
    {"powb", Op::Powb, 2},
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (i_ >= s_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = s_[i_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i_;
        while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
        t.kind = Tok::Ident;
        t.text = s_.substr(i_, j - i_);
        advance(j - i_);
      } else {
        switch (c) {
          case '+': t.kind = Tok::Plus; break;
          case '-': t.kind = Tok::Minus; break;
          case '*': t.kind = Tok::Star; break;
          case '/': t.kind = Tok::Slash; break;
          case '^': t.kind = Tok::Caret; break;
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case ',': t.kind = Tok::Comma; break;
          default: {
            std::string shown = std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "\\x" + hex(c);
            throw ParseError("unexpected character '" + shown + "'", line_, col_);
          }
        }
        t.text = std::string(1, c);
        advance(1);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static std::string hex(char c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned char>(c));
    return buf;
  }

  void skip_space() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) advance(1);
  }

  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i_) {
      if (s_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void lex_number(Token& t) {
    std::size_t j = i_;
    bool digits = false;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j, digits = true;
    if (j < s_.size() && s_[j] == '.') {
      ++j;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j, digits = true;
    }
    if (!digits) throw ParseError("malformed number", line_, col_);
    if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
      if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
        while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
        j = k;
      } else {
        throw ParseError("malformed exponent", line_, col_ + static_cast<int>(j - i_));
      }
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + i_, s_.data() + j, v);
    if (res.ec != std::errc() || !std::isfinite(v)) throw ParseError("number out of range", line_, col_);
    t.kind = Tok::Num;
    t.value = v;
    t.text = s_.substr(i_, j - i_);
    advance(j - i_);
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, int max_var) : toks_(std::move(toks)), max_var_(max_var) {}

  ExprNode parse() {
    ExprNode e = additive(0);
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().col); }
  void expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what);
    ++pos_;
  }
  void guard(int depth) const {
    if (depth > kMaxDepth) fail("expression nested too deeply");
  }

  static ExprNode binary(Op op, ExprNode a, ExprNode b) {
    ExprNode n;
    n.op = op;
    n.args.push_back(std::move(a));
    n.args.push_back(std::move(b));
    return n;
  }

  ExprNode additive(int depth) {
    guard(depth);
    ExprNode lhs = multiplicative(depth + 1);
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Op op = take().kind == Tok::Plus ? Op::Add : Op::Sub;
      lhs = binary(op, std::move(lhs), multiplicative(depth + 1));
    }
    return lhs;
  }

  ExprNode multiplicative(int depth) {
    guard(depth);
    ExprNode lhs = unary(depth + 1);
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Op op = take().kind == Tok::Star ? Op::Mul : Op::Div;
      lhs = binary(op, std::move(lhs), unary(depth + 1));
    }
    return lhs;
  }

  ExprNode unary(int depth) {
    guard(depth);
    if (peek().kind == Tok::Minus) {
      ++pos_;
      ExprNode n;
      n.op = Op::Neg;
      n.args.push_back(unary(depth + 1));
      return n;
    }
    if (peek().kind == Tok::Plus) {
      ++pos_;
      return unary(depth + 1);
    }
    return power(depth + 1);
  }

  // Right associative; the exponent may carry its own unary sign.
  ExprNode power(int depth) {
    guard(depth);
    ExprNode base = primary(depth + 1);
    if (peek().kind == Tok::Caret) {
      ++pos_;
      return binary(Op::Pow, std::move(base), unary(depth + 1));
    }
    return base;
  }

  ExprNode primary(int depth) {
    guard(depth);
    const Token& t = peek();
    if (t.kind == Tok::Num) {
      ExprNode n;
      n.op = Op::Num;
      n.value = take().value;
      return n;
    }
    if (t.kind == Tok::LParen) {
      ++pos_;
      ExprNode e = additive(depth + 1);
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind == Tok::Ident) {
      const Token id = take();
      if (peek().kind == Tok::LParen) return call(id, depth);
      ExprNode n;
      if (id.text == "t") {
        n.op = Op::Time;
        return n;
      }
      if (id.text.size() >= 2 && id.text[0] == 'x') {
        int k = 0;
        auto r = std::from_chars(id.text.data() + 1, id.text.data() + id.text.size(), k);
        if (r.ec == std::errc() && r.ptr == id.text.data() + id.text.size() && id.text[1] != '0' && k >= 1) {
          if (k > max_var_)
            throw ParseError("variable '" + id.text + "' exceeds dimension " + std::to_string(max_var_), id.line, id.col);
          n.op = Op::Var;
          n.var = k - 1;
          return n;
        }
      }
      throw ParseError("unknown identifier '" + id.text + "'", id.line, id.col);
    }
    if (t.kind == Tok::End) fail("unexpected end of input");
    fail("unexpected '" + t.text + "'");
  }

  ExprNode call(const Token& id, int depth) {
    const FuncInfo* info = nullptr;
    for (const auto& f : kFuncs)
      if (id.text == f.name) info = &f;
    if (!info) throw ParseError("unknown function '" + id.text + "'", id.line, id.col);
    expect(Tok::LParen, "'('");
    ExprNode n;
    n.op = info->op;
    if (peek().kind != Tok::RParen) {
      n.args.push_back(additive(depth + 1));
      while (peek().kind == Tok::Comma) {
        ++pos_;
        n.args.push_back(additive(depth + 1));
      }
    }
    expect(Tok::RParen, "')'");
    if (static_cast<int>(n.args.size()) != info->arity) {
      throw ParseError("function '" + id.text + "' takes " + std::to_string(info->arity) + " argument(s), got " +
                           std::to_string(n.args.size()),
                       id.line, id.col);
    }
    return n;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int max_var_;
};

const char* func_name(Op op) {
  for (const auto& f : kFuncs)
    if (f.op == op) return f.name;
  return "?";
}

void print(const ExprNode& n, std::string& out) {
  switch (n.op) {
    case Op::Num: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case Op::Time: out += "t"; return;
    case Op::Var: out += "x" + std::to_string(n.var + 1); return;
    case Op::Neg:
      out += "(-";
      print(n.args[0], out);
      out += ")";
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: {
      const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? " * " : n.op == Op::Div ? " / " : " ^ ";
      out += "(";
      print(n.args[0], out);
      out += sym;
      print(n.args[1], out);
      out += ")";
      return;
    }
    default:
      out += func_name(n.op);
      out += "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print(n.args[i], out);
      }
      out += ")";
  }
}

}  // namespace

Expr::Expr() { compile(); }

Expr Expr::constant(double v) {
  Expr e;
  e.root_.op = Op::Num;
  e.root_.value = v;
  e.compile();
  return e;
}

Expr Expr::parse(const std::string& src, int max_var) {
  Lexer lx(src);
  Parser p(lx.run(), max_var);
  Expr e;
  e.root_ = p.parse();
  e.compile();
  return e;
}

void Expr::compile() {
  prog_.clear();
  uses_t_ = uses_x_ = has_step_ = false;
  int depth = 0;
  max_stack_ = 1;
  auto emit = [&](auto&& self, const ExprNode& n) -> void {
    for (const auto& a : n.args) self(self, a);
    prog_.push_back({n.op, n.value, n.var});
    if (n.op == Op::Time) uses_t_ = true;
    if (n.op == Op::Var) uses_x_ = true;
    if (n.op == Op::Step) has_step_ = true;
    if (n.op == Op::Num || n.op == Op::Time || n.op == Op::Var)
      ++depth;
    else
      depth -= static_cast<int>(n.args.size()) - 1;
    max_stack_ = std::max(max_stack_, depth);
  };
  emit(emit, root_);
}

double Expr::eval(double t, std::span<const double> x) const {
  constexpr int kInline = 64;
  double inline_stack[kInline];
  inline_stack[0] = 0.0;
  std::vector<double> heap;
  double* st = inline_stack;
  if (max_stack_ > kInline) {
    heap.resize(max_stack_);
    st = heap.data();
  }
  int sp = 0;
  for (const Instr& in : prog_) {
    double r = 0.0;
    switch (in.op) {
      case Op::Num: st[sp++] = in.value; continue;
      case Op::Time: st[sp++] = t; continue;
      case Op::Var:
        if (in.var >= static_cast<int>(x.size())) throw EvalError("variable x" + std::to_string(in.var + 1) + " not supplied");
        st[sp++] = x[in.var];
        continue;
      case Op::Neg: r = -st[sp - 1]; st[sp - 1] = r; continue;
      case Op::Sin: r = std::sin(st[sp - 1]); break;
      case Op::Cos: r = std::cos(st[sp - 1]); break;
      case Op::Exp: r = std::exp(st[sp - 1]); break;
      case Op::Abs: r = std::abs(st[sp - 1]); break;
      case Op::Tanh: r = std::tanh(st[sp - 1]); break;
      case Op::Step: r = st[sp - 1] >= 0.0 ? 1.0 : 0.0; break;
      default: {
        const double a = st[sp - 2], b = st[sp - 1];
        --sp;
        switch (in.op) {
          case Op::Add: r = a + b; break;
          case Op::Sub: r = a - b; break;
          case Op::Mul: r = a * b; break;
          case Op::Div:
            if (b == 0.0) throw EvalError("division by zero");
            r = a / b;
            break;
          case Op::Pow: r = std::pow(a, b); break;
          case Op::Min: r = std::min(a, b); break;
          case Op::Max: r = std::max(a, b); break;
          case Op::Powb: r = std::pow(std::abs(a), b); break;
          default: throw EvalError("internal: bad opcode");
        }
      }
    }
    if (!std::isfinite(r)) throw EvalError("non-finite value in expression");
    st[sp - 1] = r;
  }
  const double v = st[0];
  if (!std::isfinite(v)) throw EvalError("non-finite value in expression");
  return v;
}

std::string Expr::to_string() const {
  std::string out;
  print(root_, out);
  return out;
}

double Expr::constant_value() const {
  if (!is_constant()) throw ConfigError("expression is not constant");
  return eval(0.0, std::span<const double>());
}

}  // namespace kolmo
