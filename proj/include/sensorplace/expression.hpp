#pragma once

// Recursive-descent parser for constraint inequalities such as
// "x^2 + y^2 <= 25". Grammar:
//
//   comparison := expr ('<=' | '>=' | '<' | '>') expr
//   expr       := term (('+' | '-') term)*
//   term       := unary (('*' | '/') unary)*
//   unary      := '-' unary | power
//   power      := primary (('^' | '**') unary)?      right associative
//   primary    := number | variable | func '(' expr ')' | '(' expr ')'
//
// Variables are x, y, z. Functions: sin cos sqrt abs exp log.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sensorplace/error.hpp"

namespace sensorplace::expr {

enum class Function { Sin, Cos, Sqrt, Abs, Exp, Log };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Comparison { Less, LessEqual, Greater, GreaterEqual };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number { double value; };
struct Variable { char name; };  // 'x', 'y' or 'z'
struct Negate { NodePtr operand; };
struct Binary { BinaryOp op; NodePtr lhs; NodePtr rhs; };
struct Call { Function fn; NodePtr arg; };

struct Node {
  std::variant<Number, Variable, Negate, Binary, Call> value;
};

struct Bindings {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> z;
};

inline std::string_view function_name(Function fn) {
  switch (fn) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Sqrt: return "sqrt";
    case Function::Abs: return "abs";
    case Function::Exp: return "exp";
    case Function::Log: return "log";
  }
  return "?";
}

inline std::optional<Function> lookup_function(std::string_view name) {
  if (name == "sin") return Function::Sin;
  if (name == "cos") return Function::Cos;
  if (name == "sqrt") return Function::Sqrt;
  if (name == "abs") return Function::Abs;
  if (name == "exp") return Function::Exp;
  if (name == "log") return Function::Log;
  return std::nullopt;
}

inline double evaluate(const Node& node, const Bindings& env) {
  struct Visitor {
    const Bindings& env;
    double operator()(const Number& n) const { return n.value; }
    double operator()(const Variable& v) const {
      switch (v.name) {
        case 'x': return env.x;
        case 'y': return env.y;
        default:
          if (!env.z) throw Error(ErrorCode::InvalidPoint, "expression uses z but the point is 2-D");
          return *env.z;
      }
    }
    double operator()(const Negate& n) const { return -evaluate(*n.operand, env); }
    double operator()(const Binary& b) const {
      const double l = evaluate(*b.lhs, env);
      const double r = evaluate(*b.rhs, env);
      switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div: return l / r;
        case BinaryOp::Pow: return std::pow(l, r);
      }
      return 0.0;
    }
    double operator()(const Call& c) const {
      const double a = evaluate(*c.arg, env);
      switch (c.fn) {
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Sqrt: return std::sqrt(a);
        case Function::Abs: return std::abs(a);
        case Function::Exp: return std::exp(a);
        case Function::Log: return std::log(a);
      }
      return 0.0;
    }
  };
  return std::visit(Visitor{env}, node.value);
}

inline bool uses_variable(const Node& node, char name) {
  struct Visitor {
    char name;
    bool operator()(const Number&) const { return false; }
    bool operator()(const Variable& v) const { return v.name == name; }
    bool operator()(const Negate& n) const { return uses_variable(*n.operand, name); }
    bool operator()(const Binary& b) const { return uses_variable(*b.lhs, name) || uses_variable(*b.rhs, name); }
    bool operator()(const Call& c) const { return uses_variable(*c.arg, name); }
  };
  return std::visit(Visitor{name}, node.value);
}

/// Fully parenthesized rendering; reparses to an equivalent tree.
inline std::string to_string(const Node& node) {
  struct Visitor {
    std::string operator()(const Number& n) const {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      return buf;
    }
    std::string operator()(const Variable& v) const { return std::string(1, v.name); }
    std::string operator()(const Negate& n) const { return "(-" + to_string(*n.operand) + ")"; }
    std::string operator()(const Binary& b) const {
      static constexpr const char* kOps[] = {" + ", " - ", " * ", " / ", " ^ "};
      return "(" + to_string(*b.lhs) + kOps[static_cast<int>(b.op)] + to_string(*b.rhs) + ")";
    }
    std::string operator()(const Call& c) const {
      return std::string(function_name(c.fn)) + "(" + to_string(*c.arg) + ")";
    }
  };
  return std::visit(Visitor{}, node.value);
}

inline std::string_view comparison_symbol(Comparison c) {
  switch (c) {
    case Comparison::Less: return "<";
    case Comparison::LessEqual: return "<=";
    case Comparison::Greater: return ">";
    case Comparison::GreaterEqual: return ">=";
  }
  return "?";
}

/// A parsed "lhs <op> rhs" comparison.
class Inequality {
 public:
  Inequality(NodePtr lhs, Comparison cmp, NodePtr rhs)
      : lhs_(std::move(lhs)), rhs_(std::move(rhs)), cmp_(cmp),
        uses_z_(uses_variable(*lhs_, 'z') || uses_variable(*rhs_, 'z')) {}

  bool holds(const Bindings& env) const {
    const double l = evaluate(*lhs_, env);
    const double r = evaluate(*rhs_, env);
    switch (cmp_) {
      case Comparison::Less: return l < r;
      case Comparison::LessEqual: return l <= r;
      case Comparison::Greater: return l > r;
      case Comparison::GreaterEqual: return l >= r;
    }
    return false;
  }

  bool uses_z() const noexcept { return uses_z_; }
  Comparison comparison() const noexcept { return cmp_; }
  const Node& lhs() const noexcept { return *lhs_; }
  const Node& rhs() const noexcept { return *rhs_; }

  std::string to_string() const {
    return expr::to_string(*lhs_) + " " + std::string(comparison_symbol(cmp_)) + " " + expr::to_string(*rhs_);
  }

 private:
  NodePtr lhs_;
  NodePtr rhs_;
  Comparison cmp_;
  bool uses_z_;
};

namespace detail {

enum class TokenKind { Number, Identifier, Plus, Minus, Star, Slash, Caret, LParen, RParen, Compare, End };

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
  Comparison cmp = Comparison::Less;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ >= src_.size()) {
        out.push_back({TokenKind::End, pos_, {}});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  Token next() {
    const std::size_t start = pos_;
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      return {TokenKind::Identifier, start, src_.substr(start, pos_ - start)};
    }
    auto single = [&](TokenKind k) {
      ++pos_;
      return Token{k, start, src_.substr(start, 1)};
    };
    switch (c) {
      case '+': return single(TokenKind::Plus);
      case '-': return single(TokenKind::Minus);
      case '/': return single(TokenKind::Slash);
      case '^': return single(TokenKind::Caret);
      case '(': return single(TokenKind::LParen);
      case ')': return single(TokenKind::RParen);
      case '*':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
          pos_ += 2;
          return {TokenKind::Caret, start, src_.substr(start, 2)};
        }
        return single(TokenKind::Star);
      case '<':
      case '>': {
        const bool eq = pos_ + 1 < src_.size() && src_[pos_ + 1] == '=';
        pos_ += eq ? 2 : 1;
        Token t{TokenKind::Compare, start, src_.substr(start, pos_ - start)};
        t.cmp = c == '<' ? (eq ? Comparison::LessEqual : Comparison::Less)
                         : (eq ? Comparison::GreaterEqual : Comparison::Greater);
        return t;
      }
      default: break;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start,
                     {"number", "identifier", "(", "-"});
  }

  Token number(std::size_t start) {
    auto digits = [&] {
      std::size_t count = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++count;
      }
      return count;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) throw ParseError("malformed number", start, {"digit"});
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // "2e" is 2 followed by identifier e
    }
    Token t{TokenKind::Number, start, src_.substr(start, pos_ - start)};
    const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (res.ec != std::errc{}) throw ParseError("number out of range", start, {"number"});
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(Lexer(src).run()) {}

  Inequality comparison() {
    NodePtr lhs = expression();
    if (peek().kind != TokenKind::Compare) {
      fail("expected comparison operator", {"<=", ">=", "<", ">", "+", "-", "*", "/", "^"});
    }
    const Comparison cmp = advance().cmp;
    NodePtr rhs = expression();
    if (peek().kind != TokenKind::End) {
      fail("unexpected trailing input", {"end of input", "+", "-", "*", "/", "^"});
    }
    return Inequality(std::move(lhs), cmp, std::move(rhs));
  }

 private:
  static NodePtr make(auto value) { return std::make_shared<const Node>(Node{std::move(value)}); }

  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) const {
    const Token& t = peek();
    const std::string found = t.kind == TokenKind::End ? "end of input" : "'" + std::string(t.text) + "'";
    throw ParseError(what + ", found " + found, t.offset, std::move(expected));
  }

  NodePtr expression() {
    NodePtr lhs = term();
    while (peek().kind == TokenKind::Plus || peek().kind == TokenKind::Minus) {
      const BinaryOp op = advance().kind == TokenKind::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = make(Binary{op, lhs, term()});
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (peek().kind == TokenKind::Star || peek().kind == TokenKind::Slash) {
      const BinaryOp op = advance().kind == TokenKind::Star ? BinaryOp::Mul : BinaryOp::Div;
      lhs = make(Binary{op, lhs, unary()});
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == TokenKind::Minus) {
      advance();
      return make(Negate{unary()});
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek().kind == TokenKind::Caret) {
      advance();
      return make(Binary{BinaryOp::Pow, base, unary()});
    }
    return base;
  }

  NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number:
        advance();
        return make(Number{t.number});
      case TokenKind::LParen: {
        advance();
        NodePtr inner = expression();
        if (peek().kind != TokenKind::RParen) fail("unbalanced parenthesis", {")"});
        advance();
        return inner;
      }
      case TokenKind::Identifier: {
        if (t.text == "x" || t.text == "y" || t.text == "z") {
          advance();
          return make(Variable{t.text[0]});
        }
        if (const auto fn = lookup_function(t.text)) {
          advance();
          if (peek().kind != TokenKind::LParen) fail("function call needs '('", {"("});
          advance();
          NodePtr arg = expression();
          if (peek().kind != TokenKind::RParen) fail("unbalanced parenthesis", {")"});
          advance();
          return make(Call{*fn, arg});
        }
        throw Error(ErrorCode::UnknownVariable,
                    "unknown identifier '" + std::string(t.text) + "' at offset " + std::to_string(t.offset));
      }
      default:
        fail("expected operand", {"number", "identifier", "(", "-"});
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a comparison. Throws ParseError (with byte offset and the expected
/// token set) on malformed input and Error{UnknownVariable} on identifiers
/// other than x, y, z or a known function.
inline Inequality parse(std::string_view text) { return detail::Parser(text).comparison(); }

}  // namespace sensorplace::expr
