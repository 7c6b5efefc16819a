// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "dmoa/agents.hpp"
#include "dmoa/error.hpp"

namespace dmoa {

namespace {

// expr   := term (('+' | '-') term)*
// term   := factor (('*' | '/') factor)*
// factor := ('+' | '-') factor | number | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  double parse() {
    const double v = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  enum class Op { None, Plus, Minus, Times, Divide };

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("calculator: " + what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n')) ++pos_;
  }

  bool match(std::string_view tok) {
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  Op additive() {
    skip_ws();
    if (match("+")) return Op::Plus;
    if (match("-") || match("−")) return Op::Minus;
    return Op::None;
  }

  Op multiplicative() {
    skip_ws();
    if (match("*") || match("×")) return Op::Times;
    if (match("/") || match("÷")) return Op::Divide;
    return Op::None;
  }

  double expr() {
    double v = term();
    for (Op op = additive(); op != Op::None; op = additive()) {
      const double rhs = term();
      v = op == Op::Plus ? v + rhs : v - rhs;
    }
    return v;
  }

  double term() {
    double v = factor();
    for (Op op = multiplicative(); op != Op::None; op = multiplicative()) {
      const double rhs = factor();
      if (op == Op::Times) {
        v *= rhs;
      } else {
        if (rhs == 0.0) throw Error("calculator: division by zero");
        v /= rhs;
      }
    }
    return v;
  }

  double factor() {
    switch (additive()) {
      case Op::Plus: return factor();
      case Op::Minus: return -factor();
      default: break;
    }
    skip_ws();
    if (match("(")) {
      const double v = expr();
      skip_ws();
      if (!match(")")) fail("expected ')'");
      return v;
    }
    return number();
  }

  double number() {
    const std::size_t start = pos_;
    bool digits = false, dot = false;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c >= '0' && c <= '9') {
        digits = true;
      } else if (c == '.' && !dot) {
        dot = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (!digits) {
      pos_ = start;
      fail(pos_ < s_.size() ? "expected a number" : "unexpected end of expression");
    }
    return std::strtod(std::string(s_.substr(start, pos_ - start)).c_str(), nullptr);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

double evaluate_expression(std::string_view expression) { return Parser(expression).parse(); }

std::string render_number(double value) {
  if (value == 0.0) return "0";
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::string calculator_tool(std::string_view expression) { return render_number(evaluate_expression(expression)); }

}  // namespace dmoa
