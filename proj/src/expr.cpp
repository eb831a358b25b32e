#include "finsdet/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace finsdet {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

struct Token {
  enum class Kind { number, ident, op, lparen, rparen, end };
  Kind kind = Kind::end;
  char op = 0;
  double value = 0.0;
  std::string text;
  size_t col = 0;  // 1-based
};

[[noreturn]] void fail(const std::string& what, size_t col) {
  throw ConfigError("expression: " + what + " at column " +
                    std::to_string(col));
}

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    tok_ = Token{};
    tok_.col = pos_ + 1;
    if (pos_ >= s_.size()) {
      tok_.kind = Token::Kind::end;
      return;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number(false);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             std::isalnum(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      tok_.kind = Token::Kind::ident;
      tok_.text = s_.substr(start, pos_ - start);
      return;
    }
    switch (c) {
      case '+': case '-': case '*': case '/': case '^':
        tok_.kind = Token::Kind::op;
        tok_.op = c;
        ++pos_;
        return;
      case '(':
        tok_.kind = Token::Kind::lparen;
        ++pos_;
        return;
      case ')':
        tok_.kind = Token::Kind::rparen;
        ++pos_;
        return;
      default:
        fail(std::string("unexpected character '") + c + "'", pos_ + 1);
    }
  }

  void lex_number(bool negative) {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      size_t mark = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() &&
               std::isdigit(static_cast<unsigned char>(s_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // 'e' belongs to something else; stop the literal
      }
    }
    tok_.kind = Token::Kind::number;
    tok_.text = s_.substr(start, pos_ - start);
    tok_.value = std::strtod(tok_.text.c_str(), nullptr);
    if (negative) tok_.value = -tok_.value;
  }

  const std::string& s_;
  size_t pos_ = 0;
  Token tok_;
  friend class Parser;
};

class Parser {
 public:
  Parser(const std::string& s, int dim) : lex_(s), dim_(dim) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    if (lex_.peek().kind != Token::Kind::end)
      fail("trailing input", lex_.peek().col);
    return e;
  }

 private:
  static NodePtr make(ExprNode n) {
    return std::make_shared<const ExprNode>(std::move(n));
  }

  NodePtr parse_expr() {
    NodePtr left = parse_term();
    while (lex_.peek().kind == Token::Kind::op &&
           (lex_.peek().op == '+' || lex_.peek().op == '-')) {
      char op = lex_.take().op;
      NodePtr right = parse_term();
      ExprNode n;
      n.kind = op == '+' ? ExprNode::Kind::add : ExprNode::Kind::sub;
      n.lhs = left;
      n.rhs = right;
      left = make(std::move(n));
    }
    return left;
  }

  NodePtr parse_term() {
    NodePtr left = parse_factor();
    while (lex_.peek().kind == Token::Kind::op &&
           (lex_.peek().op == '*' || lex_.peek().op == '/')) {
      char op = lex_.take().op;
      NodePtr right = parse_factor();
      ExprNode n;
      n.kind = op == '*' ? ExprNode::Kind::mul : ExprNode::Kind::div;
      n.lhs = left;
      n.rhs = right;
      left = make(std::move(n));
    }
    return left;
  }

  NodePtr parse_factor() {
    NodePtr b = parse_base();
    if (lex_.peek().kind == Token::Kind::op && lex_.peek().op == '^') {
      lex_.take();
      NodePtr e = parse_factor();  // right-associative
      ExprNode n;
      n.kind = ExprNode::Kind::pow;
      n.lhs = b;
      n.rhs = e;
      return make(std::move(n));
    }
    return b;
  }

  NodePtr parse_base() {
    Token t = lex_.peek();
    // A '-' where a base is expected starts a negative numeric literal.
    if (t.kind == Token::Kind::op && t.op == '-') {
      size_t col = t.col;
      lex_.take();
      Token num = lex_.peek();
      if (num.kind != Token::Kind::number)
        fail("expected number after unary '-'", col);
      lex_.take();
      ExprNode n;
      n.kind = ExprNode::Kind::number;
      n.number = -num.value;
      return make(std::move(n));
    }
    if (t.kind == Token::Kind::number) {
      lex_.take();
      ExprNode n;
      n.kind = ExprNode::Kind::number;
      n.number = t.value;
      return make(std::move(n));
    }
    if (t.kind == Token::Kind::lparen) {
      lex_.take();
      NodePtr e = parse_expr();
      expect_rparen(t.col);
      return e;
    }
    if (t.kind == Token::Kind::ident) {
      lex_.take();
      if (t.text == "sin" || t.text == "cos" || t.text == "exp" ||
          t.text == "sqrt") {
        if (lex_.peek().kind != Token::Kind::lparen)
          fail("expected '(' after '" + t.text + "'", lex_.peek().col);
        size_t pcol = lex_.take().col;
        NodePtr arg = parse_expr();
        expect_rparen(pcol);
        ExprNode n;
        n.kind = ExprNode::Kind::call;
        n.func = t.text == "sin"   ? ExprFunc::sin
                 : t.text == "cos" ? ExprFunc::cos
                 : t.text == "exp" ? ExprFunc::exp
                                   : ExprFunc::sqrt;
        n.lhs = arg;
        return make(std::move(n));
      }
      return make_variable(t);
    }
    fail("expected a value", t.col);
  }

  NodePtr make_variable(const Token& t) {
    if (t.text.size() >= 2 && t.text[0] == 'x' && t.text[1] != '0') {
      bool digits = true;
      for (size_t i = 1; i < t.text.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(t.text[i]));
      if (digits) {
        int k = std::atoi(t.text.c_str() + 1);
        if (k >= 1 && k <= dim_) {
          ExprNode n;
          n.kind = ExprNode::Kind::variable;
          n.var = k - 1;
          return make(std::move(n));
        }
        fail("unknown identifier '" + t.text + "' (have x1..x" +
                 std::to_string(dim_) + ")",
             t.col);
      }
    }
    fail("unknown identifier '" + t.text + "'", t.col);
  }

  void expect_rparen(size_t open_col) {
    if (lex_.peek().kind != Token::Kind::rparen)
      fail("unbalanced '(' ", open_col);
    lex_.take();
  }

  Lexer lex_;
  int dim_;
};

double eval_node(const ExprNode& n, std::span<const double> x) {
  switch (n.kind) {
    case ExprNode::Kind::number:
      return n.number;
    case ExprNode::Kind::variable:
      return x[static_cast<size_t>(n.var)];
    case ExprNode::Kind::add:
      return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case ExprNode::Kind::sub:
      return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case ExprNode::Kind::mul:
      return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case ExprNode::Kind::div: {
      const double d = eval_node(*n.rhs, x);
      if (d == 0.0) throw NumericalError("expression: division by zero");
      return eval_node(*n.lhs, x) / d;
    }
    case ExprNode::Kind::pow:
      return std::pow(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    case ExprNode::Kind::call: {
      const double a = eval_node(*n.lhs, x);
      switch (n.func) {
        case ExprFunc::sin:
          return std::sin(a);
        case ExprFunc::cos:
          return std::cos(a);
        case ExprFunc::exp:
          return std::exp(a);
        case ExprFunc::sqrt:
          if (a < 0.0)
            throw NumericalError("expression: sqrt of negative value");
          return std::sqrt(a);
      }
      break;
    }
  }
  throw NumericalError("expression: corrupt node");
}

void print_node(const ExprNode& n, std::string& out) {
  char buf[40];
  switch (n.kind) {
    case ExprNode::Kind::number:
      if (n.number < 0.0) {
        std::snprintf(buf, sizeof(buf), "(%.17g)", n.number);
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", n.number);
      }
      out += buf;
      return;
    case ExprNode::Kind::variable:
      out += "x" + std::to_string(n.var + 1);
      return;
    case ExprNode::Kind::call:
      switch (n.func) {
        case ExprFunc::sin: out += "sin("; break;
        case ExprFunc::cos: out += "cos("; break;
        case ExprFunc::exp: out += "exp("; break;
        case ExprFunc::sqrt: out += "sqrt("; break;
      }
      print_node(*n.lhs, out);
      out += ")";
      return;
    default:
      break;
  }
  const char* op = n.kind == ExprNode::Kind::add   ? "+"
                   : n.kind == ExprNode::Kind::sub ? "-"
                   : n.kind == ExprNode::Kind::mul ? "*"
                   : n.kind == ExprNode::Kind::div ? "/"
                                                   : "^";
  out += "(";
  print_node(*n.lhs, out);
  out += op;
  print_node(*n.rhs, out);
  out += ")";
}

bool equal_nodes(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprNode::Kind::number:
      return a.number == b.number;
    case ExprNode::Kind::variable:
      return a.var == b.var;
    case ExprNode::Kind::call:
      return a.func == b.func && equal_nodes(*a.lhs, *b.lhs);
    default:
      return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
  }
}

}  // namespace

Expression Expression::parse(const std::string& source, int dim) {
  if (dim < 1) throw InputError("expression: dimension must be >= 1");
  Expression e;
  e.root_ = Parser(source, dim).run();
  e.dim_ = dim;
  e.source_ = source;
  return e;
}

double Expression::eval(std::span<const double> x) const {
  if (!root_) throw NumericalError("expression: empty");
  if (static_cast<int>(x.size()) != dim_)
    throw InputError("expression: point has dimension " +
                     std::to_string(x.size()) + ", expected " +
                     std::to_string(dim_));
  const double v = eval_node(*root_, x);
  if (!std::isfinite(v))
    throw NumericalError("expression: non-finite value at x = " +
                         format_point(x.data(), dim_));
  return v;
}

std::string Expression::str() const {
  std::string out;
  if (root_) print_node(*root_, out);
  return out;
}

bool Expression::same_tree(const Expression& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return equal_nodes(*root_, *other.root_);
}

}  // namespace finsdet
