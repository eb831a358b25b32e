#pragma once

#include <memory>
#include <span>
#include <string>

#include "finsdet/common.hpp"

namespace finsdet {

enum class ExprFunc { sin, cos, exp, sqrt };

struct ExprNode {
  enum class Kind { number, variable, add, sub, mul, div, pow, call };
  Kind kind = Kind::number;
  double number = 0.0;
  int var = 0;  // 0-based
  ExprFunc func = ExprFunc::sin;
  std::shared_ptr<const ExprNode> lhs, rhs;  // call: argument in lhs
};

// Arithmetic expressions over variables x1..xn.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' factor)?
//   base   := number | ident | func '(' expr ')' | '(' expr ')'
//   ident in {x1..xn}; func in {sin, cos, exp, sqrt}
//
// Numbers may carry a leading '-' where a base is expected. Unknown
// identifiers are rejected at parse time. Parse errors report the column.
class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& source, int dim);

  double eval(std::span<const double> x) const;

  // Fully parenthesized rendering; reparsing it yields an equal tree.
  std::string str() const;
  bool same_tree(const Expression& other) const;

  int dim() const { return dim_; }
  const std::string& source() const { return source_; }
  bool valid() const { return root_ != nullptr; }

 private:
  std::shared_ptr<const ExprNode> root_;
  int dim_ = 0;
  std::string source_;
};

}  // namespace finsdet
