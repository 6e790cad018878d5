// Copyright 2026 The dpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPR_DSL_H_
#define DPR_DSL_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/request.h"

namespace dpr {

// Per-row transformation language. The grammar is in docs/dsl_grammar.md.
//
// There are two types. Num is a real; Bool is an indicator in {0, 1}
// produced by comparisons and combined with and (min), or (max) and
// not (1 - x). A Bool may be used wherever a Num is expected. There is no
// division, no conditional, no loop, no call other than min/max and no
// assignment other than a let binding, so every program evaluates with the
// same sequence of steps on every row.
enum class ExprOp {
  kNumber,
  kVariable,
  kLet,  // name = children[0] in children[1]
  kNeg,
  kAdd,
  kSub,
  kMul,
  kLt,
  kLe,
  kEq,
  kGt,
  kGe,
  kAnd,
  kOr,
  kNot,
  kMin,
  kMax,
};

enum class ExprType { kNum, kBool };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprOp op = ExprOp::kNumber;
  ExprType type = ExprType::kNum;
  double number = 0;
  // Variable name, or the name bound by a let.
  std::string name;
  std::vector<ExprPtr> children;

  static ExprPtr Number(double value);
  static ExprPtr Variable(std::string name, ExprType type = ExprType::kNum);
  static ExprPtr Unary(ExprOp op, ExprPtr operand);
  static ExprPtr Binary(ExprOp op, ExprPtr lhs, ExprPtr rhs);
  static ExprPtr Let(std::string name, ExprPtr value, ExprPtr body);
};

// Structural equality.
bool operator==(const Expr& a, const Expr& b);

// Parses `source` against the dataset's variables. Numeric and boolean
// variables may be referenced; categorical ones may not. Errors carry the
// line and column of the offending token.
absl::StatusOr<ExprPtr> ParseProgram(std::string_view source,
                                     const VariableMap& variables);

// Fully parenthesized source text; parses back to an equal tree.
std::string PrettyPrint(const Expr& expr);

// Names of the dataset variables the program reads, sorted.
std::vector<std::string> FreeVariables(const Expr& expr);

}  // namespace dpr

#endif  // DPR_DSL_H_
