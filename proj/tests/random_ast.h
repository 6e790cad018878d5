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

#ifndef DPR_TESTS_RANDOM_AST_H_
#define DPR_TESTS_RANDOM_AST_H_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dpr/dsl.h"

namespace dpr::testing {

// Well-typed random programs over numeric variables A, B, C and the
// boolean variable F. Literals are non-negative, as in source text.
class RandomAst {
 public:
  explicit RandomAst(uint64_t seed) : gen_(seed) {}

  ExprPtr Generate(int max_depth) {
    scope_.clear();
    next_name_ = 0;
    return Gen(max_depth, Coin() ? ExprType::kNum : ExprType::kBool);
  }

 private:
  bool Coin() { return gen_() % 2 == 0; }
  int Pick(int n) { return static_cast<int>(gen_() % static_cast<uint64_t>(n)); }

  ExprPtr Literal() {
    static constexpr double kValues[] = {0, 0.5, 1, 2, 3, 10, 0.25, 1e-3, 1.5e2};
    return Expr::Number(kValues[Pick(9)]);
  }

  ExprPtr Leaf(ExprType type) {
    std::vector<ExprPtr> options;
    for (const auto& [name, t] : scope_) {
      if (type == ExprType::kNum || t == ExprType::kBool) {
        options.push_back(Expr::Variable(name, t));
      }
    }
    if (type == ExprType::kBool) {
      options.push_back(Expr::Variable("F", ExprType::kBool));
    } else {
      options.push_back(Literal());
      for (const char* v : {"A", "B", "C", "F"}) {
        options.push_back(Expr::Variable(v, v[0] == 'F' ? ExprType::kBool : ExprType::kNum));
      }
    }
    return options[Pick(static_cast<int>(options.size()))];
  }

  ExprPtr Gen(int depth, ExprType type) {
    if (depth <= 1 || Pick(5) == 0) {
      if (type == ExprType::kBool && Coin()) {
        return Expr::Binary(ExprOp::kLt, Leaf(ExprType::kNum), Leaf(ExprType::kNum));
      }
      return Leaf(type);
    }
    if (Pick(8) == 0) {
      const ExprType bound_type = Coin() ? ExprType::kNum : ExprType::kBool;
      ExprPtr value = Gen(depth - 1, bound_type);
      const std::string name = "t" + std::to_string(next_name_++);
      scope_.emplace_back(name, value->type);
      ExprPtr body = Gen(depth - 1, type);
      scope_.pop_back();
      return Expr::Let(name, std::move(value), std::move(body));
    }
    if (type == ExprType::kBool) {
      switch (Pick(5)) {
        case 0:
          return Expr::Unary(ExprOp::kNot, Gen(depth - 1, ExprType::kBool));
        case 1:
          return Expr::Binary(Coin() ? ExprOp::kAnd : ExprOp::kOr,
                              Gen(depth - 1, ExprType::kBool),
                              Gen(depth - 1, ExprType::kBool));
        case 2:
          return Expr::Binary(Coin() ? ExprOp::kMin : ExprOp::kMax,
                              Gen(depth - 1, ExprType::kBool),
                              Gen(depth - 1, ExprType::kBool));
        default: {
          static constexpr ExprOp kCmp[] = {ExprOp::kLt, ExprOp::kLe, ExprOp::kEq,
                                            ExprOp::kGt, ExprOp::kGe};
          return Expr::Binary(kCmp[Pick(5)], Gen(depth - 1, ExprType::kNum),
                              Gen(depth - 1, ExprType::kNum));
        }
      }
    }
    switch (Pick(7)) {
      case 0:
        return Expr::Unary(ExprOp::kNeg, Gen(depth - 1, ExprType::kNum));
      case 1:
        return Expr::Binary(ExprOp::kAdd, Gen(depth - 1, ExprType::kNum),
                            Gen(depth - 1, ExprType::kNum));
      case 2:
        return Expr::Binary(ExprOp::kSub, Gen(depth - 1, ExprType::kNum),
                            Gen(depth - 1, ExprType::kNum));
      case 3:
      case 4:
        return Expr::Binary(ExprOp::kMul, Gen(depth - 1, ExprType::kNum),
                            Gen(depth - 1, ExprType::kNum));
      case 5:
        return Expr::Binary(Coin() ? ExprOp::kMin : ExprOp::kMax,
                            Gen(depth - 1, ExprType::kNum),
                            Gen(depth - 1, ExprType::kNum));
      default:
        return Gen(depth - 1, ExprType::kBool);
    }
  }

  std::mt19937_64 gen_;
  std::vector<std::pair<std::string, ExprType>> scope_;
  int next_name_ = 0;
};

}  // namespace dpr::testing

#endif  // DPR_TESTS_RANDOM_AST_H_
