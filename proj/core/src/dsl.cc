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

#include "dpr/dsl.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

enum class Tok {
  kEnd,
  kNumber,
  kIdent,
  kLParen,
  kRParen,
  kComma,
  kPlus,
  kMinus,
  kStar,
  kLt,
  kLe,
  kEqEq,
  kGt,
  kGe,
  kAssign,
  kOther,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0;
  int line = 1;
  int column = 1;
};

const std::set<std::string, std::less<>>& Keywords() {
  static const auto* kKeywords = new std::set<std::string, std::less<>>{
      "let", "in", "and", "or", "not", "min", "max"};
  return *kKeywords;
}

// Words that would introduce control flow or definitions.
const std::set<std::string, std::less<>>& ForbiddenWords() {
  static const auto* kWords = new std::set<std::string, std::less<>>{
      "if",  "then",   "else",     "while",  "for",    "do",
      "loop", "def",   "function", "return", "global", "var"};
  return *kWords;
}

absl::Status ErrorAt(const Token& t, std::string_view message) {
  return absl::InvalidArgumentError(absl::StrCat(
      "line ", t.line, ", column ", t.column, ": ", std::string(message)));
}

absl::StatusOr<std::vector<Token>> Lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, column = 1;
  size_t i = 0;
  const auto advance = [&](size_t count) {
    for (size_t j = 0; j < count; ++j) {
      if (src[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = column;
    const auto is_digit = [&](size_t at) {
      return at < src.size() && std::isdigit(static_cast<unsigned char>(src[at]));
    };
    if (is_digit(i) || (c == '.' && is_digit(i + 1))) {
      size_t j = i;
      while (is_digit(j)) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (is_digit(j)) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (is_digit(k)) {
          j = k;
          while (is_digit(j)) ++j;
        }
      }
      t.kind = Tok::kNumber;
      t.text = std::string(src.substr(i, j - i));
      const auto [ptr, ec] =
          std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size() ||
          !std::isfinite(t.number)) {
        return ErrorAt(t, absl::StrCat("bad number '", t.text, "'"));
      }
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      t.kind = Tok::kIdent;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    const auto two = src.substr(i, 2);
    size_t width = 1;
    if (two == "<=") {
      t.kind = Tok::kLe;
      width = 2;
    } else if (two == ">=") {
      t.kind = Tok::kGe;
      width = 2;
    } else if (two == "==") {
      t.kind = Tok::kEqEq;
      width = 2;
    } else if (two == "**") {
      t.kind = Tok::kOther;
      width = 2;
    } else {
      switch (c) {
        case '(': t.kind = Tok::kLParen; break;
        case ')': t.kind = Tok::kRParen; break;
        case ',': t.kind = Tok::kComma; break;
        case '+': t.kind = Tok::kPlus; break;
        case '-': t.kind = Tok::kMinus; break;
        case '*': t.kind = Tok::kStar; break;
        case '<': t.kind = Tok::kLt; break;
        case '>': t.kind = Tok::kGt; break;
        case '=': t.kind = Tok::kAssign; break;
        default: t.kind = Tok::kOther; break;
      }
      if (t.kind == Tok::kOther && (two == "!=" || two == "//")) {
        width = 2;
      }
    }
    t.text = std::string(src.substr(i, width));
    advance(width);
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::kEnd;
  end.line = line;
  end.column = column;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const VariableMap& variables)
      : tokens_(std::move(tokens)), variables_(variables) {}

  absl::StatusOr<ExprPtr> Program() {
    ASSIGN_OR_RETURN(ExprPtr e, ParseExpr());
    if (Peek().kind != Tok::kEnd) return Unexpected(Peek());
    return e;
  }

 private:
  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Next() { return tokens_[pos_++]; }
  bool PeekWord(std::string_view word) const {
    return Peek().kind == Tok::kIdent && Peek().text == word;
  }

  absl::Status Unexpected(const Token& t) {
    switch (t.kind) {
      case Tok::kEnd:
        return ErrorAt(t, "unexpected end of program");
      case Tok::kAssign:
        return ErrorAt(t, "assignment is only allowed in a let binding");
      case Tok::kOther:
        if (t.text == "/" || t.text == "//") {
          return ErrorAt(t, "division is not supported");
        }
        return ErrorAt(t, absl::StrCat("unexpected '", t.text, "'"));
      default:
        return ErrorAt(t, absl::StrCat("unexpected '", t.text, "'"));
    }
  }

  absl::Status Expect(Tok kind, std::string_view what) {
    if (Peek().kind != kind) {
      if (Peek().kind == Tok::kOther || Peek().kind == Tok::kAssign) {
        return Unexpected(Peek());
      }
      return ErrorAt(Peek(), absl::StrCat("expected ", std::string(what)));
    }
    ++pos_;
    return absl::OkStatus();
  }

  absl::StatusOr<ExprPtr> ParseExpr() {
    if (!PeekWord("let")) return ParseOr();
    Next();
    const Token name = Next();
    if (name.kind != Tok::kIdent) {
      return ErrorAt(name, "expected a name after 'let'");
    }
    RETURN_IF_ERROR(CheckFreshName(name));
    RETURN_IF_ERROR(Expect(Tok::kAssign, "'=' in let binding"));
    ASSIGN_OR_RETURN(ExprPtr value, ParseExpr());
    if (!PeekWord("in")) return ErrorAt(Peek(), "expected 'in'");
    Next();
    scope_.emplace_back(name.text, value->type);
    absl::StatusOr<ExprPtr> body = ParseExpr();
    scope_.pop_back();
    if (!body.ok()) return body.status();
    return Expr::Let(name.text, std::move(value), *std::move(body));
  }

  absl::Status CheckFreshName(const Token& t) {
    if (Keywords().contains(t.text) || ForbiddenWords().contains(t.text)) {
      return ErrorAt(t, absl::StrCat("'", t.text, "' is a reserved word"));
    }
    if (variables_.contains(t.text)) {
      return ErrorAt(t, absl::StrCat("'", t.text,
                                     "' would shadow a dataset variable"));
    }
    for (const auto& [name, type] : scope_) {
      if (name == t.text) {
        return ErrorAt(t, absl::StrCat("'", t.text, "' is already bound"));
      }
    }
    return absl::OkStatus();
  }

  absl::StatusOr<ExprPtr> ParseOr() {
    ASSIGN_OR_RETURN(ExprPtr lhs, ParseAnd());
    while (PeekWord("or")) {
      const Token op = Next();
      ASSIGN_OR_RETURN(ExprPtr rhs, ParseAnd());
      RETURN_IF_ERROR(NeedBool(op, *lhs, *rhs));
      lhs = Expr::Binary(ExprOp::kOr, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  absl::StatusOr<ExprPtr> ParseAnd() {
    ASSIGN_OR_RETURN(ExprPtr lhs, ParseNot());
    while (PeekWord("and")) {
      const Token op = Next();
      ASSIGN_OR_RETURN(ExprPtr rhs, ParseNot());
      RETURN_IF_ERROR(NeedBool(op, *lhs, *rhs));
      lhs = Expr::Binary(ExprOp::kAnd, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  absl::Status NeedBool(const Token& op, const Expr& lhs, const Expr& rhs) {
    if (lhs.type != ExprType::kBool || rhs.type != ExprType::kBool) {
      return ErrorAt(op, absl::StrCat("'", op.text,
                                      "' needs comparisons or boolean "
                                      "variables on both sides"));
    }
    return absl::OkStatus();
  }

  absl::StatusOr<ExprPtr> ParseNot() {
    if (!PeekWord("not")) return ParseComparison();
    const Token op = Next();
    ASSIGN_OR_RETURN(ExprPtr operand, ParseNot());
    if (operand->type != ExprType::kBool) {
      return ErrorAt(op, "'not' needs a comparison or boolean variable");
    }
    return Expr::Unary(ExprOp::kNot, std::move(operand));
  }

  static bool ComparisonOp(Tok kind, ExprOp& op) {
    switch (kind) {
      case Tok::kLt: op = ExprOp::kLt; return true;
      case Tok::kLe: op = ExprOp::kLe; return true;
      case Tok::kEqEq: op = ExprOp::kEq; return true;
      case Tok::kGt: op = ExprOp::kGt; return true;
      case Tok::kGe: op = ExprOp::kGe; return true;
      default: return false;
    }
  }

  absl::StatusOr<ExprPtr> ParseComparison() {
    ASSIGN_OR_RETURN(ExprPtr lhs, ParseSum());
    ExprOp op;
    if (!ComparisonOp(Peek().kind, op)) return lhs;
    Next();
    ASSIGN_OR_RETURN(ExprPtr rhs, ParseSum());
    ExprOp again;
    if (ComparisonOp(Peek().kind, again)) {
      return ErrorAt(Peek(), "comparisons cannot be chained");
    }
    return Expr::Binary(op, std::move(lhs), std::move(rhs));
  }

  absl::StatusOr<ExprPtr> ParseSum() {
    ASSIGN_OR_RETURN(ExprPtr lhs, ParseProduct());
    while (Peek().kind == Tok::kPlus || Peek().kind == Tok::kMinus) {
      const ExprOp op = Next().kind == Tok::kPlus ? ExprOp::kAdd : ExprOp::kSub;
      ASSIGN_OR_RETURN(ExprPtr rhs, ParseProduct());
      lhs = Expr::Binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  absl::StatusOr<ExprPtr> ParseProduct() {
    ASSIGN_OR_RETURN(ExprPtr lhs, ParseUnary());
    while (Peek().kind == Tok::kStar) {
      Next();
      ASSIGN_OR_RETURN(ExprPtr rhs, ParseUnary());
      lhs = Expr::Binary(ExprOp::kMul, std::move(lhs), std::move(rhs));
    }
    if (Peek().kind == Tok::kOther && Peek().text == "**") {
      return ErrorAt(Peek(), "'**' is not supported; multiply explicitly");
    }
    return lhs;
  }

  absl::StatusOr<ExprPtr> ParseUnary() {
    if (Peek().kind != Tok::kMinus) return ParsePrimary();
    Next();
    ASSIGN_OR_RETURN(ExprPtr operand, ParseUnary());
    return Expr::Unary(ExprOp::kNeg, std::move(operand));
  }

  absl::StatusOr<ExprPtr> ParsePrimary() {
    const Token t = Next();
    switch (t.kind) {
      case Tok::kNumber:
        return Expr::Number(t.number);
      case Tok::kLParen: {
        ASSIGN_OR_RETURN(ExprPtr inner, ParseExpr());
        RETURN_IF_ERROR(Expect(Tok::kRParen, "')'"));
        return inner;
      }
      case Tok::kIdent:
        return Identifier(t);
      default:
        return Unexpected(t);
    }
  }

  absl::StatusOr<ExprPtr> Identifier(const Token& t) {
    if (t.text == "min" || t.text == "max") {
      RETURN_IF_ERROR(Expect(Tok::kLParen, absl::StrCat("'(' after ", t.text)));
      ASSIGN_OR_RETURN(ExprPtr lhs, ParseExpr());
      RETURN_IF_ERROR(Expect(Tok::kComma, "','"));
      ASSIGN_OR_RETURN(ExprPtr rhs, ParseExpr());
      RETURN_IF_ERROR(Expect(Tok::kRParen, "')'"));
      return Expr::Binary(t.text == "min" ? ExprOp::kMin : ExprOp::kMax,
                          std::move(lhs), std::move(rhs));
    }
    if (ForbiddenWords().contains(t.text)) {
      return ErrorAt(t, absl::StrCat("'", t.text,
                                     "' is not part of the language: there "
                                     "are no loops, conditionals or "
                                     "definitions"));
    }
    if (Keywords().contains(t.text)) return Unexpected(t);
    if (Peek().kind == Tok::kLParen) {
      return ErrorAt(t, absl::StrCat("function calls are not allowed ('",
                                     t.text, "'); only min and max"));
    }
    if (Peek().kind == Tok::kAssign) {
      return ErrorAt(Peek(), absl::StrCat("cannot assign to '", t.text,
                                          "': only let bindings may "
                                          "introduce names"));
    }
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == t.text) return Expr::Variable(t.text, it->second);
    }
    const auto var = variables_.find(t.text);
    if (var == variables_.end()) {
      return ErrorAt(t, absl::StrCat("undeclared variable '", t.text, "'"));
    }
    switch (var->second.kind) {
      case VariableKind::kNumeric:
        return Expr::Variable(t.text, ExprType::kNum);
      case VariableKind::kBoolean:
        return Expr::Variable(t.text, ExprType::kBool);
      case VariableKind::kCategorical:
        break;
    }
    return ErrorAt(t, absl::StrCat("categorical variable '", t.text,
                                   "' cannot be used in a transformation"));
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
  const VariableMap& variables_;
  std::vector<std::pair<std::string, ExprType>> scope_;
};

std::string_view OpText(ExprOp op) {
  switch (op) {
    case ExprOp::kAdd: return "+";
    case ExprOp::kSub: return "-";
    case ExprOp::kMul: return "*";
    case ExprOp::kLt: return "<";
    case ExprOp::kLe: return "<=";
    case ExprOp::kEq: return "==";
    case ExprOp::kGt: return ">";
    case ExprOp::kGe: return ">=";
    case ExprOp::kAnd: return "and";
    case ExprOp::kOr: return "or";
    case ExprOp::kMin: return "min";
    case ExprOp::kMax: return "max";
    default: return "?";
  }
}

void Print(const Expr& e, std::string& out) {
  switch (e.op) {
    case ExprOp::kNumber: {
      char buffer[64];
      const auto result = std::to_chars(buffer, buffer + sizeof(buffer), e.number);
      out.append(buffer, result.ptr);
      return;
    }
    case ExprOp::kVariable:
      out += e.name;
      return;
    case ExprOp::kLet:
      out += "(let ";
      out += e.name;
      out += " = ";
      Print(*e.children[0], out);
      out += " in ";
      Print(*e.children[1], out);
      out += ")";
      return;
    case ExprOp::kNeg:
      out += "(-";
      Print(*e.children[0], out);
      out += ")";
      return;
    case ExprOp::kNot:
      out += "(not ";
      Print(*e.children[0], out);
      out += ")";
      return;
    case ExprOp::kMin:
    case ExprOp::kMax:
      out += OpText(e.op);
      out += "(";
      Print(*e.children[0], out);
      out += ", ";
      Print(*e.children[1], out);
      out += ")";
      return;
    default:
      out += "(";
      Print(*e.children[0], out);
      out += " ";
      out += OpText(e.op);
      out += " ";
      Print(*e.children[1], out);
      out += ")";
      return;
  }
}

void CollectFree(const Expr& e, std::vector<std::string>& bound,
                 std::set<std::string>& out) {
  switch (e.op) {
    case ExprOp::kVariable:
      if (std::find(bound.begin(), bound.end(), e.name) == bound.end()) {
        out.insert(e.name);
      }
      return;
    case ExprOp::kLet:
      CollectFree(*e.children[0], bound, out);
      bound.push_back(e.name);
      CollectFree(*e.children[1], bound, out);
      bound.pop_back();
      return;
    default:
      for (const ExprPtr& c : e.children) CollectFree(*c, bound, out);
  }
}

}  // namespace

ExprPtr Expr::Number(double value) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::kNumber;
  e->number = value;
  return e;
}

ExprPtr Expr::Variable(std::string name, ExprType type) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::kVariable;
  e->type = type;
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::Unary(ExprOp op, ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->type = op == ExprOp::kNot ? ExprType::kBool : ExprType::kNum;
  e->children = {std::move(operand)};
  return e;
}

ExprPtr Expr::Binary(ExprOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  switch (op) {
    case ExprOp::kLt:
    case ExprOp::kLe:
    case ExprOp::kEq:
    case ExprOp::kGt:
    case ExprOp::kGe:
    case ExprOp::kAnd:
    case ExprOp::kOr:
      e->type = ExprType::kBool;
      break;
    case ExprOp::kMin:
    case ExprOp::kMax:
      e->type = lhs->type == ExprType::kBool && rhs->type == ExprType::kBool
                    ? ExprType::kBool
                    : ExprType::kNum;
      break;
    default:
      e->type = ExprType::kNum;
  }
  e->children = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr Expr::Let(std::string name, ExprPtr value, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::kLet;
  e->type = body->type;
  e->name = std::move(name);
  e->children = {std::move(value), std::move(body)};
  return e;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.op != b.op || a.type != b.type || a.name != b.name ||
      a.children.size() != b.children.size()) {
    return false;
  }
  if (a.op == ExprOp::kNumber && a.number != b.number) return false;
  for (size_t i = 0; i < a.children.size(); ++i) {
    if (!(*a.children[i] == *b.children[i])) return false;
  }
  return true;
}

absl::StatusOr<ExprPtr> ParseProgram(std::string_view source,
                                     const VariableMap& variables) {
  ASSIGN_OR_RETURN(std::vector<Token> tokens, Lex(source));
  Parser parser(std::move(tokens), variables);
  return parser.Program();
}

std::string PrettyPrint(const Expr& expr) {
  std::string out;
  Print(expr, out);
  return out;
}

std::vector<std::string> FreeVariables(const Expr& expr) {
  std::vector<std::string> bound;
  std::set<std::string> free;
  CollectFree(expr, bound, free);
  return {free.begin(), free.end()};
}

}  // namespace dpr
