#include "miniver/ast.hpp"

namespace miniver {

std::string format_location(const SourceSpan& span) {
  std::string out = span.file.empty() ? std::string("<input>") : span.file;
  out += ':' + std::to_string(span.line) + ':' + std::to_string(span.col);
  return out;
}

bool same_type(const Type& a, const Type& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Type::Kind::Named:
      return a.name == b.name;
    case Type::Kind::Arrow:
      if (a.params.size() != b.params.size()) return false;
      for (std::size_t i = 0; i < a.params.size(); ++i)
        if (!same_type(a.params[i], b.params[i])) return false;
      return same_type(*a.result, *b.result);
    default:
      return true;
  }
}

std::string type_to_string(const Type& t) {
  switch (t.kind) {
    case Type::Kind::Int:
      return "int";
    case Type::Kind::Bool:
      return "bool";
    case Type::Kind::Unit:
      return "unit";
    case Type::Kind::Named:
      return t.name;
    case Type::Kind::Arrow: {
      std::string out = "(";
      for (std::size_t i = 0; i < t.params.size(); ++i) {
        if (i) out += ", ";
        out += type_to_string(t.params[i]);
      }
      return out + ") -> " + type_to_string(*t.result);
    }
  }
  return "?";
}

std::string_view binary_op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
    case BinaryOp::Implies: return "==>";
  }
  return "?";
}

bool is_comparison(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      return true;
    default:
      return false;
  }
}

Expr make_int(std::int64_t v, SourceSpan span) {
  Expr e;
  e.kind = ExprKind::IntLit;
  e.int_value = v;
  e.span = std::move(span);
  return e;
}

Expr make_bool(bool v, SourceSpan span) {
  Expr e;
  e.kind = ExprKind::BoolLit;
  e.bool_value = v;
  e.span = std::move(span);
  return e;
}

Expr make_var(std::string name, SourceSpan span) {
  Expr e;
  e.kind = ExprKind::VarRef;
  e.name = std::move(name);
  e.span = std::move(span);
  return e;
}

Expr make_binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.binary_op = op;
  e.span = std::move(span);
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

Expr make_unary(UnaryOp op, Expr operand, SourceSpan span) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.unary_op = op;
  e.span = std::move(span);
  e.operands.push_back(std::move(operand));
  return e;
}

std::string_view decl_name(const Decl& d) {
  return std::visit([](const auto& x) -> std::string_view { return x.name; }, d);
}

namespace {

bool same_params(const std::vector<Param>& a, const std::vector<Param>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || !same_type(a[i].type, b[i].type)) return false;
  return true;
}

bool same_exprs(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_structure(a[i], b[i])) return false;
  return true;
}

template <class T, class Eq>
bool same_optional(const std::optional<T>& a, const std::optional<T>& b, Eq eq) {
  if (a.has_value() != b.has_value()) return false;
  return !a || eq(*a, *b);
}

bool same_stmt(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.name != b.name || a.ghost != b.ghost || a.has_else != b.has_else)
    return false;
  if (!same_optional(a.value, b.value, [](const Expr& x, const Expr& y) { return same_structure(x, y); }))
    return false;
  return same_structure(a.then_body, b.then_body) && same_structure(a.else_body, b.else_body);
}

bool same_trait(const TraitDecl& a, const TraitDecl& b) {
  if (a.name != b.name || a.methods.size() != b.methods.size()) return false;
  for (std::size_t i = 0; i < a.methods.size(); ++i)
    if (!same_structure(a.methods[i], b.methods[i])) return false;
  return true;
}

bool same_class(const ClassDecl& a, const ClassDecl& b) {
  if (a.name != b.name || a.implements != b.implements) return false;
  if (a.fields.size() != b.fields.size() || a.methods.size() != b.methods.size()) return false;
  for (std::size_t i = 0; i < a.fields.size(); ++i) {
    const auto& fa = a.fields[i];
    const auto& fb = b.fields[i];
    if (fa.name != fb.name || !same_type(fa.type, fb.type)) return false;
    if (!same_optional(fa.init, fb.init, [](const Expr& x, const Expr& y) { return same_structure(x, y); }))
      return false;
  }
  if (a.ctor.has_value() != b.ctor.has_value()) return false;
  if (a.ctor && (!same_params(a.ctor->params, b.ctor->params) ||
                 !same_structure(a.ctor->body, b.ctor->body)))
    return false;
  for (std::size_t i = 0; i < a.methods.size(); ++i)
    if (!same_structure(a.methods[i], b.methods[i])) return false;
  return true;
}

}  // namespace

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::IntLit:
      return a.int_value == b.int_value;
    case ExprKind::BoolLit:
      return a.bool_value == b.bool_value;
    case ExprKind::Binary:
      if (a.binary_op != b.binary_op) return false;
      break;
    case ExprKind::Unary:
      if (a.unary_op != b.unary_op) return false;
      break;
    case ExprKind::Lambda:
      if (!same_params(a.params, b.params)) return false;
      break;
    default:
      break;
  }
  return a.name == b.name && same_exprs(a.operands, b.operands);
}

bool same_structure(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_stmt(a[i], b[i])) return false;
  return true;
}

bool same_structure(const FunctionDecl& a, const FunctionDecl& b) {
  auto eq_expr = [](const Expr& x, const Expr& y) { return same_structure(x, y); };
  auto eq_type = [](const Type& x, const Type& y) { return same_type(x, y); };
  auto eq_block = [](const Block& x, const Block& y) { return same_structure(x, y); };
  return a.name == b.name && same_params(a.params, b.params) &&
         same_optional(a.return_type, b.return_type, eq_type) &&
         same_exprs(a.preconditions, b.preconditions) &&
         same_exprs(a.postconditions, b.postconditions) &&
         same_optional(a.decreases, b.decreases, eq_expr) && same_optional(a.body, b.body, eq_block);
}

bool same_structure(const Program& a, const Program& b) {
  if (a.decls.size() != b.decls.size()) return false;
  for (std::size_t i = 0; i < a.decls.size(); ++i) {
    const auto& da = a.decls[i];
    const auto& db = b.decls[i];
    if (da.index() != db.index()) return false;
    bool same = std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(db);
          if constexpr (std::is_same_v<T, FunctionDecl>) return same_structure(x, y);
          else if constexpr (std::is_same_v<T, TraitDecl>) return same_trait(x, y);
          else return same_class(x, y);
        },
        da);
    if (!same) return false;
  }
  return true;
}

}  // namespace miniver
