#include <sstream>

#include "miniver/parser.hpp"

namespace miniver {

namespace {

// Binding strength, loosest first. Lambdas bind loosest of all: their body
// extends as far right as possible.
enum Prec : int {
  kLambda = 0,
  kImplies = 1,
  kOr = 2,
  kAnd = 3,
  kCompare = 4,
  kAdditive = 5,
  kMultiplicative = 6,
  kUnary = 7,
  kPostfix = 8,
  kPrimary = 9,
};

int binary_prec(BinaryOp op) {
  switch (op) {
    case BinaryOp::Implies: return kImplies;
    case BinaryOp::Or: return kOr;
    case BinaryOp::And: return kAnd;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kAdditive;
    case BinaryOp::Mul: return kMultiplicative;
    default: return kCompare;
  }
}

int expr_prec(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary: return binary_prec(e.binary_op);
    case ExprKind::Unary: return kUnary;
    case ExprKind::Lambda: return kLambda;
    case ExprKind::Call:
    case ExprKind::MethodCall:
    case ExprKind::FieldAccess:
    case ExprKind::Invoke: return kPostfix;
    default: return kPrimary;
  }
}

void print_type(std::ostream& os, const Type& t) { os << type_to_string(t); }

void print_params(std::ostream& os, const std::vector<Param>& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) os << ", ";
    os << ps[i].name << ": ";
    print_type(os, ps[i].type);
  }
}

void print_expr(std::ostream& os, const Expr& e, int ctx);

void print_args(std::ostream& os, const Expr& e) {
  os << '(';
  for (std::size_t i = 0; i < e.arg_count(); ++i) {
    if (i) os << ", ";
    print_expr(os, e.arg(i), kLambda);
  }
  os << ')';
}

void print_expr(std::ostream& os, const Expr& e, int ctx) {
  bool parens = expr_prec(e) < ctx;
  if (parens) os << '(';
  switch (e.kind) {
    case ExprKind::IntLit:
      os << e.int_value;
      break;
    case ExprKind::BoolLit:
      os << (e.bool_value ? "true" : "false");
      break;
    case ExprKind::VarRef:
      os << e.name;
      break;
    case ExprKind::Result:
      os << "result";
      break;
    case ExprKind::This:
      os << "this";
      break;
    case ExprKind::Binary: {
      int p = binary_prec(e.binary_op);
      bool right_assoc = e.binary_op == BinaryOp::Implies;
      print_expr(os, e.operands[0], right_assoc ? p + 1 : p);
      os << ' ' << binary_op_text(e.binary_op) << ' ';
      print_expr(os, e.operands[1], right_assoc ? p : p + 1);
      break;
    }
    case ExprKind::Unary:
      os << (e.unary_op == UnaryOp::Not ? "!" : "-");
      print_expr(os, e.operands[0], kUnary);
      break;
    case ExprKind::Call:
      os << e.name;
      print_args(os, e);
      break;
    case ExprKind::MethodCall:
      print_expr(os, e.operands[0], kPostfix);
      os << '.' << e.name;
      print_args(os, e);
      break;
    case ExprKind::FieldAccess:
      print_expr(os, e.operands[0], kPostfix);
      os << '.' << e.name;
      break;
    case ExprKind::Invoke: {
      // A bare name or field access in callee position would re-parse as a
      // direct or method call.
      const Expr& callee = e.operands[0];
      bool wrap = callee.kind == ExprKind::VarRef || callee.kind == ExprKind::FieldAccess;
      if (wrap) os << '(';
      print_expr(os, callee, wrap ? kLambda : kPostfix);
      if (wrap) os << ')';
      print_args(os, e);
      break;
    }
    case ExprKind::Lambda:
      os << '(';
      print_params(os, e.params);
      os << ") => ";
      print_expr(os, e.operands[0], kLambda);
      break;
    case ExprKind::New:
      os << "new " << e.name;
      print_args(os, e);
      break;
  }
  if (parens) os << ')';
}

class ProgramPrinter {
 public:
  explicit ProgramPrinter(std::ostream& os) : os_(os) {}

  void program(const Program& p) {
    for (std::size_t i = 0; i < p.decls.size(); ++i) {
      if (i) os_ << '\n';
      std::visit([&](const auto& d) { decl(d); }, p.decls[i]);
    }
  }

 private:
  std::ostream& os_;
  int indent_ = 0;

  void pad() { os_ << std::string(static_cast<std::size_t>(indent_) * 2, ' '); }

  void decl(const FunctionDecl& f) { function(f); }

  void decl(const TraitDecl& t) {
    pad();
    os_ << "trait " << t.name << " {\n";
    ++indent_;
    for (const auto& m : t.methods) function(m);
    --indent_;
    pad();
    os_ << "}\n";
  }

  void decl(const ClassDecl& c) {
    pad();
    os_ << "class " << c.name;
    if (c.implements) os_ << " implements " << *c.implements;
    os_ << " {\n";
    ++indent_;
    for (const auto& f : c.fields) {
      pad();
      os_ << "const " << f.name << ": ";
      print_type(os_, f.type);
      if (f.init) {
        os_ << " := ";
        print_expr(os_, *f.init, kLambda);
      }
      os_ << ";\n";
    }
    if (c.ctor) {
      pad();
      os_ << "constructor(";
      print_params(os_, c.ctor->params);
      os_ << ") ";
      block(c.ctor->body);
      os_ << '\n';
    }
    for (const auto& m : c.methods) function(m);
    --indent_;
    pad();
    os_ << "}\n";
  }

  void function(const FunctionDecl& f) {
    pad();
    os_ << "func " << f.name << '(';
    print_params(os_, f.params);
    os_ << ')';
    if (f.return_type) {
      os_ << " -> ";
      print_type(os_, *f.return_type);
    }
    bool has_specs = !f.preconditions.empty() || !f.postconditions.empty() || f.decreases;
    auto spec = [&](std::string_view kw, const Expr& e) {
      os_ << '\n';
      ++indent_;
      pad();
      --indent_;
      os_ << kw << ' ';
      print_expr(os_, e, kLambda);
    };
    for (const auto& e : f.preconditions) spec("requires", e);
    for (const auto& e : f.postconditions) spec("ensures", e);
    if (f.decreases) spec("decreases", *f.decreases);
    if (!f.body) {
      os_ << ";\n";
      return;
    }
    if (has_specs) {
      os_ << '\n';
      pad();
    } else {
      os_ << ' ';
    }
    block(*f.body);
    os_ << '\n';
  }

  void block(const Block& b) {
    if (b.empty()) {
      os_ << "{}";
      return;
    }
    os_ << "{\n";
    ++indent_;
    for (const auto& s : b) statement(s);
    --indent_;
    pad();
    os_ << '}';
  }

  void statement(const Stmt& s) {
    pad();
    switch (s.kind) {
      case StmtKind::VarDecl:
        if (s.ghost) os_ << "ghost ";
        os_ << "var " << s.name << " := ";
        print_expr(os_, *s.value, kLambda);
        os_ << ";\n";
        break;
      case StmtKind::FieldAssign:
        os_ << "this." << s.name << " := ";
        print_expr(os_, *s.value, kLambda);
        os_ << ";\n";
        break;
      case StmtKind::Return:
        os_ << "return";
        if (s.value) {
          os_ << ' ';
          print_expr(os_, *s.value, kLambda);
        }
        os_ << ";\n";
        break;
      case StmtKind::If:
        os_ << "if ";
        print_expr(os_, *s.value, kLambda);
        os_ << ' ';
        block(s.then_body);
        if (s.has_else) {
          os_ << " else ";
          block(s.else_body);
        }
        os_ << '\n';
        break;
      case StmtKind::ExprStmt:
        print_expr(os_, *s.value, kLambda);
        os_ << ";\n";
        break;
    }
  }
};

}  // namespace

std::string pretty_print(const Program& program) {
  std::ostringstream os;
  ProgramPrinter(os).program(program);
  return os.str();
}

std::string pretty_print(const Expr& expr) {
  std::ostringstream os;
  print_expr(os, expr, kLambda);
  return os.str();
}

std::string pretty_print(const Type& type) { return type_to_string(type); }

}  // namespace miniver
