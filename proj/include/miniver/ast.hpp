#pragma once

// MiniOO abstract syntax tree.
//
// The tree is a plain value type: copying a Program deep-copies every node.
// Nodes carry typecheck annotations (type, resolution, callable id) that the
// parser leaves empty; structural comparison ignores them.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace miniver {

using CallableId = int;
inline constexpr CallableId kNoCallable = -1;

struct SourceSpan {
  std::string file;
  std::size_t start = 0;
  std::size_t end = 0;
  int line = 1;
  int col = 1;
};

std::string format_location(const SourceSpan& span);

/// Owning, deep-copying pointer. Lets recursive node types keep value
/// semantics.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  explicit operator bool() const { return ptr_ != nullptr; }

 private:
  std::unique_ptr<T> ptr_;
};

struct Type {
  // Unit is internal: it types calls to functions without a return type and
  // cannot be written in source.
  enum class Kind { Int, Bool, Named, Arrow, Unit };

  Kind kind = Kind::Unit;
  std::string name;          // Named
  std::vector<Type> params;  // Arrow
  Box<Type> result;          // Arrow
  SourceSpan span;

  static Type of(Kind k) {
    Type t;
    t.kind = k;
    return t;
  }
  static Type integer() { return of(Kind::Int); }
  static Type boolean() { return of(Kind::Bool); }
  static Type unit() { return of(Kind::Unit); }
  static Type named(std::string n) {
    Type t = of(Kind::Named);
    t.name = std::move(n);
    return t;
  }
  static Type arrow(std::vector<Type> ps, Type r) {
    Type t = of(Kind::Arrow);
    t.params = std::move(ps);
    t.result = Box<Type>(std::move(r));
    return t;
  }

  bool is_int() const { return kind == Kind::Int; }
  bool is_bool() const { return kind == Kind::Bool; }
  bool is_scalar() const { return kind == Kind::Int || kind == Kind::Bool; }
};

bool same_type(const Type& a, const Type& b);
std::string type_to_string(const Type& t);

enum class BinaryOp { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Implies };
enum class UnaryOp { Not, Neg };

std::string_view binary_op_text(BinaryOp op);
bool is_comparison(BinaryOp op);

struct Param {
  std::string name;
  Type type;
  SourceSpan span;
};

/// What a reference node was bound to by the typechecker.
struct Resolution {
  enum class Kind {
    Unresolved,
    Local,
    Param,
    Function,
    Method,
    AbstractMethod,
    Field,
    Constructor,
  };
  Kind kind = Kind::Unresolved;
  CallableId callable = kNoCallable;  // call target for Function/Method/AbstractMethod/Constructor
  std::string owner;                  // class or trait name for members
  bool ghost = false;                 // Local declared with `ghost`
};

enum class ExprKind {
  IntLit,
  BoolLit,
  VarRef,
  Result,
  This,
  Binary,
  Unary,
  Call,
  MethodCall,
  FieldAccess,
  Invoke,
  Lambda,
  New,
};

// Operand layout by kind:
//   Binary        lhs, rhs
//   Unary         operand
//   Call, New     args...
//   MethodCall    receiver, args...
//   FieldAccess   receiver
//   Invoke        callee, args...
//   Lambda        body (params in `params`)
struct Expr {
  ExprKind kind = ExprKind::IntLit;
  SourceSpan span;
  std::int64_t int_value = 0;
  bool bool_value = false;
  BinaryOp binary_op = BinaryOp::Add;
  UnaryOp unary_op = UnaryOp::Not;
  std::string name;  // VarRef, Call callee, MethodCall method, FieldAccess field, New class
  std::vector<Expr> operands;
  std::vector<Param> params;

  // Filled by typecheck.
  std::optional<Type> type;
  Resolution ref;
  CallableId callable = kNoCallable;  // Lambda: its own callable id

  std::size_t arg_offset() const {
    return (kind == ExprKind::MethodCall || kind == ExprKind::Invoke) ? 1 : 0;
  }
  std::size_t arg_count() const { return operands.size() - arg_offset(); }
  const Expr& arg(std::size_t i) const { return operands[arg_offset() + i]; }
  Expr& arg(std::size_t i) { return operands[arg_offset() + i]; }
  bool is_call_like() const {
    return kind == ExprKind::Call || kind == ExprKind::MethodCall || kind == ExprKind::Invoke ||
           kind == ExprKind::New;
  }
};

Expr make_int(std::int64_t v, SourceSpan span = {});
Expr make_bool(bool v, SourceSpan span = {});
Expr make_var(std::string name, SourceSpan span = {});
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span = {});
Expr make_unary(UnaryOp op, Expr operand, SourceSpan span = {});

enum class StmtKind { VarDecl, FieldAssign, Return, If, ExprStmt };

struct Stmt;
using Block = std::vector<Stmt>;

struct Stmt {
  StmtKind kind = StmtKind::ExprStmt;
  SourceSpan span;
  std::string name;  // VarDecl variable, FieldAssign field
  bool ghost = false;
  std::optional<Expr> value;  // VarDecl init, FieldAssign rhs, Return value, If condition, ExprStmt
  Block then_body;
  Block else_body;
  bool has_else = false;

  // Filled by typecheck (VarDecl).
  std::optional<Type> var_type;
};

struct FunctionDecl {
  std::string name;
  std::vector<Param> params;
  std::optional<Type> return_type;
  std::vector<Expr> preconditions;
  std::vector<Expr> postconditions;
  std::optional<Expr> decreases;
  std::optional<Block> body;  // absent only for trait methods
  std::string owner;          // enclosing class or trait, empty for top-level
  SourceSpan span;
  CallableId id = kNoCallable;
};

struct FieldDecl {
  std::string name;
  Type type;
  std::optional<Expr> init;
  SourceSpan span;
  CallableId init_id = kNoCallable;
};

struct ConstructorDecl {
  std::vector<Param> params;
  Block body;
  SourceSpan span;
};

struct ClassDecl {
  std::string name;
  std::optional<std::string> implements;
  std::vector<FieldDecl> fields;
  std::optional<ConstructorDecl> ctor;
  std::vector<FunctionDecl> methods;
  SourceSpan span;
  CallableId ctor_id = kNoCallable;
};

struct TraitDecl {
  std::string name;
  std::vector<FunctionDecl> methods;
  SourceSpan span;
};

using Decl = std::variant<FunctionDecl, TraitDecl, ClassDecl>;

std::string_view decl_name(const Decl& d);

struct Program {
  std::string file;
  std::vector<Decl> decls;
};

// Structural equality: compares syntax only, ignoring spans and annotations.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const Block& a, const Block& b);
bool same_structure(const FunctionDecl& a, const FunctionDecl& b);
bool same_structure(const Program& a, const Program& b);

/// Pre-order visit of `e` and its sub-expressions. Lambda bodies are entered
/// only when `into_lambdas` is set.
template <class F>
void walk_expr(const Expr& e, F&& fn, bool into_lambdas = true) {
  fn(e);
  if (e.kind == ExprKind::Lambda && !into_lambdas) return;
  for (const auto& op : e.operands) walk_expr(op, fn, into_lambdas);
}

template <class F>
void walk_block_exprs(const Block& block, F&& fn, bool into_lambdas = true) {
  for (const auto& s : block) {
    if (s.value) walk_expr(*s.value, fn, into_lambdas);
    walk_block_exprs(s.then_body, fn, into_lambdas);
    walk_block_exprs(s.else_body, fn, into_lambdas);
  }
}

template <class F>
void walk_stmts(const Block& block, F&& fn) {
  for (const auto& s : block) {
    fn(s);
    walk_stmts(s.then_body, fn);
    walk_stmts(s.else_body, fn);
  }
}

/// Visit every expression of the program, including contracts and field
/// initializers.
template <class F>
void walk_program_exprs(const Program& p, F&& fn) {
  auto visit_fn = [&](const FunctionDecl& f) {
    for (const auto& e : f.preconditions) walk_expr(e, fn);
    for (const auto& e : f.postconditions) walk_expr(e, fn);
    if (f.decreases) walk_expr(*f.decreases, fn);
    if (f.body) walk_block_exprs(*f.body, fn);
  };
  for (const auto& d : p.decls) {
    if (auto* f = std::get_if<FunctionDecl>(&d)) {
      visit_fn(*f);
    } else if (auto* t = std::get_if<TraitDecl>(&d)) {
      for (const auto& m : t->methods) visit_fn(m);
    } else {
      const auto& c = std::get<ClassDecl>(d);
      for (const auto& fld : c.fields)
        if (fld.init) walk_expr(*fld.init, fn);
      if (c.ctor) walk_block_exprs(c.ctor->body, fn);
      for (const auto& m : c.methods) visit_fn(m);
    }
  }
}

}  // namespace miniver
