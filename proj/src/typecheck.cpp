#include "miniver/typecheck.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace miniver {

std::string_view category_name(TypeErrorCategory c) {
  switch (c) {
    case TypeErrorCategory::UnresolvedName: return "unresolved-name";
    case TypeErrorCategory::TypeMismatch: return "type-mismatch";
    case TypeErrorCategory::NonlinearMultiplication: return "nonlinear-multiplication";
    case TypeErrorCategory::ResultMisuse: return "result-misuse";
    case TypeErrorCategory::FieldUnassigned: return "field-unassigned";
    case TypeErrorCategory::GhostMisuse: return "ghost-misuse";
    case TypeErrorCategory::MissingReturn: return "missing-return";
    case TypeErrorCategory::ContractImpure: return "contract-impure";
    case TypeErrorCategory::DuplicateName: return "duplicate-name";
  }
  return "?";
}

std::string format_error(const TypeError& e) {
  return format_location(e.span) + ": " + std::string(category_name(e.category)) + ": " + e.message;
}

// ---------------------------------------------------------------------------
// Callable / TypedProgram

const std::vector<Param>& Callable::params() const {
  static const std::vector<Param> kNone;
  switch (kind) {
    case CallableKind::Function:
    case CallableKind::Method:
    case CallableKind::AbstractMethod:
      return function->params;
    case CallableKind::Constructor:
      return cls->ctor ? cls->ctor->params : kNone;
    case CallableKind::Lambda:
      return lambda->params;
    case CallableKind::FieldInit:
      return kNone;
  }
  return kNone;
}

Type Callable::signature() const {
  std::vector<Type> ps;
  for (const auto& p : params()) ps.push_back(p.type);
  switch (kind) {
    case CallableKind::Function:
    case CallableKind::Method:
    case CallableKind::AbstractMethod:
      return Type::arrow(std::move(ps), function->return_type ? *function->return_type : Type::unit());
    case CallableKind::Constructor:
      return Type::arrow(std::move(ps), Type::named(cls->name));
    case CallableKind::Lambda:
      return lambda->type ? *lambda->type : Type::arrow(std::move(ps), Type::unit());
    case CallableKind::FieldInit:
      return Type::arrow({}, field->type);
  }
  return Type::unit();
}

const Expr* Callable::decreases() const {
  return function && function->decreases ? &*function->decreases : nullptr;
}

TypedProgram::TypedProgram(Program program, std::vector<Callable> callables)
    : program_(std::move(program)), callables_(std::move(callables)) {
  relink();
}

TypedProgram::TypedProgram(const TypedProgram& other)
    : program_(other.program_), callables_(other.callables_) {
  relink();
}

TypedProgram& TypedProgram::operator=(const TypedProgram& other) {
  if (this != &other) {
    program_ = other.program_;
    callables_ = other.callables_;
    relink();
  }
  return *this;
}

void TypedProgram::relink() {
  auto at = [&](CallableId id) -> Callable* {
    if (id < 0 || static_cast<std::size_t>(id) >= callables_.size()) return nullptr;
    return &callables_[static_cast<std::size_t>(id)];
  };
  for (auto& c : callables_) {
    c.function = nullptr;
    c.cls = nullptr;
    c.field = nullptr;
    c.lambda = nullptr;
  }
  auto link_lambdas = [&](const Expr& root) {
    walk_expr(root, [&](const Expr& e) {
      if (e.kind == ExprKind::Lambda)
        if (auto* c = at(e.callable)) c->lambda = &e;
    });
  };
  auto link_fn = [&](const FunctionDecl& f, const ClassDecl* cls) {
    if (auto* c = at(f.id)) {
      c->function = &f;
      c->cls = cls;
    }
    for (const auto& e : f.preconditions) link_lambdas(e);
    for (const auto& e : f.postconditions) link_lambdas(e);
    if (f.decreases) link_lambdas(*f.decreases);
    if (f.body) walk_block_exprs(*f.body, [&](const Expr& e) {
      if (e.kind == ExprKind::Lambda)
        if (auto* c = at(e.callable)) c->lambda = &e;
    }, /*into_lambdas=*/true);
  };
  for (const auto& d : program_.decls) {
    if (auto* f = std::get_if<FunctionDecl>(&d)) {
      link_fn(*f, nullptr);
    } else if (auto* t = std::get_if<TraitDecl>(&d)) {
      for (const auto& m : t->methods) link_fn(m, nullptr);
    } else {
      const auto& cls = std::get<ClassDecl>(d);
      for (const auto& fld : cls.fields) {
        if (auto* c = at(fld.init_id)) {
          c->cls = &cls;
          c->field = &fld;
        }
        if (fld.init) link_lambdas(*fld.init);
      }
      if (auto* c = at(cls.ctor_id)) c->cls = &cls;
      if (cls.ctor) walk_block_exprs(cls.ctor->body, [&](const Expr& e) {
        if (e.kind == ExprKind::Lambda)
          if (auto* c = at(e.callable)) c->lambda = &e;
      });
      for (const auto& m : cls.methods) link_fn(m, &cls);
    }
  }
}

const Callable* TypedProgram::find(std::string_view name) const {
  for (const auto& c : callables_)
    if (c.name == name) return &c;
  return nullptr;
}

const ClassDecl* TypedProgram::find_class(std::string_view name) const {
  for (const auto& d : program_.decls)
    if (auto* c = std::get_if<ClassDecl>(&d); c && c->name == name) return c;
  return nullptr;
}

const TraitDecl* TypedProgram::find_trait(std::string_view name) const {
  for (const auto& d : program_.decls)
    if (auto* t = std::get_if<TraitDecl>(&d); t && t->name == name) return t;
  return nullptr;
}

const FunctionDecl* TypedProgram::find_function(std::string_view name) const {
  for (const auto& d : program_.decls)
    if (auto* f = std::get_if<FunctionDecl>(&d); f && f->name == name) return f;
  return nullptr;
}

std::vector<const ClassDecl*> TypedProgram::implementors(std::string_view trait) const {
  std::vector<const ClassDecl*> out;
  for (const auto& d : program_.decls)
    if (auto* c = std::get_if<ClassDecl>(&d); c && c->implements && *c->implements == trait)
      out.push_back(c);
  return out;
}

bool TypedProgram::is_first_order() const {
  bool higher = false;
  walk_program_exprs(program_, [&](const Expr& e) {
    higher = higher || e.kind == ExprKind::Lambda || e.kind == ExprKind::Invoke;
  });
  return !higher;
}

// ---------------------------------------------------------------------------
// Checker

namespace {

using Cat = TypeErrorCategory;

/// Assigns callable ids to every function, method, constructor, field
/// initializer and lambda in source order.
class CallableNumbering {
 public:
  std::vector<Callable> callables;

  void run(Program& p) {
    for (auto& d : p.decls) {
      if (auto* f = std::get_if<FunctionDecl>(&d)) {
        function(*f, CallableKind::Function, f->name);
      } else if (auto* t = std::get_if<TraitDecl>(&d)) {
        for (auto& m : t->methods) function(m, CallableKind::AbstractMethod, t->name + "." + m.name);
      } else {
        auto& cls = std::get<ClassDecl>(d);
        for (auto& fld : cls.fields) {
          if (!fld.init) continue;
          fld.init_id = add(CallableKind::FieldInit, cls.name + "." + fld.name + ".init", cls.name, fld.span);
          lambdas(*fld.init);
        }
        Callable& ctor = callables[static_cast<std::size_t>(
            cls.ctor_id = add(CallableKind::Constructor, cls.name + ".constructor", cls.name,
                              cls.ctor ? cls.ctor->span : cls.span))];
        ctor.implicit_ctor = !cls.ctor;
        if (cls.ctor) block(cls.ctor->body);
        for (auto& m : cls.methods) function(m, CallableKind::Method, cls.name + "." + m.name);
      }
    }
  }

 private:
  int lambda_count_ = 0;

  CallableId add(CallableKind kind, std::string name, std::string owner, const SourceSpan& span) {
    Callable c;
    c.id = static_cast<CallableId>(callables.size());
    c.kind = kind;
    c.name = std::move(name);
    c.owner = std::move(owner);
    c.span = span;
    callables.push_back(std::move(c));
    return callables.back().id;
  }

  void function(FunctionDecl& f, CallableKind kind, std::string name) {
    f.id = add(kind, std::move(name), f.owner, f.span);
    for (auto& e : f.preconditions) lambdas(e);
    for (auto& e : f.postconditions) lambdas(e);
    if (f.decreases) lambdas(*f.decreases);
    if (f.body) block(*f.body);
  }

  void block(Block& b) {
    for (auto& s : b) {
      if (s.value) lambdas(*s.value);
      block(s.then_body);
      block(s.else_body);
    }
  }

  void lambdas(Expr& e) {
    if (e.kind == ExprKind::Lambda) {
      e.callable = add(CallableKind::Lambda, "lambda#" + std::to_string(lambda_count_++), "", e.span);
    }
    for (auto& op : e.operands) lambdas(op);
  }
};

struct Local {
  Type type;
  bool ghost = false;
  bool is_param = false;
};

/// Field-assignment state while checking a constructor body.
struct CtorFlow {
  std::set<std::string> definitely;
  std::set<std::string> maybe;
};

struct Ctx {
  const ClassDecl* cls = nullptr;           // `this` available when set
  std::optional<Type> return_type;          // of the enclosing function body
  bool in_ctor = false;
  bool ghost = false;                       // checking ghost code
  bool contract = false;                    // requires / ensures / decreases
  bool ensures = false;                     // `result` allowed
  CtorFlow* flow = nullptr;
};

class Checker {
 public:
  explicit Checker(Program& p) : prog_(p) {}

  std::vector<TypeError> errors;

  void run() {
    collect();
    for (auto& d : prog_.decls) {
      if (auto* f = std::get_if<FunctionDecl>(&d)) {
        function(*f, nullptr);
      } else if (auto* t = std::get_if<TraitDecl>(&d)) {
        for (auto& m : t->methods) function(m, nullptr);
      } else {
        class_decl(std::get<ClassDecl>(d));
      }
    }
  }

 private:
  Program& prog_;
  std::map<std::string, FunctionDecl*, std::less<>> functions_;
  std::map<std::string, ClassDecl*, std::less<>> classes_;
  std::map<std::string, TraitDecl*, std::less<>> traits_;
  std::vector<std::vector<std::pair<std::string, Local>>> scopes_;

  void error(const SourceSpan& span, Cat cat, std::string msg) {
    errors.push_back({span, cat, std::move(msg)});
  }

  // -- declarations --------------------------------------------------------

  void collect() {
    std::set<std::string, std::less<>> names;
    for (auto& d : prog_.decls) {
      std::string name(decl_name(d));
      const SourceSpan& span = std::visit([](const auto& x) -> const SourceSpan& { return x.span; }, d);
      if (!names.insert(name).second) error(span, Cat::DuplicateName, "duplicate declaration '" + name + "'");
      if (auto* f = std::get_if<FunctionDecl>(&d)) functions_.emplace(name, f);
      else if (auto* t = std::get_if<TraitDecl>(&d)) traits_.emplace(name, t);
      else classes_.emplace(name, &std::get<ClassDecl>(d));
    }
  }

  bool known_type(const Type& t) {
    switch (t.kind) {
      case Type::Kind::Named:
        if (classes_.count(t.name) || traits_.count(t.name)) return true;
        error(t.span, Cat::UnresolvedName, "unknown type '" + t.name + "'");
        return false;
      case Type::Kind::Arrow: {
        bool ok = true;
        for (const auto& p : t.params) ok = known_type(p) && ok;
        return known_type(*t.result) && ok;
      }
      default:
        return true;
    }
  }

  bool implements(std::string_view cls, std::string_view trait) const {
    auto it = classes_.find(cls);
    return it != classes_.end() && it->second->implements && *it->second->implements == trait;
  }

  bool assignable(const Type& from, const Type& to) const {
    if (same_type(from, to)) return true;
    return from.kind == Type::Kind::Named && to.kind == Type::Kind::Named && implements(from.name, to.name);
  }

  void check_params(const std::vector<Param>& ps) {
    std::set<std::string> seen;
    for (const auto& p : ps) {
      known_type(p.type);
      if (p.name != "_" && !seen.insert(p.name).second)
        error(p.span, Cat::DuplicateName, "duplicate parameter '" + p.name + "'");
    }
  }

  void push_params(const std::vector<Param>& ps) {
    scopes_.emplace_back();
    for (const auto& p : ps) scopes_.back().push_back({p.name, Local{p.type, false, true}});
  }

  void function(FunctionDecl& f, const ClassDecl* cls) {
    check_params(f.params);
    if (f.return_type) known_type(*f.return_type);
    push_params(f.params);

    Ctx contract;
    contract.cls = cls;
    contract.contract = true;
    contract.return_type = f.return_type;
    for (auto& e : f.preconditions) expect_type(e, contract, Type::boolean(), "requires clause");
    contract.ensures = true;
    for (auto& e : f.postconditions) expect_type(e, contract, Type::boolean(), "ensures clause");
    contract.ensures = false;
    if (f.decreases) expect_type(*f.decreases, contract, Type::integer(), "decreases clause");

    if (f.body) {
      Ctx body;
      body.cls = cls;
      body.return_type = f.return_type;
      bool returns = block(*f.body, body);
      if (f.return_type && !returns)
        error(f.span, Cat::MissingReturn, "function '" + f.name + "' does not return a value on every path");
    }
    scopes_.pop_back();
  }

  void class_decl(ClassDecl& c) {
    std::set<std::string> members;
    for (auto& fld : c.fields) {
      known_type(fld.type);
      if (!members.insert(fld.name).second)
        error(fld.span, Cat::DuplicateName, "duplicate member '" + fld.name + "'");
      if (fld.init) {
        scopes_.emplace_back();
        Ctx ctx;  // no `this`: the object does not exist yet
        expect_type(*fld.init, ctx, fld.type, "field initializer");
        scopes_.pop_back();
      }
    }
    for (auto& m : c.methods)
      if (!members.insert(m.name).second)
        error(m.span, Cat::DuplicateName, "duplicate member '" + m.name + "'");

    if (c.implements) check_implements(c);

    if (c.ctor) {
      check_params(c.ctor->params);
      push_params(c.ctor->params);
      CtorFlow flow;
      Ctx ctx;
      ctx.cls = &c;
      ctx.in_ctor = true;
      ctx.flow = &flow;
      bool returned = block(c.ctor->body, ctx);
      if (!returned) check_all_assigned(c, flow, c.ctor->span);
      scopes_.pop_back();
    } else {
      for (const auto& fld : c.fields)
        if (!fld.init)
          error(fld.span, Cat::FieldUnassigned,
                "field '" + fld.name + "' has no initializer and class '" + c.name + "' has no constructor");
    }
    for (auto& m : c.methods) function(m, &c);
  }

  void check_implements(const ClassDecl& c) {
    auto it = traits_.find(*c.implements);
    if (it == traits_.end()) {
      error(c.span, Cat::UnresolvedName, "unknown trait '" + *c.implements + "'");
      return;
    }
    for (const auto& tm : it->second->methods) {
      auto m = std::find_if(c.methods.begin(), c.methods.end(), [&](const auto& x) { return x.name == tm.name; });
      if (m == c.methods.end()) {
        error(c.span, Cat::TypeMismatch, "class '" + c.name + "' does not implement '" + tm.name + "'");
        continue;
      }
      bool same = m->params.size() == tm.params.size() && m->return_type.has_value() == tm.return_type.has_value();
      for (std::size_t i = 0; same && i < m->params.size(); ++i) same = same_type(m->params[i].type, tm.params[i].type);
      if (same && m->return_type) same = same_type(*m->return_type, *tm.return_type);
      if (!same)
        error(m->span, Cat::TypeMismatch, "signature of '" + c.name + "." + m->name + "' differs from trait '" +
                                              it->second->name + "'");
    }
  }

  void check_all_assigned(const ClassDecl& c, const CtorFlow& flow, const SourceSpan& at) {
    for (const auto& fld : c.fields)
      if (!fld.init && !flow.definitely.count(fld.name))
        error(at, Cat::FieldUnassigned, "field '" + fld.name + "' is not assigned on every constructor path");
  }

  // -- statements ----------------------------------------------------------

  /// Returns true when every path through the block ends in a return.
  bool block(Block& b, Ctx& ctx) {
    scopes_.emplace_back();
    bool terminated = false;
    for (auto& s : b) {
      if (terminated) {
        error(s.span, Cat::MissingReturn, "unreachable statement after return");
        break;
      }
      terminated = statement(s, ctx);
    }
    scopes_.pop_back();
    return terminated;
  }

  bool statement(Stmt& s, Ctx& ctx) {
    switch (s.kind) {
      case StmtKind::VarDecl: {
        Ctx inner = ctx;
        inner.ghost = s.ghost;
        auto t = expr(*s.value, inner);
        if (t && t->kind == Type::Kind::Unit) {
          error(s.value->span, Cat::TypeMismatch, "initializer of '" + s.name + "' has no value");
          t.reset();
        }
        s.var_type = t;
        scopes_.back().push_back({s.name, Local{t.value_or(Type::unit()), s.ghost, false}});
        return false;
      }
      case StmtKind::FieldAssign:
        field_assign(s, ctx);
        return false;
      case StmtKind::Return:
        if (ctx.return_type) {
          if (!s.value) error(s.span, Cat::TypeMismatch, "missing return value");
          else expect_type(*s.value, ctx, *ctx.return_type, "return value");
        } else if (s.value) {
          error(s.value->span, Cat::TypeMismatch, "return with a value in a callable without a return type");
          expr(*s.value, ctx);
        }
        if (ctx.in_ctor) check_all_assigned(*ctx.cls, *ctx.flow, s.span);
        return true;
      case StmtKind::If: {
        expect_type(*s.value, ctx, Type::boolean(), "if condition");
        CtorFlow before = ctx.flow ? *ctx.flow : CtorFlow{};
        bool then_ret = block(s.then_body, ctx);
        CtorFlow after_then = ctx.flow ? *ctx.flow : CtorFlow{};
        if (ctx.flow) *ctx.flow = before;
        bool else_ret = s.has_else && block(s.else_body, ctx);
        if (ctx.flow) {
          CtorFlow after_else = *ctx.flow;
          CtorFlow merged;
          if (then_ret && !else_ret) {
            merged.definitely = after_else.definitely;
          } else if (else_ret && !then_ret) {
            merged.definitely = after_then.definitely;
          } else {
            std::set_intersection(after_then.definitely.begin(), after_then.definitely.end(),
                                  after_else.definitely.begin(), after_else.definitely.end(),
                                  std::inserter(merged.definitely, merged.definitely.end()));
          }
          merged.maybe = after_then.maybe;
          merged.maybe.insert(after_else.maybe.begin(), after_else.maybe.end());
          *ctx.flow = merged;
        }
        return then_ret && else_ret;
      }
      case StmtKind::ExprStmt:
        expr(*s.value, ctx);
        return false;
    }
    return false;
  }

  void field_assign(Stmt& s, Ctx& ctx) {
    if (!ctx.in_ctor) {
      error(s.span, Cat::TypeMismatch, "fields can only be assigned in a constructor");
      expr(*s.value, ctx);
      return;
    }
    const auto& fields = ctx.cls->fields;
    auto fld = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.name == s.name; });
    if (fld == fields.end()) {
      error(s.span, Cat::UnresolvedName, "class '" + ctx.cls->name + "' has no field '" + s.name + "'");
      expr(*s.value, ctx);
      return;
    }
    expect_type(*s.value, ctx, fld->type, "field '" + s.name + "'");
    if (fld->init) {
      error(s.span, Cat::FieldUnassigned, "field '" + s.name + "' already has an initializer");
    } else if (ctx.flow->maybe.count(s.name)) {
      error(s.span, Cat::FieldUnassigned, "field '" + s.name + "' assigned more than once");
    }
    ctx.flow->maybe.insert(s.name);
    ctx.flow->definitely.insert(s.name);
  }

  // -- expressions ---------------------------------------------------------

  const Local* lookup(std::string_view name) const {
    for (auto sc = scopes_.rbegin(); sc != scopes_.rend(); ++sc)
      for (auto it = sc->rbegin(); it != sc->rend(); ++it)
        if (it->first == name) return &it->second;
    return nullptr;
  }

  void expect_type(Expr& e, Ctx& ctx, const Type& want, const std::string& what) {
    auto t = expr(e, ctx);
    if (t && !assignable(*t, want))
      error(e.span, Cat::TypeMismatch,
            what + " has type " + type_to_string(*t) + ", expected " + type_to_string(want));
  }

  bool impure_in_contract(const Expr& e, const Ctx& ctx, std::string_view what) {
    if (!ctx.contract) return false;
    error(e.span, Cat::ContractImpure, std::string(what) + " is not allowed in a contract");
    return true;
  }

  static bool is_literal(const Expr& e) {
    if (e.kind == ExprKind::IntLit) return true;
    return e.kind == ExprKind::Unary && e.unary_op == UnaryOp::Neg && is_literal(e.operands[0]);
  }

  bool check_args(Expr& e, const std::vector<Type>& params, Ctx& ctx, const std::string& callee) {
    bool ok = true;
    if (e.arg_count() != params.size()) {
      error(e.span, Cat::TypeMismatch,
            "'" + callee + "' expects " + std::to_string(params.size()) + " argument(s), got " +
                std::to_string(e.arg_count()));
      ok = false;
    }
    for (std::size_t i = 0; i < e.arg_count(); ++i) {
      auto t = expr(e.arg(i), ctx);
      if (!t) {
        ok = false;
      } else if (i < params.size() && !assignable(*t, params[i])) {
        error(e.arg(i).span, Cat::TypeMismatch,
              "argument " + std::to_string(i + 1) + " of '" + callee + "' has type " + type_to_string(*t) +
                  ", expected " + type_to_string(params[i]));
        ok = false;
      }
    }
    return ok;
  }

  static std::vector<Type> param_types(const std::vector<Param>& ps) {
    std::vector<Type> out;
    for (const auto& p : ps) out.push_back(p.type);
    return out;
  }

  std::optional<Type> expr(Expr& e, Ctx& ctx) {
    auto t = infer(e, ctx);
    e.type = t;
    return t;
  }

  std::optional<Type> infer(Expr& e, Ctx& ctx) {
    switch (e.kind) {
      case ExprKind::IntLit:
        return Type::integer();
      case ExprKind::BoolLit:
        return Type::boolean();
      case ExprKind::VarRef:
        return var_ref(e, ctx);
      case ExprKind::Result:
        if (!ctx.ensures || !ctx.return_type) {
          error(e.span, Cat::ResultMisuse,
                ctx.ensures ? "'result' used in a callable without a return type"
                            : "'result' is only allowed in ensures clauses");
          return std::nullopt;
        }
        return *ctx.return_type;
      case ExprKind::This:
        if (impure_in_contract(e, ctx, "'this'")) return std::nullopt;
        if (!ctx.cls) {
          error(e.span, Cat::UnresolvedName, "'this' used outside a class");
          return std::nullopt;
        }
        if (ctx.in_ctor) {
          error(e.span, Cat::FieldUnassigned, "'this' escapes its constructor before construction completes");
          return std::nullopt;
        }
        return Type::named(ctx.cls->name);
      case ExprKind::Binary:
        return binary(e, ctx);
      case ExprKind::Unary: {
        bool neg = e.unary_op == UnaryOp::Neg;
        auto t = expr(e.operands[0], ctx);
        if (!t) return std::nullopt;
        Type want = neg ? Type::integer() : Type::boolean();
        if (!same_type(*t, want)) {
          error(e.span, Cat::TypeMismatch,
                std::string(neg ? "'-'" : "'!'") + " applied to " + type_to_string(*t));
          return std::nullopt;
        }
        return want;
      }
      case ExprKind::Call:
        return call(e, ctx);
      case ExprKind::MethodCall:
        return method_call(e, ctx);
      case ExprKind::FieldAccess:
        return field_access(e, ctx);
      case ExprKind::Invoke:
        return invoke(e, ctx);
      case ExprKind::Lambda:
        return lambda(e, ctx);
      case ExprKind::New:
        return new_object(e, ctx);
    }
    return std::nullopt;
  }

  std::optional<Type> var_ref(Expr& e, Ctx& ctx) {
    if (e.name == "_") {
      error(e.span, Cat::UnresolvedName, "'_' can be declared but never read");
      return std::nullopt;
    }
    const Local* local = lookup(e.name);
    if (!local) {
      if (functions_.count(e.name))
        error(e.span, Cat::TypeMismatch, "function '" + e.name + "' cannot be used as a value");
      else
        error(e.span, Cat::UnresolvedName, "unknown variable '" + e.name + "'");
      return std::nullopt;
    }
    e.ref.kind = local->is_param ? Resolution::Kind::Param : Resolution::Kind::Local;
    e.ref.ghost = local->ghost;
    if (local->ghost && !ctx.ghost) {
      error(e.span, Cat::GhostMisuse, "ghost variable '" + e.name + "' read by non-ghost code");
      return std::nullopt;
    }
    if (ctx.contract && !local->type.is_scalar()) {
      error(e.span, Cat::TypeMismatch, "contracts may only mention int and bool values, '" + e.name + "' has type " +
                                           type_to_string(local->type));
      return std::nullopt;
    }
    if (local->type.kind == Type::Kind::Unit) return std::nullopt;  // declaration already reported
    return local->type;
  }

  std::optional<Type> binary(Expr& e, Ctx& ctx) {
    auto lt = expr(e.operands[0], ctx);
    auto rt = expr(e.operands[1], ctx);
    if (!lt || !rt) return std::nullopt;
    auto require = [&](const Type& want) -> bool {
      if (same_type(*lt, want) && same_type(*rt, want)) return true;
      error(e.span, Cat::TypeMismatch,
            "operator '" + std::string(binary_op_text(e.binary_op)) + "' applied to " + type_to_string(*lt) +
                " and " + type_to_string(*rt));
      return false;
    };
    switch (e.binary_op) {
      case BinaryOp::Mul:
        if (!require(Type::integer())) return std::nullopt;
        if (!is_literal(e.operands[0]) && !is_literal(e.operands[1])) {
          error(e.span, Cat::NonlinearMultiplication, "'*' needs an integer literal operand");
          return std::nullopt;
        }
        return Type::integer();
      case BinaryOp::Add:
      case BinaryOp::Sub:
        if (!require(Type::integer())) return std::nullopt;
        return Type::integer();
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge:
        if (!require(Type::integer())) return std::nullopt;
        return Type::boolean();
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        if (lt->is_int() && rt->is_int()) return Type::boolean();
        if (!require(Type::boolean())) return std::nullopt;
        return Type::boolean();
      case BinaryOp::And:
      case BinaryOp::Or:
      case BinaryOp::Implies:
        if (!require(Type::boolean())) return std::nullopt;
        return Type::boolean();
    }
    return std::nullopt;
  }

  /// Rewrites `e` in place into an Invoke of `callee` with e's arguments.
  static void to_invoke(Expr& e, Expr callee) {
    std::vector<Expr> args;
    for (std::size_t i = 0; i < e.arg_count(); ++i) args.push_back(std::move(e.arg(i)));
    e.kind = ExprKind::Invoke;
    e.name.clear();
    e.operands.clear();
    e.operands.push_back(std::move(callee));
    for (auto& a : args) e.operands.push_back(std::move(a));
  }

  std::optional<Type> call(Expr& e, Ctx& ctx) {
    if (impure_in_contract(e, ctx, "call of '" + e.name + "'")) return std::nullopt;
    if (const Local* local = lookup(e.name); local && local->type.kind == Type::Kind::Arrow) {
      Expr callee = make_var(e.name, e.span);
      to_invoke(e, std::move(callee));
      return invoke(e, ctx);
    }
    auto it = functions_.find(e.name);
    if (it == functions_.end()) {
      error(e.span, Cat::UnresolvedName, "unknown function '" + e.name + "'");
      for (std::size_t i = 0; i < e.arg_count(); ++i) expr(e.arg(i), ctx);
      return std::nullopt;
    }
    const FunctionDecl& f = *it->second;
    e.ref.kind = Resolution::Kind::Function;
    e.ref.callable = f.id;
    if (!check_args(e, param_types(f.params), ctx, f.name)) return std::nullopt;
    return f.return_type ? *f.return_type : Type::unit();
  }

  std::optional<Type> method_call(Expr& e, Ctx& ctx) {
    if (impure_in_contract(e, ctx, "call of '" + e.name + "'")) return std::nullopt;
    auto rt = expr(e.operands[0], ctx);
    if (!rt) {
      for (std::size_t i = 0; i < e.arg_count(); ++i) expr(e.arg(i), ctx);
      return std::nullopt;
    }
    if (rt->kind != Type::Kind::Named) {
      error(e.span, Cat::TypeMismatch, "method '" + e.name + "' called on a value of type " + type_to_string(*rt));
      return std::nullopt;
    }
    if (auto ct = classes_.find(rt->name); ct != classes_.end()) {
      const ClassDecl& cls = *ct->second;
      for (const auto& m : cls.methods) {
        if (m.name != e.name) continue;
        e.ref = {Resolution::Kind::Method, m.id, cls.name, false};
        if (!check_args(e, param_types(m.params), ctx, cls.name + "." + m.name)) return std::nullopt;
        return m.return_type ? *m.return_type : Type::unit();
      }
      for (const auto& fld : cls.fields) {
        if (fld.name != e.name || fld.type.kind != Type::Kind::Arrow) continue;
        // `o.f(args)` on a function-valued field applies the field's value.
        Expr access;
        access.kind = ExprKind::FieldAccess;
        access.name = e.name;
        access.span = e.span;
        access.operands.push_back(std::move(e.operands[0]));
        access.type = fld.type;
        access.ref = {Resolution::Kind::Field, kNoCallable, cls.name, false};
        to_invoke(e, std::move(access));
        return invoke_checked(e, ctx, fld.type);
      }
      error(e.span, Cat::UnresolvedName, "class '" + cls.name + "' has no method '" + e.name + "'");
      return std::nullopt;
    }
    auto tt = traits_.find(rt->name);
    if (tt == traits_.end()) return std::nullopt;  // unknown type, already reported
    const TraitDecl& trait = *tt->second;
    for (const auto& m : trait.methods) {
      if (m.name != e.name) continue;
      e.ref = {Resolution::Kind::AbstractMethod, m.id, trait.name, false};
      if (!check_args(e, param_types(m.params), ctx, trait.name + "." + m.name)) return std::nullopt;
      return *m.return_type;
    }
    error(e.span, Cat::UnresolvedName, "trait '" + trait.name + "' has no method '" + e.name + "'");
    return std::nullopt;
  }

  std::optional<Type> field_access(Expr& e, Ctx& ctx) {
    if (impure_in_contract(e, ctx, "field access")) return std::nullopt;
    Expr& recv = e.operands[0];
    std::optional<Type> rt;
    if (recv.kind == ExprKind::This && ctx.in_ctor) {
      // Inside a constructor `this.f` may be read once f is assigned.
      rt = Type::named(ctx.cls->name);
      recv.type = rt;
      const auto& fields = ctx.cls->fields;
      auto fld = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.name == e.name; });
      if (fld != fields.end() && !fld->init && !ctx.flow->definitely.count(e.name)) {
        error(e.span, Cat::FieldUnassigned, "field '" + e.name + "' read before it is assigned");
        return std::nullopt;
      }
    } else {
      rt = expr(recv, ctx);
    }
    if (!rt) return std::nullopt;
    if (rt->kind == Type::Kind::Named) {
      if (auto ct = classes_.find(rt->name); ct != classes_.end()) {
        for (const auto& fld : ct->second->fields) {
          if (fld.name != e.name) continue;
          e.ref = {Resolution::Kind::Field, kNoCallable, ct->first, false};
          return fld.type;
        }
        error(e.span, Cat::UnresolvedName, "class '" + ct->first + "' has no field '" + e.name + "'");
        return std::nullopt;
      }
    }
    error(e.span, Cat::TypeMismatch, "field '" + e.name + "' accessed on a value of type " + type_to_string(*rt));
    return std::nullopt;
  }

  std::optional<Type> invoke(Expr& e, Ctx& ctx) {
    if (impure_in_contract(e, ctx, "function application")) return std::nullopt;
    auto ft = expr(e.operands[0], ctx);
    if (!ft) {
      for (std::size_t i = 0; i < e.arg_count(); ++i) expr(e.arg(i), ctx);
      return std::nullopt;
    }
    return invoke_checked(e, ctx, *ft);
  }

  std::optional<Type> invoke_checked(Expr& e, Ctx& ctx, const Type& ft) {
    if (ft.kind != Type::Kind::Arrow) {
      error(e.span, Cat::TypeMismatch, "value of type " + type_to_string(ft) + " is not a function");
      return std::nullopt;
    }
    if (!check_args(e, ft.params, ctx, pretty_callee(e))) return std::nullopt;
    return *ft.result;
  }

  static std::string pretty_callee(const Expr& e) {
    const Expr& c = e.operands[0];
    if (c.kind == ExprKind::VarRef || c.kind == ExprKind::FieldAccess) return c.name;
    return "function value";
  }

  std::optional<Type> lambda(Expr& e, Ctx& ctx) {
    if (impure_in_contract(e, ctx, "lambda")) return std::nullopt;
    check_params(e.params);
    push_params(e.params);
    Ctx inner = ctx;
    inner.ensures = false;
    inner.return_type.reset();
    auto bt = expr(e.operands[0], inner);
    scopes_.pop_back();
    if (!bt) return std::nullopt;
    if (bt->kind == Type::Kind::Unit) {
      error(e.span, Cat::TypeMismatch, "lambda body has no value");
      return std::nullopt;
    }
    return Type::arrow(param_types(e.params), *bt);
  }

  std::optional<Type> new_object(Expr& e, Ctx& ctx) {
    if (impure_in_contract(e, ctx, "object creation")) return std::nullopt;
    auto ct = classes_.find(e.name);
    if (ct == classes_.end()) {
      error(e.span, traits_.count(e.name) ? Cat::TypeMismatch : Cat::UnresolvedName,
            traits_.count(e.name) ? "cannot instantiate trait '" + e.name + "'" : "unknown class '" + e.name + "'");
      for (std::size_t i = 0; i < e.arg_count(); ++i) expr(e.arg(i), ctx);
      return std::nullopt;
    }
    const ClassDecl& cls = *ct->second;
    e.ref = {Resolution::Kind::Constructor, cls.ctor_id, cls.name, false};
    std::vector<Type> ps = cls.ctor ? param_types(cls.ctor->params) : std::vector<Type>{};
    if (!check_args(e, ps, ctx, "new " + cls.name)) return std::nullopt;
    return Type::named(cls.name);
  }
};

}  // namespace

std::variant<TypedProgram, std::vector<TypeError>> typecheck(Program program) {
  CallableNumbering numbering;
  numbering.run(program);
  Checker checker(program);
  checker.run();
  if (!checker.errors.empty()) return std::move(checker.errors);
  return TypedProgram(std::move(program), std::move(numbering.callables));
}

}  // namespace miniver
