#include "miniver/vcgen.hpp"

#include <algorithm>
#include <sstream>

namespace miniver {

// ---------------------------------------------------------------------------
// Expressions as logic

LinTerm term_of(const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit:
      return LinTerm::of(e.int_value);
    case ExprKind::VarRef:
      return LinTerm::var(e.name);
    case ExprKind::Result:
      return LinTerm::var("result");
    case ExprKind::Unary:
      if (e.unary_op == UnaryOp::Neg) return term_of(e.operands[0]).negated();
      break;
    case ExprKind::Binary: {
      if (e.binary_op == BinaryOp::Add) return term_of(e.operands[0]) + term_of(e.operands[1]);
      if (e.binary_op == BinaryOp::Sub) return term_of(e.operands[0]) - term_of(e.operands[1]);
      if (e.binary_op == BinaryOp::Mul) {
        LinTerm a = term_of(e.operands[0]);
        LinTerm b = term_of(e.operands[1]);
        if (a.is_constant()) return b.scaled(a.constant);
        if (b.is_constant()) return a.scaled(b.constant);
        throw std::logic_error("nonlinear multiplication at " + format_location(e.span));
      }
      break;
    }
    default:
      break;
  }
  throw std::logic_error("not an integer term at " + format_location(e.span));
}

namespace {

bool is_bool_typed(const Expr& e) { return e.type && e.type->is_bool(); }

}  // namespace

Formula formula_of(const Expr& e) {
  switch (e.kind) {
    case ExprKind::BoolLit:
      return f_bool(e.bool_value);
    case ExprKind::VarRef:
      return f_atom(e.name);
    case ExprKind::Result:
      return f_atom("result");
    case ExprKind::Unary:
      if (e.unary_op == UnaryOp::Not) return f_not(formula_of(e.operands[0]));
      break;
    case ExprKind::Binary: {
      const Expr& l = e.operands[0];
      const Expr& r = e.operands[1];
      switch (e.binary_op) {
        case BinaryOp::And: return f_and(formula_of(l), formula_of(r));
        case BinaryOp::Or: return f_or(formula_of(l), formula_of(r));
        case BinaryOp::Implies: return f_implies(formula_of(l), formula_of(r));
        case BinaryOp::Eq:
        case BinaryOp::Ne:
          if (is_bool_typed(l)) {
            Formula iff = f_iff(formula_of(l), formula_of(r));
            return e.binary_op == BinaryOp::Eq ? iff : f_not(iff);
          }
          return f_cmp(e.binary_op == BinaryOp::Eq ? CmpOp::Eq : CmpOp::Ne, term_of(l), term_of(r));
        case BinaryOp::Lt: return f_cmp(CmpOp::Lt, term_of(l), term_of(r));
        case BinaryOp::Le: return f_cmp(CmpOp::Le, term_of(l), term_of(r));
        case BinaryOp::Gt: return f_cmp(CmpOp::Gt, term_of(l), term_of(r));
        case BinaryOp::Ge: return f_cmp(CmpOp::Ge, term_of(l), term_of(r));
        default: break;
      }
      break;
    }
    default:
      break;
  }
  throw std::logic_error("not a boolean formula at " + format_location(e.span));
}

// ---------------------------------------------------------------------------
// Contracts

ContractEnv ContractEnv::build(const TypedProgram& program) {
  ContractEnv env;
  for (const auto& c : program.callables()) {
    Contract k;
    for (const auto& p : c.params()) k.params.push_back(p.name);
    k.signature = c.signature();
    if (c.function) {
      for (const auto& e : c.function->preconditions) k.requires_.push_back(formula_of(e));
      for (const auto& e : c.function->postconditions) k.ensures.push_back(formula_of(e));
      if (c.function->decreases) k.decreases = term_of(*c.function->decreases);
      k.result_type = c.function->return_type;
    }
    env.contracts.emplace(c.id, std::move(k));
  }
  return env;
}

const Contract* ContractEnv::find(CallableId id) const {
  auto it = contracts.find(id);
  return it == contracts.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// A-normalization

namespace {

class Anormalizer {
 public:
  Anormalizer(const Block& body, const std::vector<std::string>& params) {
    for (const auto& p : params) {
      used_.insert(p);
      declared_.insert(p);
    }
    auto note = [&](const Expr& e) {
      if (e.kind == ExprKind::VarRef) used_.insert(e.name);
      for (const auto& p : e.params) used_.insert(p.name);
    };
    walk_block_exprs(body, note);
    walk_stmts(body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl) used_.insert(s.name);
    });
  }

  Block block(const Block& in) {
    scopes_.emplace_back();
    Block out;
    for (const auto& s : in) statement(s, out);
    scopes_.pop_back();
    return out;
  }

 private:
  std::set<std::string> used_;
  std::set<std::string> declared_;
  std::vector<std::map<std::string, std::string>> scopes_;
  int next_temp_ = 0;

  std::string current(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return name;
  }

  std::string declare(const std::string& name) {
    std::string unique = declared_.count(name) ? fresh_name(name, used_) : name;
    used_.insert(unique);
    declared_.insert(unique);
    scopes_.back()[name] = unique;
    return unique;
  }

  std::string temp() {
    std::string name;
    do name = "t" + std::to_string(next_temp_++);
    while (used_.count(name));
    used_.insert(name);
    declared_.insert(name);
    return name;
  }

  void rename_in_lambda(Expr& e) {
    if (e.kind == ExprKind::VarRef && e.ref.kind == Resolution::Kind::Local) e.name = current(e.name);
    for (auto& op : e.operands) rename_in_lambda(op);
  }

  Expr lift(const Expr& e, bool ghost, Block& out, bool keep_top) {
    Expr r = e;
    if (e.kind == ExprKind::Lambda) {
      rename_in_lambda(r.operands[0]);
      return r;
    }
    if (e.kind == ExprKind::VarRef) {
      if (e.ref.kind == Resolution::Kind::Local) r.name = current(e.name);
      return r;
    }
    for (auto& op : r.operands) op = lift(op, ghost, out, false);
    bool scalar_read = e.kind == ExprKind::FieldAccess && e.type && e.type->is_scalar();
    if (keep_top || !(e.is_call_like() || scalar_read)) return r;

    std::string name = temp();
    Stmt decl;
    decl.kind = StmtKind::VarDecl;
    decl.span = e.span;
    decl.name = name;
    decl.ghost = ghost;
    decl.var_type = e.type;
    decl.value = std::move(r);
    out.push_back(std::move(decl));

    Expr ref = make_var(name, e.span);
    ref.type = e.type;
    ref.ref.kind = Resolution::Kind::Local;
    ref.ref.ghost = ghost;
    return ref;
  }

  void statement(const Stmt& s, Block& out) {
    Stmt r = s;
    switch (s.kind) {
      case StmtKind::VarDecl:
        r.value = lift(*s.value, s.ghost, out, true);
        r.name = declare(s.name);
        break;
      case StmtKind::FieldAssign:
      case StmtKind::Return:
        if (s.value) r.value = lift(*s.value, s.ghost, out, false);
        break;
      case StmtKind::ExprStmt:
        r.value = lift(*s.value, s.ghost, out, s.value->is_call_like());
        break;
      case StmtKind::If:
        r.value = lift(*s.value, s.ghost, out, false);
        r.then_body = block(s.then_body);
        r.else_body = block(s.else_body);
        break;
    }
    out.push_back(std::move(r));
  }
};

}  // namespace

Block anormalize(const Block& body, const std::vector<std::string>& params) {
  return Anormalizer(body, params).block(body);
}

// ---------------------------------------------------------------------------
// Weakest preconditions

namespace {

using SiteKey = std::pair<std::size_t, std::size_t>;

SiteKey key_of(const Expr& e) { return {e.span.start, e.span.end}; }

Sort sort_of(const std::optional<Type>& t, std::string& name) {
  name.clear();
  if (t && t->is_int()) return Sort::Int;
  if (t && t->is_bool()) return Sort::Bool;
  if (!t || t->kind == Type::Kind::Unit) name = "unit";
  else if (t->kind == Type::Kind::Arrow) name = "closure";
  else name = t->name;
  return Sort::Named;
}

Formula havoc(const std::string& var, const std::optional<Type>& t, Formula q) {
  std::string sort_name;
  Sort s = sort_of(t, sort_name);
  return f_forall(var, s, sort_name, std::move(q));
}

std::set<std::string> term_vars(const Replacement& r) {
  std::set<std::string> out;
  if (auto* t = std::get_if<LinTerm>(&r)) {
    for (const auto& [v, _] : t->coeffs) out.insert(v);
  } else if (auto* f = std::get_if<Formula>(&r)) {
    out = free_vars(*f).all();
  }
  return out;
}

class WpEngine {
 public:
  WpEngine(const ContractEnv& env, Formula post) : env_(env), post_(std::move(post)) {}

  /// Switches to obligation-at-one-site mode: other calls only contribute
  /// their postconditions and the target site contributes `obligation`.
  void target(SiteKey site, SiteObligation::Kind kind, LinTerm caller_measure) {
    target_ = site;
    kind_ = kind;
    caller_measure_ = std::move(caller_measure);
  }

  Formula block(const Block& b, std::size_t i, const std::optional<Formula>& k, const SourceSpan& end) {
    if (i == b.size()) {
      if (!k) throw MalformedBlock(end, "control reaches the end of a block without a return");
      return *k;
    }
    const Stmt& s = b[i];
    auto rest = [&] { return block(b, i + 1, k, s.span); };
    switch (s.kind) {
      case StmtKind::VarDecl: {
        const Expr& e = *s.value;
        if (e.is_call_like()) return call(e, s.name, s.var_type, rest());
        if (e.kind == ExprKind::FieldAccess || !s.var_type || !s.var_type->is_scalar())
          return havoc(s.name, s.var_type, rest());
        if (s.var_type->is_int()) return substitute(rest(), s.name, Replacement{term_of(e)});
        return substitute(rest(), s.name, Replacement{formula_of(e)});
      }
      case StmtKind::ExprStmt:
        if (s.value->is_call_like()) return call(*s.value, "_", s.value->type, rest());
        return rest();
      case StmtKind::FieldAssign:
        return rest();
      case StmtKind::Return:
        return returned(s);
      case StmtKind::If: {
        Formula c = formula_of(*s.value);
        std::optional<Formula> after = i + 1 < b.size() ? std::optional<Formula>(rest()) : k;
        Formula then_f = block(s.then_body, 0, after, s.span);
        Formula else_f = block(s.else_body, 0, after, s.span);
        return f_and(f_implies(c, then_f), f_implies(f_not(c), else_f));
      }
    }
    return f_true();
  }

 private:
  const ContractEnv& env_;
  Formula post_;
  std::optional<SiteKey> target_;
  SiteObligation::Kind kind_ = SiteObligation::Kind::Bound;
  LinTerm caller_measure_;

  Formula returned(const Stmt& s) {
    if (!s.value || !s.value->type || !s.value->type->is_scalar()) return post_;
    if (s.value->type->is_int()) return substitute(post_, "result", Replacement{term_of(*s.value)});
    return substitute(post_, "result", Replacement{formula_of(*s.value)});
  }

  Formula call(const Expr& e, const std::string& x, const std::optional<Type>& type, Formula q) {
    const Contract* contract = nullptr;
    if (e.kind == ExprKind::Call || e.kind == ExprKind::MethodCall) contract = env_.find(e.ref.callable);

    std::map<std::string, Replacement> actuals;
    std::set<std::string> actual_vars;
    if (contract) {
      for (std::size_t i = 0; i < e.arg_count() && i < contract->params.size(); ++i) {
        const Expr& a = e.arg(i);
        if (!a.type || !a.type->is_scalar()) continue;
        Replacement r = a.type->is_int() ? Replacement{term_of(a)} : Replacement{formula_of(a)};
        auto vs = term_vars(r);
        actual_vars.insert(vs.begin(), vs.end());
        actuals.emplace(contract->params[i], std::move(r));
      }
    }

    if (target_ && *target_ == key_of(e)) {
      if (kind_ == SiteObligation::Kind::Nonneg) return f_cmp(CmpOp::Ge, caller_measure_, LinTerm::of(0));
      if (!contract || !contract->decreases) return f_true();
      // Instantiate the callee measure alone; the caller's may share names.
      Formula callee = substitute(f_cmp(CmpOp::Lt, *contract->decreases, LinTerm::of(0)), actuals);
      return f_cmp(CmpOp::Lt, callee->lhs, caller_measure_);
    }
    if (!contract) return havoc(x, type, std::move(q));

    std::string binder = x;
    if (actual_vars.count(x)) {
      std::set<std::string> avoid = free_vars(q).all();
      avoid.insert(actual_vars.begin(), actual_vars.end());
      avoid.insert(x);
      binder = fresh_name(x, avoid);
      q = substitute(q, x, Replacement{binder});
    }
    std::map<std::string, Replacement> with_result = actuals;
    if (type && type->is_int()) with_result.emplace("result", Replacement{LinTerm::var(binder)});
    else if (type && type->is_bool()) with_result.emplace("result", Replacement{f_atom(binder)});

    std::vector<Formula> ens;
    for (const auto& f : contract->ensures) ens.push_back(substitute(f, with_result));
    Formula assumed = ens.empty() ? havoc(binder, type, std::move(q))
                                  : havoc(binder, type, f_implies(f_conj(ens), std::move(q)));
    if (target_ || contract->requires_.empty()) return assumed;
    std::vector<Formula> req;
    for (const auto& f : contract->requires_) req.push_back(substitute(f, actuals));
    return f_and(f_conj(req), assumed);
  }
};

}  // namespace

Formula wp(const Block& stmts, const Formula& post, const std::optional<Formula>& fallthrough,
           const ContractEnv& env) {
  return WpEngine(env, post).block(stmts, 0, fallthrough, stmts.empty() ? SourceSpan{} : stmts.back().span);
}

// ---------------------------------------------------------------------------
// Verification conditions

std::string_view vc_kind_name(VcKind k) {
  switch (k) {
    case VcKind::Postcondition: return "postcondition";
    case VcKind::CalleePrecondition: return "callee_precondition";
    case VcKind::DecreasesBound: return "decreases_bound";
    case VcKind::DecreasesNonneg: return "decreases_nonneg";
    case VcKind::ContractMatch: return "contract_match";
  }
  return "?";
}

namespace {

/// The callable's code as a block, with a synthesized `return` for
/// expression-bodied callables.
std::optional<Block> body_of(const Callable& c) {
  auto wrap = [](const Expr& e) {
    Stmt s;
    s.kind = StmtKind::Return;
    s.span = e.span;
    s.value = e;
    return Block{s};
  };
  switch (c.kind) {
    case CallableKind::Function:
    case CallableKind::Method:
      return *c.function->body;
    case CallableKind::AbstractMethod:
      return std::nullopt;
    case CallableKind::Constructor:
      return c.cls->ctor ? c.cls->ctor->body : Block{};
    case CallableKind::Lambda:
      return wrap(c.lambda->operands[0]);
    case CallableKind::FieldInit:
      return wrap(*c.field->init);
  }
  return std::nullopt;
}

std::vector<std::string> param_names(const Callable& c) {
  std::vector<std::string> out;
  for (const auto& p : c.params()) out.push_back(p.name);
  return out;
}

bool has_contracted_call(const Block& b) {
  bool found = false;
  walk_block_exprs(
      b, [&](const Expr& e) { found = found || e.kind == ExprKind::Call || e.kind == ExprKind::MethodCall; }, false);
  return found;
}

bool site_is_ghost(const Block& body, const Expr* site) {
  bool ghost = false;
  walk_stmts(body, [&](const Stmt& s) {
    if (!s.value) return;
    walk_expr(*s.value, [&](const Expr& e) {
      if (&e == site) ghost = s.ghost;
    }, false);
  });
  return ghost;
}

}  // namespace

std::vector<const Expr*> decreasing_sites(const TypedProgram& program, CallableId id, Mode mode) {
  std::vector<const Expr*> out;
  const Callable& c = program.callable(id);
  if (!c.decreases()) return out;
  if (mode == Mode::SelfCheck) {
    for (const auto& site : call_sites(program, id, EdgePolicy::FirstOrder))
      if (site.expr->kind != ExprKind::Invoke && site.expr->ref.callable == id) out.push_back(site.expr);
  } else if (mode == Mode::Sound) {
    CallGraph g = build_call_graph(program, EdgePolicy::Overapprox);
    std::vector<CallableId> members;
    for (const auto& scc : sccs(g))
      if (scc.nontrivial && std::find(scc.members.begin(), scc.members.end(), id) != scc.members.end())
        members = scc.members;
    for (const auto& site : call_sites(program, id, EdgePolicy::Overapprox)) {
      if (site.expr->kind == ExprKind::Invoke) continue;
      bool in_cycle = std::any_of(site.targets.begin(), site.targets.end(), [&](CallableId t) {
        return std::find(members.begin(), members.end(), t) != members.end();
      });
      if (in_cycle) out.push_back(site.expr);
    }
  }
  return out;
}

std::vector<VerificationCondition> vcs_for_callable(CallableId id, const TypedProgram& program,
                                                    const ContractEnv& env, Mode mode) {
  std::vector<VerificationCondition> out;
  const Callable& c = program.callable(id);
  std::optional<Block> raw = body_of(c);
  if (!raw) return out;
  Block body = anormalize(*raw, param_names(c));
  const Contract& contract = env.contracts.at(id);

  if (c.kind == CallableKind::Function || c.kind == CallableKind::Method) {
    Formula post = f_conj(contract.ensures);
    std::optional<Formula> fallthrough;
    if (!c.function->return_type) fallthrough = post;
    Formula f = wp(body, post, fallthrough, env);
    if (!contract.requires_.empty()) f = f_implies(f_conj(contract.requires_), f);
    out.push_back({id, VcKind::Postcondition, f, c.span, false, ""});
  } else if (has_contracted_call(*raw)) {
    out.push_back({id, VcKind::CalleePrecondition, wp(body, f_true(), f_true(), env), c.span, false, ""});
  }

  if (contract.decreases) {
    for (const Expr* site : decreasing_sites(program, id, mode)) {
      bool ghost = site_is_ghost(*c.function->body, site);
      for (auto kind : {SiteObligation::Kind::Bound, SiteObligation::Kind::Nonneg}) {
        WpEngine engine(env, f_true());
        engine.target(key_of(*site), kind, *contract.decreases);
        Formula f = engine.block(body, 0, f_true(), c.span);
        if (!contract.requires_.empty()) f = f_implies(f_conj(contract.requires_), f);
        VcKind vk = kind == SiteObligation::Kind::Bound ? VcKind::DecreasesBound : VcKind::DecreasesNonneg;
        out.push_back({id, vk, f, site->span, ghost, ""});
      }
    }
  }
  return out;
}

namespace {

bool same_exprs(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_structure(a[i], b[i])) return false;
  return true;
}

bool same_contract(const FunctionDecl& impl, const FunctionDecl& decl) {
  if (impl.params.size() != decl.params.size()) return false;
  for (std::size_t i = 0; i < impl.params.size(); ++i)
    if (impl.params[i].name != decl.params[i].name) return false;
  if (impl.decreases.has_value() != decl.decreases.has_value()) return false;
  if (impl.decreases && !same_structure(*impl.decreases, *decl.decreases)) return false;
  return same_exprs(impl.preconditions, decl.preconditions) && same_exprs(impl.postconditions, decl.postconditions);
}

}  // namespace

std::vector<VerificationCondition> vcs_for_program(const TypedProgram& program, Mode mode) {
  ContractEnv env = ContractEnv::build(program);
  std::vector<VerificationCondition> out;
  for (const auto& c : program.callables()) {
    auto vcs = vcs_for_callable(c.id, program, env, mode);
    out.insert(out.end(), std::make_move_iterator(vcs.begin()), std::make_move_iterator(vcs.end()));
  }
  for (const auto& d : program.program().decls) {
    const auto* cls = std::get_if<ClassDecl>(&d);
    if (!cls || !cls->implements) continue;
    const TraitDecl* trait = program.find_trait(*cls->implements);
    if (!trait) continue;
    for (const auto& decl : trait->methods) {
      for (const auto& impl : cls->methods) {
        if (impl.name != decl.name) continue;
        bool same = same_contract(impl, decl);
        std::string detail = same ? "" : "contract of '" + cls->name + "." + impl.name + "' differs from '" +
                                             trait->name + "." + decl.name + "'";
        out.push_back({impl.id, VcKind::ContractMatch, f_bool(same), impl.span, false, detail});
      }
    }
  }
  return out;
}

std::string dump_vc(const TypedProgram& program, const VerificationCondition& vc) {
  std::ostringstream os;
  os << program.callable(vc.owner).name << " " << vc_kind_name(vc.kind) << " " << vc.origin.line << ":"
     << vc.origin.col << ": " << to_prefix(vc.formula);
  return os.str();
}

}  // namespace miniver
