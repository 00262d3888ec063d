#include "miniver/runtime.hpp"

#include <pthread.h>

#include <functional>
#include <limits>

#include "miniver/formula.hpp"
#include "miniver/parser.hpp"

namespace miniver {

std::string render_value(const Value& v) {
  struct {
    std::string operator()(UnitV) const { return "unit"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const ObjectV& o) const { return "<" + o.data->cls + ">"; }
    std::string operator()(const ClosureV& c) const { return "<closure lambda#" + std::to_string(c.data->id) + ">"; }
  } visitor;
  return std::visit(visitor, v);
}

bool same_outcome(const Outcome& a, const Outcome& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<Returned>(&a)) {
    const auto& y = std::get<Returned>(b);
    // Objects and closures compare by rendering: runs never share heaps.
    return render_value(x->value) == render_value(y.value);
  }
  if (auto* x = std::get_if<ContractViolation>(&a)) {
    const auto& y = std::get<ContractViolation>(b);
    return x->callable == y.callable && x->clause == y.clause && x->index == y.index &&
           x->site.start == y.site.start && x->returned.has_value() == y.returned.has_value() &&
           (!x->returned || render_value(*x->returned) == render_value(*y.returned));
  }
  if (auto* x = std::get_if<FuelExhausted>(&a)) return x->consumed == std::get<FuelExhausted>(b).consumed;
  const auto& x = std::get<RuntimeError>(a);
  const auto& y = std::get<RuntimeError>(b);
  return x.kind == y.kind && x.site.start == y.site.start;
}

std::string render_outcome(const Outcome& o) {
  if (auto* r = std::get_if<Returned>(&o)) return "returned " + render_value(r->value);
  if (auto* v = std::get_if<ContractViolation>(&o)) {
    std::string out = std::string(v->clause == ClauseKind::Requires ? "requires " : "ensures ") + v->clause_text +
                      " violated";
    if (v->returned) out += "; returned " + render_value(*v->returned);
    return out + " (" + v->callable + ", " + format_location(v->site) + ")";
  }
  if (auto* f = std::get_if<FuelExhausted>(&o)) return "fuel exhausted after " + std::to_string(f->consumed) + " frames";
  const auto& e = std::get<RuntimeError>(o);
  return "runtime error (" + e.kind + "): " + e.message;
}

// ---------------------------------------------------------------------------
// Erasure

namespace {

void strip(Block& b) {
  Block out;
  for (auto& s : b) {
    if (s.kind == StmtKind::VarDecl && s.ghost) continue;
    strip(s.then_body);
    strip(s.else_body);
    out.push_back(std::move(s));
  }
  b = std::move(out);
}

void strip(FunctionDecl& f) {
  if (f.body) strip(*f.body);
}

}  // namespace

TypedProgram erase(const TypedProgram& program) {
  Program p = program.program();
  for (auto& d : p.decls) {
    if (auto* f = std::get_if<FunctionDecl>(&d)) {
      strip(*f);
    } else if (auto* c = std::get_if<ClassDecl>(&d)) {
      if (c->ctor) strip(c->ctor->body);
      for (auto& m : c->methods) strip(m);
    }
  }
  auto checked = typecheck(std::move(p));
  if (auto* errors = std::get_if<std::vector<TypeError>>(&checked)) {
    std::string msg = "erased program is ill-formed (ghost dependency)";
    for (const auto& e : *errors) msg += "\n  " + format_error(e);
    throw ErasureError(msg);
  }
  return std::get<TypedProgram>(std::move(checked));
}

// ---------------------------------------------------------------------------
// Interpreter

namespace {

struct Fault {
  RuntimeError error;
};
struct Violation {
  ContractViolation violation;
};

struct Frame {
  std::vector<std::pair<std::string, Value>> vars;
  std::optional<ObjectV> self;
  std::optional<Value> result;  // bound while checking ensures
};

class Interpreter {
 public:
  Interpreter(const TypedProgram& program, std::uint64_t budget) : program_(program), budget_(budget) {}

  std::uint64_t frames() const { return consumed_; }
  bool out_of_fuel() const { return halted_; }

  Value call_function(const FunctionDecl& f, const std::vector<Value>& args, std::optional<ObjectV> self) {
    if (!enter()) return UnitV{};
    Frame frame;
    frame.self = std::move(self);
    for (std::size_t i = 0; i < f.params.size(); ++i) frame.vars.emplace_back(f.params[i].name, args[i]);
    auto r = block(*f.body, frame);
    return r ? std::move(*r) : Value{UnitV{}};
  }

  /// Entry with contract checks on the entry callable itself.
  Value call_checked(const FunctionDecl& f, const std::vector<Value>& args) {
    if (!enter()) return UnitV{};
    Frame frame;
    for (std::size_t i = 0; i < f.params.size(); ++i) frame.vars.emplace_back(f.params[i].name, args[i]);
    for (std::size_t i = 0; i < f.preconditions.size(); ++i)
      if (!truth(f.preconditions[i], frame) && !halted_)
        throw Violation{{f.name, ClauseKind::Requires, i, f.preconditions[i].span, pretty_print(f.preconditions[i]), {}}};
    auto r = block(*f.body, frame);
    Value result = r ? std::move(*r) : Value{UnitV{}};
    if (halted_) return result;
    frame.result = result;
    for (std::size_t i = 0; i < f.postconditions.size(); ++i)
      if (!truth(f.postconditions[i], frame) && !halted_)
        throw Violation{
            {f.name, ClauseKind::Ensures, i, f.postconditions[i].span, pretty_print(f.postconditions[i]), result}};
    return result;
  }

 private:
  const TypedProgram& program_;
  std::uint64_t budget_;
  std::uint64_t consumed_ = 0;
  // Set when a frame is refused for lack of fuel. Evaluation then unwinds
  // through ordinary returns; values produced after that point are junk.
  bool halted_ = false;

  bool enter() {
    if (consumed_ >= budget_) halted_ = true;
    if (halted_) return false;
    ++consumed_;
    return true;
  }

  [[noreturn]] void fault(const std::string& kind, const SourceSpan& at, const std::string& msg) {
    throw Fault{{kind, at, msg}};
  }

  static const Value* lookup(const Frame& f, const std::string& name) {
    for (auto it = f.vars.rbegin(); it != f.vars.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }

  std::optional<Value> block(const Block& b, Frame& frame) {
    std::size_t mark = frame.vars.size();
    for (const auto& s : b) {
      auto r = statement(s, frame);
      if (halted_) r = Value{UnitV{}};
      if (r) {
        frame.vars.resize(mark);
        return r;
      }
    }
    frame.vars.resize(mark);
    return std::nullopt;
  }

  std::optional<Value> statement(const Stmt& s, Frame& frame) {
    switch (s.kind) {
      case StmtKind::VarDecl: {
        Value v = eval(*s.value, frame);
        frame.vars.emplace_back(s.name, std::move(v));
        return std::nullopt;
      }
      case StmtKind::FieldAssign: {
        Value v = eval(*s.value, frame);
        if (!frame.self) fault("no-receiver", s.span, "field assignment outside a constructor");
        frame.self->data->fields[s.name] = std::move(v);
        return std::nullopt;
      }
      case StmtKind::Return:
        return s.value ? eval(*s.value, frame) : Value{UnitV{}};
      case StmtKind::If: {
        bool c = truth(*s.value, frame);
        if (halted_) return std::nullopt;
        return c ? block(s.then_body, frame) : block(s.else_body, frame);
      }
      case StmtKind::ExprStmt:
        eval(*s.value, frame);
        return std::nullopt;
    }
    return std::nullopt;
  }

  bool truth(const Expr& e, Frame& frame) {
    Value v = eval(e, frame);
    return !halted_ && std::get<bool>(v);
  }

  std::int64_t integer(const Expr& e, Frame& frame) {
    Value v = eval(e, frame);
    return halted_ ? 0 : std::get<std::int64_t>(v);
  }

  std::int64_t arith(const Expr& e, std::int64_t a, std::int64_t b) {
    try {
      switch (e.binary_op) {
        case BinaryOp::Add: return checked_add(a, b);
        case BinaryOp::Sub:
          if (b == std::numeric_limits<std::int64_t>::min()) throw OverflowError("overflow");
          return checked_add(a, -b);
        default: return checked_mul(a, b);
      }
    } catch (const OverflowError&) {
      fault("integer-overflow", e.span, "integer overflow");
    }
  }

  std::vector<Value> arguments(const Expr& e, Frame& frame) {
    std::vector<Value> out;
    for (std::size_t i = 0; i < e.arg_count() && !halted_; ++i) out.push_back(eval(e.arg(i), frame));
    return out;
  }

  ObjectV object(const Value& v, const Expr& at) {
    if (auto* o = std::get_if<ObjectV>(&v)) return *o;
    fault("not-an-object", at.span, "receiver is not an object");
  }

  Value eval(const Expr& e, Frame& frame) {
    switch (e.kind) {
      case ExprKind::IntLit:
        return e.int_value;
      case ExprKind::BoolLit:
        return e.bool_value;
      case ExprKind::VarRef: {
        const Value* v = lookup(frame, e.name);
        if (!v) fault("unbound-variable", e.span, "unbound variable '" + e.name + "'");
        return *v;
      }
      case ExprKind::Result:
        if (!frame.result) fault("unbound-variable", e.span, "'result' outside a postcondition");
        return *frame.result;
      case ExprKind::This:
        if (!frame.self) fault("no-receiver", e.span, "'this' without a receiver");
        return *frame.self;
      case ExprKind::Unary: {
        if (e.unary_op == UnaryOp::Not) return !truth(e.operands[0], frame);
        std::int64_t v = integer(e.operands[0], frame);
        if (v == std::numeric_limits<std::int64_t>::min()) fault("integer-overflow", e.span, "integer overflow");
        return -v;
      }
      case ExprKind::Binary:
        return binary(e, frame);
      case ExprKind::Call: {
        auto args = arguments(e, frame);
        if (halted_) return UnitV{};
        const Callable& c = program_.callable(e.ref.callable);
        return call_function(*c.function, args, std::nullopt);
      }
      case ExprKind::MethodCall: {
        Value receiver = eval(e.operands[0], frame);
        if (halted_) return UnitV{};
        ObjectV self = object(receiver, e);
        auto args = arguments(e, frame);
        if (halted_) return UnitV{};
        const ClassDecl* cls = program_.find_class(self.data->cls);
        if (cls)
          for (const auto& m : cls->methods)
            if (m.name == e.name) return call_function(m, args, self);
        fault("no-method", e.span, "object of class '" + self.data->cls + "' has no method '" + e.name + "'");
      }
      case ExprKind::FieldAccess: {
        Value receiver = eval(e.operands[0], frame);
        if (halted_) return UnitV{};
        ObjectV self = object(receiver, e);
        auto it = self.data->fields.find(e.name);
        if (it == self.data->fields.end())
          fault("uninitialized-field", e.span, "field '" + e.name + "' read before assignment");
        return it->second;
      }
      case ExprKind::Invoke: {
        Value callee = eval(e.operands[0], frame);
        if (halted_) return UnitV{};
        auto args = arguments(e, frame);
        if (halted_) return UnitV{};
        auto* closure = std::get_if<ClosureV>(&callee);
        if (!closure) fault("not-a-function", e.span, "invoked value is not a function");
        return apply(*closure->data, args);
      }
      case ExprKind::Lambda: {
        auto data = std::make_shared<ClosureData>();
        data->id = e.callable;
        data->lambda = &e;
        data->captured = frame.vars;
        data->self = frame.self;
        return ClosureV{std::move(data)};
      }
      case ExprKind::New: {
        auto args = arguments(e, frame);
        if (halted_) return UnitV{};
        return construct(e, args);
      }
    }
    fault("unsupported", e.span, "unsupported expression");
  }

  Value binary(const Expr& e, Frame& frame) {
    const Expr& l = e.operands[0];
    const Expr& r = e.operands[1];
    switch (e.binary_op) {
      case BinaryOp::And: return truth(l, frame) && truth(r, frame);
      case BinaryOp::Or: return truth(l, frame) || truth(r, frame);
      case BinaryOp::Implies: return !truth(l, frame) || truth(r, frame);
      case BinaryOp::Eq:
      case BinaryOp::Ne: {
        Value a = eval(l, frame);
        if (halted_) return false;
        Value b = eval(r, frame);
        return (a == b) == (e.binary_op == BinaryOp::Eq);
      }
      default: break;
    }
    std::int64_t a = integer(l, frame);
    if (halted_) return false;
    std::int64_t b = integer(r, frame);
    if (halted_) return false;
    switch (e.binary_op) {
      case BinaryOp::Lt: return a < b;
      case BinaryOp::Le: return a <= b;
      case BinaryOp::Gt: return a > b;
      case BinaryOp::Ge: return a >= b;
      default: return arith(e, a, b);
    }
  }

  Value apply(const ClosureData& c, const std::vector<Value>& args) {
    if (!enter()) return UnitV{};
    Frame frame;
    frame.vars = c.captured;
    frame.self = c.self;
    for (std::size_t i = 0; i < c.lambda->params.size(); ++i) frame.vars.emplace_back(c.lambda->params[i].name, args[i]);
    return eval(c.lambda->operands[0], frame);
  }

  Value construct(const Expr& e, const std::vector<Value>& args) {
    const Callable& ctor = program_.callable(e.ref.callable);
    const ClassDecl& cls = *ctor.cls;
    if (!enter()) return UnitV{};
    ObjectV self{std::make_shared<ObjectData>()};
    self.data->cls = cls.name;
    Frame init_frame;
    init_frame.self = self;
    for (const auto& f : cls.fields)
      if (f.init && !halted_) self.data->fields[f.name] = eval(*f.init, init_frame);
    if (cls.ctor && !halted_) {
      Frame frame;
      frame.self = self;
      for (std::size_t i = 0; i < cls.ctor->params.size(); ++i) frame.vars.emplace_back(cls.ctor->params[i].name, args[i]);
      block(cls.ctor->body, frame);
    }
    return self;
  }
};

bool matches(const Value& v, const Type& t) {
  if (t.is_int()) return std::holds_alternative<std::int64_t>(v);
  if (t.is_bool()) return std::holds_alternative<bool>(v);
  return false;
}

/// Runs `fn` on a thread whose stack is large enough for `frames` nested
/// interpreter calls.
bool run_on_big_stack(std::uint64_t frames, const std::function<void()>& fn) {
  constexpr std::uint64_t kPerFrame = 2048;
  constexpr std::uint64_t kBase = std::uint64_t{16} << 20;
  constexpr std::uint64_t kMax = std::uint64_t{2} << 30;
  std::uint64_t want = kBase + (frames < kMax / kPerFrame ? frames * kPerFrame : kMax);
  if (want > kMax) want = kMax;

  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, static_cast<std::size_t>(want));
  auto trampoline = [](void* arg) -> void* {
    (*static_cast<const std::function<void()>*>(arg))();
    return nullptr;
  };
  pthread_t thread;
  int rc = pthread_create(&thread, &attr, trampoline, const_cast<std::function<void()>*>(&fn));
  pthread_attr_destroy(&attr);
  if (rc != 0) return false;
  pthread_join(thread, nullptr);
  return true;
}

}  // namespace

RunResult eval(const TypedProgram& program, const std::string& entry, const std::vector<Value>& args,
               std::uint64_t fuel, bool check_contracts) {
  const FunctionDecl* f = program.find_function(entry);
  if (!f) return {RuntimeError{"unbound-entry", {}, "no top-level function named '" + entry + "'"}, 0};
  if (f->params.size() != args.size())
    return {RuntimeError{"arity-mismatch", f->span,
                         "'" + entry + "' takes " + std::to_string(f->params.size()) + " arguments, got " +
                             std::to_string(args.size())},
            0};
  for (std::size_t i = 0; i < args.size(); ++i)
    if (!matches(args[i], f->params[i].type))
      return {RuntimeError{"argument-type-mismatch", f->params[i].span,
                           "argument " + std::to_string(i + 1) + " of '" + entry + "' must be " +
                               type_to_string(f->params[i].type)},
              0};

  RunResult result{RuntimeError{"internal", {}, "interpreter did not run"}, 0};
  bool started = run_on_big_stack(fuel, [&] {
    Interpreter interp(program, fuel);
    try {
      Value v = check_contracts ? interp.call_checked(*f, args) : interp.call_function(*f, args, std::nullopt);
      if (interp.out_of_fuel()) result.outcome = FuelExhausted{interp.frames()};
      else result.outcome = Returned{std::move(v)};
    } catch (const Violation& v) {
      result.outcome = v.violation;
    } catch (const Fault& fault) {
      result.outcome = fault.error;
    }
    result.frames = interp.frames();
  });
  if (!started) return {RuntimeError{"stack-unavailable", {}, "could not start interpreter thread"}, 0};
  return result;
}

}  // namespace miniver
