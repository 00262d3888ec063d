#include "miniver/formula.hpp"

#include <sstream>

namespace miniver {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("integer overflow in addition");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in multiplication");
  return r;
}

LinTerm LinTerm::of(std::int64_t c) {
  LinTerm t;
  t.constant = c;
  return t;
}

LinTerm LinTerm::var(const std::string& name) {
  LinTerm t;
  t.coeffs[name] = 1;
  return t;
}

LinTerm LinTerm::operator+(const LinTerm& o) const {
  LinTerm r = *this;
  r.constant = checked_add(r.constant, o.constant);
  for (const auto& [v, k] : o.coeffs) {
    std::int64_t sum = checked_add(r.coeffs[v], k);
    if (sum == 0) r.coeffs.erase(v);
    else r.coeffs[v] = sum;
  }
  return r;
}

LinTerm LinTerm::operator-(const LinTerm& o) const { return *this + o.negated(); }

LinTerm LinTerm::scaled(std::int64_t k) const {
  LinTerm r;
  if (k == 0) return r;
  r.constant = checked_mul(constant, k);
  for (const auto& [v, c] : coeffs) r.coeffs[v] = checked_mul(c, k);
  return r;
}

std::string_view cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
  }
  return op;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

using K = FormulaNode::Kind;

Formula node(FormulaNode n) { return std::make_shared<const FormulaNode>(std::move(n)); }

Formula node(K kind, std::vector<Formula> kids = {}) {
  FormulaNode n;
  n.kind = kind;
  n.kids = std::move(kids);
  return node(std::move(n));
}

}  // namespace

Formula f_true() {
  static const Formula t = node(K::True);
  return t;
}

Formula f_false() {
  static const Formula f = node(K::False);
  return f;
}

Formula f_bool(bool b) { return b ? f_true() : f_false(); }
Formula f_not(Formula a) { return node(K::Not, {std::move(a)}); }
Formula f_and(Formula a, Formula b) { return node(K::And, {std::move(a), std::move(b)}); }
Formula f_or(Formula a, Formula b) { return node(K::Or, {std::move(a), std::move(b)}); }
Formula f_implies(Formula a, Formula b) { return node(K::Implies, {std::move(a), std::move(b)}); }
Formula f_iff(Formula a, Formula b) { return f_and(f_implies(a, b), f_implies(b, a)); }

Formula f_forall(std::string var, Sort sort, std::string sort_name, Formula body) {
  FormulaNode n;
  n.kind = K::Forall;
  n.var = std::move(var);
  n.sort = sort;
  n.sort_name = sort == Sort::Named ? std::move(sort_name) : "";
  n.kids.push_back(std::move(body));
  return node(std::move(n));
}

Formula f_cmp(CmpOp op, LinTerm lhs, LinTerm rhs) {
  FormulaNode n;
  n.kind = K::Cmp;
  n.op = op;
  n.lhs = std::move(lhs);
  n.rhs = std::move(rhs);
  return node(std::move(n));
}

Formula f_atom(std::string var) {
  FormulaNode n;
  n.kind = K::BoolAtom;
  n.var = std::move(var);
  return node(std::move(n));
}

Formula f_refeq(std::string a, std::string b) {
  FormulaNode n;
  n.kind = K::RefEq;
  n.var = std::move(a);
  n.other = std::move(b);
  return node(std::move(n));
}

Formula f_conj(const std::vector<Formula>& parts) {
  if (parts.empty()) return f_true();
  Formula acc = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) acc = f_and(*it, acc);
  return acc;
}

bool same_formula(const Formula& a, const Formula& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->kids.size() != b->kids.size()) return false;
  switch (a->kind) {
    case K::Forall:
      if (a->var != b->var || a->sort != b->sort || a->sort_name != b->sort_name) return false;
      break;
    case K::Cmp:
      return a->op == b->op && a->lhs == b->lhs && a->rhs == b->rhs;
    case K::BoolAtom:
      return a->var == b->var;
    case K::RefEq:
      return a->var == b->var && a->other == b->other;
    default:
      break;
  }
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!same_formula(a->kids[i], b->kids[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Variables and substitution

std::set<std::string> FreeVars::all() const {
  std::set<std::string> out = ints;
  out.insert(bools.begin(), bools.end());
  out.insert(refs.begin(), refs.end());
  return out;
}

namespace {

void collect_free(const Formula& f, std::set<std::string>& bound, FreeVars& out) {
  switch (f->kind) {
    case K::Cmp:
      for (const auto* t : {&f->lhs, &f->rhs})
        for (const auto& [v, _] : t->coeffs)
          if (!bound.count(v)) out.ints.insert(v);
      return;
    case K::BoolAtom:
      if (!bound.count(f->var)) out.bools.insert(f->var);
      return;
    case K::RefEq:
      if (!bound.count(f->var)) out.refs.insert(f->var);
      if (!bound.count(f->other)) out.refs.insert(f->other);
      return;
    case K::Forall: {
      bool inserted = bound.insert(f->var).second;
      collect_free(f->kids[0], bound, out);
      if (inserted) bound.erase(f->var);
      return;
    }
    default:
      for (const auto& k : f->kids) collect_free(k, bound, out);
  }
}

std::set<std::string> replacement_vars(const Replacement& r) {
  if (auto* t = std::get_if<LinTerm>(&r)) {
    std::set<std::string> out;
    for (const auto& [v, _] : t->coeffs) out.insert(v);
    return out;
  }
  if (auto* f = std::get_if<Formula>(&r)) return free_vars(*f).all();
  return {std::get<std::string>(r)};
}

LinTerm subst_term(const LinTerm& t, const std::map<std::string, Replacement>& s) {
  LinTerm out = LinTerm::of(t.constant);
  for (const auto& [v, k] : t.coeffs) {
    auto it = s.find(v);
    if (it == s.end()) {
      out = out + LinTerm::var(v).scaled(k);
    } else if (auto* term = std::get_if<LinTerm>(&it->second)) {
      out = out + term->scaled(k);
    } else if (auto* name = std::get_if<std::string>(&it->second)) {
      out = out + LinTerm::var(*name).scaled(k);
    } else {
      throw std::logic_error("boolean formula substituted for integer variable '" + v + "'");
    }
  }
  return out;
}

std::string rename_only(const std::string& v, const std::map<std::string, Replacement>& s) {
  auto it = s.find(v);
  if (it == s.end()) return v;
  if (auto* name = std::get_if<std::string>(&it->second)) return *name;
  throw std::logic_error("non-renaming substitution for reference variable '" + v + "'");
}

}  // namespace

FreeVars free_vars(const Formula& f) {
  FreeVars out;
  std::set<std::string> bound;
  collect_free(f, bound, out);
  return out;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (int k = 1;; ++k) {
    std::string candidate = base + "'" + std::to_string(k);
    if (!avoid.count(candidate)) return candidate;
  }
}

Formula substitute(const Formula& f, const std::map<std::string, Replacement>& s) {
  if (s.empty()) return f;
  switch (f->kind) {
    case K::True:
    case K::False:
      return f;
    case K::Cmp:
      return f_cmp(f->op, subst_term(f->lhs, s), subst_term(f->rhs, s));
    case K::BoolAtom: {
      auto it = s.find(f->var);
      if (it == s.end()) return f;
      if (auto* g = std::get_if<Formula>(&it->second)) return *g;
      if (auto* name = std::get_if<std::string>(&it->second)) return f_atom(*name);
      throw std::logic_error("integer term substituted for boolean variable '" + f->var + "'");
    }
    case K::RefEq:
      return f_refeq(rename_only(f->var, s), rename_only(f->other, s));
    case K::Forall: {
      // Drop the binder's own entry and anything not free in the body.
      FreeVars body_fv = free_vars(f->kids[0]);
      std::set<std::string> body_all = body_fv.all();
      std::map<std::string, Replacement> inner;
      std::set<std::string> incoming;
      for (const auto& [v, r] : s) {
        if (v == f->var || !body_all.count(v)) continue;
        inner.emplace(v, r);
        auto vars = replacement_vars(r);
        incoming.insert(vars.begin(), vars.end());
      }
      if (inner.empty()) return f;
      std::string binder = f->var;
      Formula body = f->kids[0];
      if (incoming.count(binder)) {
        std::set<std::string> avoid = body_all;
        avoid.insert(incoming.begin(), incoming.end());
        for (const auto& [v, _] : inner) avoid.insert(v);
        binder = fresh_name(f->var, avoid);
        body = substitute(body, {{f->var, Replacement{binder}}});
      }
      return f_forall(binder, f->sort, f->sort_name, substitute(body, inner));
    }
    default: {
      std::vector<Formula> kids;
      for (const auto& k : f->kids) kids.push_back(substitute(k, s));
      FormulaNode n = *f;
      n.kids = std::move(kids);
      return std::make_shared<const FormulaNode>(std::move(n));
    }
  }
}

Formula substitute(const Formula& f, const std::string& var, const Replacement& r) {
  return substitute(f, std::map<std::string, Replacement>{{var, r}});
}

namespace {

bool positive_walk(const Formula& f, bool positive) {
  switch (f->kind) {
    case K::Not:
      return positive_walk(f->kids[0], !positive);
    case K::Implies:
      return positive_walk(f->kids[0], !positive) && positive_walk(f->kids[1], positive);
    case K::Forall:
      return positive && positive_walk(f->kids[0], positive);
    default:
      for (const auto& k : f->kids)
        if (!positive_walk(k, positive)) return false;
      return true;
  }
}

}  // namespace

bool foralls_positive(const Formula& f) { return positive_walk(f, true); }

// ---------------------------------------------------------------------------
// Evaluation

std::int64_t eval_term(const LinTerm& t, const Assignment& a) {
  std::int64_t acc = t.constant;
  for (const auto& [v, k] : t.coeffs) {
    auto it = a.find(v);
    if (it == a.end()) throw EvalError("unbound variable '" + v + "'");
    auto* value = std::get_if<std::int64_t>(&it->second);
    if (!value) throw EvalError("variable '" + v + "' is not an integer");
    acc = checked_add(acc, checked_mul(k, *value));
  }
  return acc;
}

bool eval_formula(const Formula& f, const Assignment& a, std::optional<std::int64_t> bound) {
  switch (f->kind) {
    case K::True:
      return true;
    case K::False:
      return false;
    case K::Not:
      return !eval_formula(f->kids[0], a, bound);
    case K::And:
      return eval_formula(f->kids[0], a, bound) && eval_formula(f->kids[1], a, bound);
    case K::Or:
      return eval_formula(f->kids[0], a, bound) || eval_formula(f->kids[1], a, bound);
    case K::Implies:
      return !eval_formula(f->kids[0], a, bound) || eval_formula(f->kids[1], a, bound);
    case K::Cmp: {
      std::int64_t l = eval_term(f->lhs, a);
      std::int64_t r = eval_term(f->rhs, a);
      switch (f->op) {
        case CmpOp::Eq: return l == r;
        case CmpOp::Ne: return l != r;
        case CmpOp::Lt: return l < r;
        case CmpOp::Le: return l <= r;
        case CmpOp::Gt: return l > r;
        case CmpOp::Ge: return l >= r;
      }
      return false;
    }
    case K::BoolAtom: {
      auto it = a.find(f->var);
      if (it == a.end()) throw EvalError("unbound variable '" + f->var + "'");
      auto* value = std::get_if<bool>(&it->second);
      if (!value) throw EvalError("variable '" + f->var + "' is not a boolean");
      return *value;
    }
    case K::RefEq:
      if (f->var == f->other) return true;
      throw EvalError("object identity between distinct variables cannot be evaluated");
    case K::Forall: {
      if (f->sort == Sort::Named) {
        Assignment inner = a;
        inner.erase(f->var);
        return eval_formula(f->kids[0], inner, bound);
      }
      if (!bound) throw EvalError("quantifier over '" + f->var + "' needs an enumeration bound");
      Assignment inner = a;
      if (f->sort == Sort::Bool) {
        for (bool b : {false, true}) {
          inner[f->var] = b;
          if (!eval_formula(f->kids[0], inner, bound)) return false;
        }
        return true;
      }
      for (std::int64_t v = -*bound; v <= *bound; ++v) {
        inner[f->var] = v;
        if (!eval_formula(f->kids[0], inner, bound)) return false;
      }
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Prefix notation

std::string to_prefix(const LinTerm& t) {
  std::string out = "(+ " + std::to_string(t.constant);
  for (const auto& [v, k] : t.coeffs) out += " (* " + std::to_string(k) + " " + v + ")";
  return out + ")";
}

namespace {

std::string sort_text(const FormulaNode& n) {
  switch (n.sort) {
    case Sort::Int: return "int";
    case Sort::Bool: return "bool";
    case Sort::Named: return n.sort_name;
  }
  return "?";
}

void print_prefix(std::ostream& os, const Formula& f) {
  switch (f->kind) {
    case K::True: os << "true"; return;
    case K::False: os << "false"; return;
    case K::BoolAtom: os << f->var; return;
    case K::RefEq: os << "(refeq " << f->var << " " << f->other << ")"; return;
    case K::Cmp:
      os << "(cmp " << cmp_op_text(f->op) << " " << to_prefix(f->lhs) << " " << to_prefix(f->rhs) << ")";
      return;
    case K::Forall:
      os << "(forall " << f->var << ":" << sort_text(*f) << " ";
      print_prefix(os, f->kids[0]);
      os << ")";
      return;
    case K::Not: os << "(not "; break;
    case K::And: os << "(and "; break;
    case K::Or: os << "(or "; break;
    case K::Implies: os << "(=> "; break;
  }
  for (std::size_t i = 0; i < f->kids.size(); ++i) {
    if (i) os << ' ';
    print_prefix(os, f->kids[i]);
  }
  os << ')';
}

class PrefixReader {
 public:
  explicit PrefixReader(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
      } else if (c == '(' || c == ')') {
        toks_.emplace_back(1, c);
        ++i;
      } else {
        std::size_t j = i;
        while (j < text.size() && text[j] != '(' && text[j] != ')' && text[j] != ' ' && text[j] != '\t' &&
               text[j] != '\n' && text[j] != '\r')
          ++j;
        toks_.emplace_back(text.substr(i, j - i));
        i = j;
      }
    }
  }

  Formula whole() {
    Formula f = formula();
    if (pos_ != toks_.size()) throw PrefixParseError("trailing input after formula");
    return f;
  }

 private:
  std::vector<std::string> toks_;
  std::size_t pos_ = 0;

  const std::string& next() {
    if (pos_ >= toks_.size()) throw PrefixParseError("unexpected end of formula");
    return toks_[pos_++];
  }
  void expect(std::string_view t) {
    if (next() != t) throw PrefixParseError("expected '" + std::string(t) + "'");
  }
  static bool is_name(const std::string& t) { return !t.empty() && t != "(" && t != ")"; }

  static std::int64_t integer(const std::string& t) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(t, &used);
      if (used != t.size()) throw PrefixParseError("bad integer '" + t + "'");
      return v;
    } catch (const std::logic_error&) {
      throw PrefixParseError("bad integer '" + t + "'");
    }
  }

  LinTerm term() {
    expect("(");
    expect("+");
    LinTerm t = LinTerm::of(integer(next()));
    while (pos_ < toks_.size() && toks_[pos_] == "(") {
      ++pos_;
      expect("*");
      std::int64_t k = integer(next());
      std::string v = next();
      if (!is_name(v)) throw PrefixParseError("expected variable name");
      expect(")");
      t = t + LinTerm::var(v).scaled(k);
    }
    expect(")");
    return t;
  }

  Formula formula() {
    const std::string& t = next();
    if (t == "true") return f_true();
    if (t == "false") return f_false();
    if (t != "(") {
      if (!is_name(t)) throw PrefixParseError("unexpected ')'");
      return f_atom(t);
    }
    std::string head = next();
    Formula out;
    if (head == "not") {
      out = f_not(formula());
    } else if (head == "and" || head == "or" || head == "=>") {
      Formula a = formula();
      Formula b = formula();
      out = head == "and" ? f_and(a, b) : head == "or" ? f_or(a, b) : f_implies(a, b);
    } else if (head == "forall") {
      std::string binder = next();
      auto colon = binder.rfind(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == binder.size())
        throw PrefixParseError("expected name:sort in forall");
      std::string name = binder.substr(0, colon);
      std::string sort = binder.substr(colon + 1);
      Formula body = formula();
      Sort s = sort == "int" ? Sort::Int : sort == "bool" ? Sort::Bool : Sort::Named;
      out = f_forall(name, s, sort, body);
    } else if (head == "cmp") {
      std::string op = next();
      CmpOp c{};
      bool found = false;
      for (CmpOp cand : {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge})
        if (cmp_op_text(cand) == op) c = cand, found = true;
      if (!found) throw PrefixParseError("unknown comparison '" + op + "'");
      LinTerm l = term();
      LinTerm r = term();
      out = f_cmp(c, l, r);
    } else if (head == "refeq") {
      std::string a = next();
      std::string b = next();
      out = f_refeq(a, b);
    } else {
      throw PrefixParseError("unknown connective '" + head + "'");
    }
    expect(")");
    return out;
  }
};

}  // namespace

std::string to_prefix(const Formula& f) {
  std::ostringstream os;
  print_prefix(os, f);
  return os.str();
}

std::string to_string(const Assignment& a) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, value] : a) {
    if (!first) out += ", ";
    first = false;
    out += v + "=";
    if (auto* i = std::get_if<std::int64_t>(&value)) out += std::to_string(*i);
    else out += std::get<bool>(value) ? "true" : "false";
  }
  return out + "}";
}

Formula parse_prefix(std::string_view text) { return PrefixReader(text).whole(); }

}  // namespace miniver
