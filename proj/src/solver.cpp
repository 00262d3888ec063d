#include "miniver/solver.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace miniver {

using K = FormulaNode::Kind;

std::string to_string(const RationalAssignment& w) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, q] : w) {
    if (!first) out += ", ";
    first = false;
    out += v + "=" + q.str();
  }
  return out + "}";
}

namespace {

LinConstraint from_term(const LinTerm& t, bool equality) {
  LinConstraint c;
  c.equality = equality;
  c.constant = t.constant;
  for (const auto& [v, k] : t.coeffs) c.coeffs[v] = k;
  return c;
}

}  // namespace

LinConstraint LinConstraint::le(const LinTerm& t) { return from_term(t, false); }
LinConstraint LinConstraint::eq(const LinTerm& t) { return from_term(t, true); }

bool LinConstraint::holds(const RationalAssignment& w) const {
  Rational sum = constant;
  for (const auto& [v, k] : coeffs) {
    auto it = w.find(v);
    if (it != w.end()) sum += k * it->second;
  }
  return equality ? sum == 0 : sum <= 0;
}

// ---------------------------------------------------------------------------
// Negation normal form and skolemization

namespace {

class Skolemizer {
 public:
  explicit Skolemizer(const Formula& f) {
    collect_names(f);
  }

  Formula run(const Formula& f, bool negated) {
    switch (f->kind) {
      case K::True:
      case K::False:
        return negated ? f_bool(f->kind == K::False) : f;
      case K::Cmp:
        return negated ? f_cmp(negate(f->op), f->lhs, f->rhs) : f;
      case K::BoolAtom:
      case K::RefEq:
        return negated ? f_not(f) : f;
      case K::Not:
        return run(f->kids[0], !negated);
      case K::And:
      case K::Or: {
        Formula a = run(f->kids[0], negated);
        Formula b = run(f->kids[1], negated);
        bool conj = (f->kind == K::And) != negated;
        return conj ? f_and(a, b) : f_or(a, b);
      }
      case K::Implies: {
        Formula a = run(f->kids[0], !negated);
        Formula b = run(f->kids[1], negated);
        return negated ? f_and(a, b) : f_or(a, b);
      }
      case K::Forall: {
        if (!negated)
          throw SolverError(SolverError::Kind::Polarity, "quantifier over '" + f->var + "' in negative position");
        std::string fresh = fresh_name(f->var, used_);
        used_.insert(fresh);
        Formula body = fresh == f->var ? f->kids[0] : substitute(f->kids[0], f->var, Replacement{fresh});
        return run(body, negated);
      }
    }
    return f;
  }

 private:
  std::set<std::string> used_;

  void collect_names(const Formula& f) {
    auto fv = free_vars(f).all();
    used_.insert(fv.begin(), fv.end());
    // Binder names are left out on purpose: the first skolem constant for a
    // binder keeps its name, later ones get primed variants.
  }
};

std::int64_t gcd_of(const LinTerm& t) {
  std::int64_t g = 0;
  for (const auto& [_, k] : t.coeffs) g = std::gcd(g, k < 0 ? -k : k);
  return g;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Normalized constraint for `t <= 0` (or `t = 0`); nullopt when it is
/// constant-true, throws ConstFalse when constant-false.
struct ConstFalse {};

std::optional<LinConstraint> normalize(LinTerm t, bool equality) {
  if (t.is_constant()) {
    bool ok = equality ? t.constant == 0 : t.constant <= 0;
    if (ok) return std::nullopt;
    throw ConstFalse{};
  }
  std::int64_t g = gcd_of(t);
  if (g > 1) {
    if (equality && t.constant % g != 0) throw ConstFalse{};
    LinTerm r;
    for (const auto& [v, k] : t.coeffs) r.coeffs[v] = k / g;
    // sum(k/g x) + c/g <= 0 over integers tightens to + ceil(c/g).
    r.constant = equality ? t.constant / g : -floor_div(-t.constant, g);
    t = std::move(r);
  }
  return equality ? LinConstraint::eq(t) : LinConstraint::le(t);
}

using Dnf = std::vector<Conjunction>;

void check_capacity(std::size_t n) {
  if (n > kMaxDisjuncts)
    throw SolverError(SolverError::Kind::Capacity, "DNF exceeds " + std::to_string(kMaxDisjuncts) + " disjuncts");
}

Dnf single(std::vector<LinTerm> le_terms, std::optional<LinTerm> eq_term = std::nullopt) {
  Conjunction c;
  try {
    for (auto& t : le_terms)
      if (auto n = normalize(std::move(t), false)) c.lin_atoms.push_back(std::move(*n));
    if (eq_term)
      if (auto n = normalize(std::move(*eq_term), true)) c.lin_atoms.push_back(std::move(*n));
  } catch (const ConstFalse&) {
    return {};
  }
  return {std::move(c)};
}

Dnf atom_dnf(CmpOp op, const LinTerm& lhs, const LinTerm& rhs) {
  LinTerm t = lhs - rhs;
  LinTerm one = LinTerm::of(1);
  switch (op) {
    case CmpOp::Le: return single({t});
    case CmpOp::Lt: return single({t + one});
    case CmpOp::Ge: return single({t.negated()});
    case CmpOp::Gt: return single({t.negated() + one});
    case CmpOp::Eq: return single({}, t);
    case CmpOp::Ne: {
      Dnf out = single({t + one});
      Dnf other = single({t.negated() + one});
      out.insert(out.end(), other.begin(), other.end());
      return out;
    }
  }
  return {};
}

std::string refeq_key(const FormulaNode& n) {
  // Identity atoms are opaque to arithmetic; treat them as propositions.
  return n.var < n.other ? "ref:" + n.var + "=" + n.other : "ref:" + n.other + "=" + n.var;
}

Dnf literal_dnf(const std::string& atom, bool value) {
  Conjunction c;
  c.bool_literals[atom] = value;
  return {std::move(c)};
}

Dnf dnf(const Formula& f) {
  switch (f->kind) {
    case K::True: return {Conjunction{}};
    case K::False: return {};
    case K::Cmp: return atom_dnf(f->op, f->lhs, f->rhs);
    case K::BoolAtom: return literal_dnf(f->var, true);
    case K::RefEq: {
      if (f->var == f->other) return {Conjunction{}};
      return literal_dnf(refeq_key(*f), true);
    }
    case K::Not: {
      const Formula& a = f->kids[0];
      if (a->kind == K::BoolAtom) return literal_dnf(a->var, false);
      if (a->kind == K::RefEq) {
        if (a->var == a->other) return {};
        return literal_dnf(refeq_key(*a), false);
      }
      throw std::logic_error("formula not in negation normal form");
    }
    case K::Or: {
      Dnf a = dnf(f->kids[0]);
      Dnf b = dnf(f->kids[1]);
      check_capacity(a.size() + b.size());
      a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
      return a;
    }
    case K::And: {
      Dnf a = dnf(f->kids[0]);
      if (a.empty()) return a;
      Dnf b = dnf(f->kids[1]);
      check_capacity(a.size() * b.size());
      Dnf out;
      for (const auto& x : a) {
        for (const auto& y : b) {
          Conjunction c = x;
          bool clash = false;
          for (const auto& [atom, value] : y.bool_literals) {
            auto [it, inserted] = c.bool_literals.emplace(atom, value);
            if (!inserted && it->second != value) clash = true;
          }
          if (clash) continue;
          for (const auto& l : y.lin_atoms)
            if (std::find(c.lin_atoms.begin(), c.lin_atoms.end(), l) == c.lin_atoms.end()) c.lin_atoms.push_back(l);
          out.push_back(std::move(c));
        }
      }
      return out;
    }
    default:
      throw std::logic_error("formula not quantifier-free NNF");
  }
}

}  // namespace

Formula skolemized_negation(const Formula& f) {
  if (!foralls_positive(f))
    throw SolverError(SolverError::Kind::Polarity, "quantifier in negative position");
  return Skolemizer(f).run(f, true);
}

ClauseSet to_clauses(const Formula& nnf) { return ClauseSet{dnf(nnf)}; }

// ---------------------------------------------------------------------------
// Fourier–Motzkin

namespace {

struct Elimination {
  std::string var;
  // Equality elimination: var = -(rest + constant) / coeff, stored as the
  // defining constraint. Inequality elimination: the bounds that mentioned var.
  bool by_equality = false;
  LinConstraint definition;
  std::vector<LinConstraint> bounds;
};

LinConstraint substitute_var(const LinConstraint& c, const std::string& var, const LinConstraint& def) {
  // def: a*var + rest = 0  =>  var = -(rest)/a
  auto it = c.coeffs.find(var);
  if (it == c.coeffs.end()) return c;
  Rational k = it->second;
  Rational a = def.coeffs.at(var);
  LinConstraint out = c;
  out.coeffs.erase(var);
  Rational factor = -k / a;
  for (const auto& [v, d] : def.coeffs) {
    if (v == var) continue;
    Rational sum = out.coeffs[v] + factor * d;
    if (sum == 0) out.coeffs.erase(v);
    else out.coeffs[v] = sum;
  }
  out.constant += factor * def.constant;
  return out;
}

Rational value_without(const LinConstraint& c, const std::string& var, const RationalAssignment& w) {
  Rational sum = c.constant;
  for (const auto& [v, k] : c.coeffs)
    if (v != var) sum += k * w.at(v);
  return sum;
}

Rational floor_rat(const Rational& q) {
  using boost::multiprecision::cpp_int;
  cpp_int n = numerator(q);
  cpp_int d = denominator(q);
  cpp_int f = n / d;
  if (n % d != 0 && n < 0) f -= 1;
  return Rational(f);
}

Rational ceil_rat(const Rational& q) { return -floor_rat(-q); }

void dedupe(std::vector<LinConstraint>& cs) {
  std::vector<LinConstraint> out;
  for (auto& c : cs)
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
  cs = std::move(out);
}

/// Scale so the first coefficient has magnitude one; keeps duplicates
/// recognizable after combination.
void canonicalize(LinConstraint& c) {
  if (c.coeffs.empty()) return;
  Rational s = c.coeffs.begin()->second;
  if (s < 0) s = -s;
  if (s == 1) return;
  for (auto& [_, k] : c.coeffs) k /= s;
  c.constant /= s;
}

}  // namespace

FmResult fm_eliminate(const std::vector<LinConstraint>& input) {
  std::vector<LinConstraint> work = input;
  std::vector<Elimination> trail;

  auto constant_check = [](std::vector<LinConstraint>& cs) -> bool {
    std::vector<LinConstraint> keep;
    for (auto& c : cs) {
      if (c.coeffs.empty()) {
        bool ok = c.equality ? c.constant == 0 : c.constant <= 0;
        if (!ok) return false;
      } else {
        keep.push_back(std::move(c));
      }
    }
    cs = std::move(keep);
    return true;
  };

  // Equalities first, by substitution.
  while (true) {
    if (!constant_check(work)) return UnsatOverRationals{};
    auto eq = std::find_if(work.begin(), work.end(), [](const LinConstraint& c) { return c.equality; });
    if (eq == work.end()) break;
    LinConstraint def = *eq;
    work.erase(eq);
    std::string var = def.coeffs.begin()->first;
    for (auto& c : work) c = substitute_var(c, var, def);
    trail.push_back({var, true, def, {}});
  }

  while (true) {
    if (!constant_check(work)) return UnsatOverRationals{};
    if (work.empty()) break;
    std::map<std::string, std::size_t> counts;
    for (const auto& c : work)
      for (const auto& [v, _] : c.coeffs) ++counts[v];
    std::string var;
    std::size_t best = 0;
    for (const auto& [v, n] : counts)
      if (var.empty() || n < best) var = v, best = n;

    std::vector<LinConstraint> lower, upper, rest;
    for (auto& c : work) {
      auto it = c.coeffs.find(var);
      if (it == c.coeffs.end()) rest.push_back(std::move(c));
      else if (it->second > 0) upper.push_back(std::move(c));
      else lower.push_back(std::move(c));
    }
    Elimination step{var, false, {}, {}};
    step.bounds = lower;
    step.bounds.insert(step.bounds.end(), upper.begin(), upper.end());
    for (const auto& lo : lower) {
      for (const auto& up : upper) {
        // lo: -a*x + p <= 0 (a > 0), up: b*x + q <= 0 (b > 0)  =>  b*p + a*q <= 0
        Rational a = -lo.coeffs.at(var);
        Rational b = up.coeffs.at(var);
        LinConstraint c;
        c.constant = b * lo.constant + a * up.constant;
        for (const auto* src : {&lo, &up}) {
          Rational scale = src == &lo ? b : a;
          for (const auto& [v, k] : src->coeffs) {
            if (v == var) continue;
            Rational sum = c.coeffs[v] + scale * k;
            if (sum == 0) c.coeffs.erase(v);
            else c.coeffs[v] = sum;
          }
        }
        canonicalize(c);
        rest.push_back(std::move(c));
      }
    }
    dedupe(rest);
    work = std::move(rest);
    trail.push_back(std::move(step));
  }

  // Back-substitution, preferring integers close to zero.
  RationalAssignment w;
  for (auto it = trail.rbegin(); it != trail.rend(); ++it) {
    const Elimination& step = *it;
    if (step.by_equality) {
      for (const auto& [v, _] : step.definition.coeffs)
        if (v != step.var && !w.count(v)) w[v] = 0;
      w[step.var] = -value_without(step.definition, step.var, w) / step.definition.coeffs.at(step.var);
      continue;
    }
    std::optional<Rational> lo, hi;
    for (const auto& c : step.bounds) {
      for (const auto& [v, _] : c.coeffs)
        if (v != step.var && !w.count(v)) w[v] = 0;
      Rational k = c.coeffs.at(step.var);
      Rational bound = -value_without(c, step.var, w) / k;
      if (k > 0) hi = hi ? std::min(*hi, bound) : bound;
      else lo = lo ? std::max(*lo, bound) : bound;
    }
    Rational x = 0;
    if (lo && *lo > x) {
      x = ceil_rat(*lo);
      if (hi && x > *hi) x = *lo;
    } else if (hi && *hi < x) {
      x = floor_rat(*hi);
      if (lo && x < *lo) x = *hi;
    }
    w[step.var] = x;
  }
  for (const auto& c : input)
    for (const auto& [v, _] : c.coeffs)
      if (!w.count(v)) w[v] = 0;
  for (const auto& c : input)
    if (!c.holds(w)) throw std::logic_error("Fourier-Motzkin witness fails constraint");
  return SatOverRationals{std::move(w)};
}

// ---------------------------------------------------------------------------
// Validity

namespace {

constexpr std::size_t kMaxRoundedVars = 8;

std::optional<Assignment> round_witness(const Formula& negation, const Conjunction& conj,
                                        const RationalAssignment& w, const FreeVars& vars) {
  std::vector<std::string> names;
  for (const auto& [v, _] : w) names.push_back(v);
  std::size_t k = std::min(names.size(), kMaxRoundedVars);
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    Assignment a;
    for (const auto& v : vars.ints) a[v] = std::int64_t{0};
    for (const auto& v : vars.bools) a[v] = false;
    for (const auto& [atom, value] : conj.bool_literals)
      if (vars.bools.count(atom)) a[atom] = value;
    bool representable = true;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const Rational& q = w.at(names[i]);
      bool up = i < k && ((mask >> i) & 1);
      Rational r = up ? ceil_rat(q) : floor_rat(q);
      auto n = numerator(r);
      if (n > std::numeric_limits<std::int64_t>::max() || n < std::numeric_limits<std::int64_t>::min()) {
        representable = false;
        break;
      }
      a[names[i]] = static_cast<std::int64_t>(n);
    }
    if (!representable) continue;
    try {
      if (eval_formula(negation, a)) return a;
    } catch (const OverflowError&) {
    } catch (const EvalError&) {
    }
  }
  return std::nullopt;
}

}  // namespace

SolverVerdict is_valid(const Formula& f) {
  Formula negation = skolemized_negation(f);
  ClauseSet clauses = to_clauses(negation);
  FreeVars vars = free_vars(negation);
  std::optional<RationalAssignment> unknown;
  for (const auto& conj : clauses.disjuncts) {
    FmResult r = fm_eliminate(conj.lin_atoms);
    auto* sat = std::get_if<SatOverRationals>(&r);
    if (!sat) continue;
    if (auto a = round_witness(negation, conj, sat->witness, vars)) return Counterexample{std::move(*a)};
    if (!unknown) unknown = sat->witness;
  }
  if (unknown) return Unknown{std::move(*unknown)};
  return Proved{};
}

std::optional<Assignment> brute_force(const Formula& f, std::int64_t bound) {
  FreeVars fv = free_vars(f);
  if (!fv.refs.empty())
    throw SolverError(SolverError::Kind::Capacity, "brute force cannot enumerate object variables");
  std::vector<std::string> ints(fv.ints.begin(), fv.ints.end());
  std::vector<std::string> bools(fv.bools.begin(), fv.bools.end());
  if (ints.size() + bools.size() > 6)
    throw SolverError(SolverError::Kind::Capacity, "brute force supports at most 6 free variables");

  Assignment a;
  for (const auto& v : ints) a[v] = -bound;
  for (const auto& v : bools) a[v] = false;
  while (true) {
    if (!eval_formula(f, a, bound)) return a;
    // Odometer increment: booleans fastest, then integers.
    bool carried = true;
    for (auto it = bools.rbegin(); carried && it != bools.rend(); ++it) {
      bool& b = std::get<bool>(a[*it]);
      carried = b;
      b = !b;
    }
    for (auto it = ints.rbegin(); carried && it != ints.rend(); ++it) {
      auto& v = std::get<std::int64_t>(a[*it]);
      if (v == bound) {
        v = -bound;
      } else {
        ++v;
        carried = false;
      }
    }
    if (carried) return std::nullopt;
  }
}

std::string verdict_name(const SolverVerdict& v) {
  if (std::holds_alternative<Proved>(v)) return "proved";
  if (std::holds_alternative<Counterexample>(v)) return "counterexample";
  return "unknown";
}

}  // namespace miniver
