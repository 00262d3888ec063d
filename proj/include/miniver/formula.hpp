#pragma once

// Verification-condition logic: boolean structure over linear integer
// comparisons, with universally quantified variables.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace miniver {

struct OverflowError : std::overflow_error {
  using std::overflow_error::overflow_error;
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

/// constant + sum(coeff * var). Zero coefficients are never stored.
struct LinTerm {
  std::int64_t constant = 0;
  std::map<std::string, std::int64_t> coeffs;

  static LinTerm of(std::int64_t c);
  static LinTerm var(const std::string& name);

  LinTerm operator+(const LinTerm& o) const;
  LinTerm operator-(const LinTerm& o) const;
  LinTerm scaled(std::int64_t k) const;
  LinTerm negated() const { return scaled(-1); }
  bool is_constant() const { return coeffs.empty(); }

  friend bool operator==(const LinTerm&, const LinTerm&) = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view cmp_op_text(CmpOp op);
CmpOp negate(CmpOp op);

enum class Sort { Int, Bool, Named };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  enum class Kind { True, False, Not, And, Or, Implies, Forall, Cmp, BoolAtom, RefEq };

  Kind kind = Kind::True;
  std::vector<Formula> kids;  // Not: 1; And/Or/Implies: 2; Forall: body
  std::string var;            // Forall binder, BoolAtom variable, RefEq lhs
  std::string other;          // RefEq rhs
  Sort sort = Sort::Int;      // Forall
  std::string sort_name;      // Forall over Named
  CmpOp op = CmpOp::Eq;
  LinTerm lhs;
  LinTerm rhs;
};

Formula f_true();
Formula f_false();
Formula f_bool(bool b);
Formula f_not(Formula a);
Formula f_and(Formula a, Formula b);
Formula f_or(Formula a, Formula b);
Formula f_implies(Formula a, Formula b);
Formula f_iff(Formula a, Formula b);
Formula f_forall(std::string var, Sort sort, std::string sort_name, Formula body);
Formula f_cmp(CmpOp op, LinTerm lhs, LinTerm rhs);
Formula f_atom(std::string var);
Formula f_refeq(std::string a, std::string b);
/// Right-nested conjunction; True when empty.
Formula f_conj(const std::vector<Formula>& parts);

bool same_formula(const Formula& a, const Formula& b);

/// Free variables, split by sort (RefEq operands count as Named).
struct FreeVars {
  std::set<std::string> ints;
  std::set<std::string> bools;
  std::set<std::string> refs;

  std::set<std::string> all() const;
};
FreeVars free_vars(const Formula& f);

/// Replacement for a variable: an integer term, a boolean formula, or a
/// plain renaming.
using Replacement = std::variant<LinTerm, Formula, std::string>;

/// Simultaneous capture-avoiding substitution.
Formula substitute(const Formula& f, const std::map<std::string, Replacement>& subst);
Formula substitute(const Formula& f, const std::string& var, const Replacement& r);

/// Smallest `base'k` (or base itself) not in `avoid`.
std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);

/// True when every Forall sits under an even number of negations and
/// implication antecedents.
bool foralls_positive(const Formula& f);

using ScalarValue = std::variant<std::int64_t, bool>;
using Assignment = std::map<std::string, ScalarValue>;

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::int64_t eval_term(const LinTerm& t, const Assignment& a);

/// Standard semantics. A Forall is evaluated by enumerating integers in
/// [-forall_bound, forall_bound] when a bound is given; otherwise it is an
/// error. Named-sort binders range over a single opaque value.
bool eval_formula(const Formula& f, const Assignment& a, std::optional<std::int64_t> forall_bound = std::nullopt);

std::string to_prefix(const LinTerm& t);
std::string to_prefix(const Formula& f);
std::string to_string(const Assignment& a);

struct PrefixParseError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inverse of to_prefix.
Formula parse_prefix(std::string_view text);

}  // namespace miniver
