#pragma once

// Validity checking for verification conditions over linear integer
// arithmetic with boolean structure.

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "miniver/formula.hpp"

namespace miniver {

using Rational = boost::multiprecision::cpp_rational;
using RationalAssignment = std::map<std::string, Rational>;

std::string to_string(const RationalAssignment& w);

struct SolverError : std::runtime_error {
  enum class Kind { Polarity, Capacity };
  Kind kind;
  SolverError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

/// sum(coeffs) + constant <= 0, or = 0 when `equality`.
struct LinConstraint {
  std::map<std::string, Rational> coeffs;
  Rational constant;
  bool equality = false;

  static LinConstraint le(const LinTerm& t);
  static LinConstraint eq(const LinTerm& t);
  bool holds(const RationalAssignment& w) const;
  friend bool operator==(const LinConstraint&, const LinConstraint&) = default;
};

struct Conjunction {
  std::map<std::string, bool> bool_literals;  // atom -> required value
  std::vector<LinConstraint> lin_atoms;
};

struct ClauseSet {
  std::vector<Conjunction> disjuncts;
};

inline constexpr std::size_t kMaxDisjuncts = 100000;

/// DNF of a quantifier-free NNF formula. Integer comparisons are tightened
/// (t < 0 becomes t + 1 <= 0) and divided by the gcd of their coefficients;
/// disjuncts with contradictory literals or constant-false atoms are dropped.
ClauseSet to_clauses(const Formula& nnf);

struct UnsatOverRationals {};
struct SatOverRationals {
  RationalAssignment witness;
};
using FmResult = std::variant<UnsatOverRationals, SatOverRationals>;

FmResult fm_eliminate(const std::vector<LinConstraint>& constraints);

struct Proved {};
struct Counterexample {
  Assignment assignment;
};
struct Unknown {
  RationalAssignment rational_witness;
};
using SolverVerdict = std::variant<Proved, Counterexample, Unknown>;

/// Negation of `f` in negation normal form, with the (now existential)
/// quantifiers replaced by fresh free variables.
Formula skolemized_negation(const Formula& f);

SolverVerdict is_valid(const Formula& f);

/// First assignment over [-bound, bound] (and both booleans) that falsifies
/// `f`. Quantifiers are enumerated over the same range.
std::optional<Assignment> brute_force(const Formula& f, std::int64_t bound);

std::string verdict_name(const SolverVerdict& v);

}  // namespace miniver
