#pragma once

// Random formulas over x, y, z (and one boolean p) for property tests.

#include <random>
#include <string>

#include "miniver/formula.hpp"

namespace gen {

inline miniver::LinTerm random_term(std::mt19937_64& rng) {
  static const char* vars[] = {"x", "y", "z"};
  std::uniform_int_distribution<int> coeff(-3, 3);
  miniver::LinTerm t = miniver::LinTerm::of(coeff(rng));
  for (const char* v : vars)
    if (rng() % 2) t = t + miniver::LinTerm::var(v).scaled(coeff(rng));
  return t;
}

inline miniver::Formula random_atom(std::mt19937_64& rng) {
  using namespace miniver;
  switch (rng() % 8) {
    case 0: return f_atom("p");
    case 1: return f_bool(rng() % 2 == 0);
    default: return f_cmp(static_cast<CmpOp>(rng() % 6), random_term(rng), random_term(rng));
  }
}

/// Foralls are placed only where they end up in positive polarity.
inline miniver::Formula random_formula(std::mt19937_64& rng, int depth, bool positive = true) {
  using namespace miniver;
  if (depth == 0 || rng() % 5 == 0) return random_atom(rng);
  switch (rng() % 6) {
    case 0: return f_not(random_formula(rng, depth - 1, !positive));
    case 1: return f_and(random_formula(rng, depth - 1, positive), random_formula(rng, depth - 1, positive));
    case 2: return f_or(random_formula(rng, depth - 1, positive), random_formula(rng, depth - 1, positive));
    case 3: return f_implies(random_formula(rng, depth - 1, !positive), random_formula(rng, depth - 1, positive));
    case 4:
      if (positive) {
        static const char* vars[] = {"x", "y", "z"};
        return f_forall(vars[rng() % 3], Sort::Int, "", random_formula(rng, depth - 1, true));
      }
      [[fallthrough]];
    default: return random_atom(rng);
  }
}

}  // namespace gen
