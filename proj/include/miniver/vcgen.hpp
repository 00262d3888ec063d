#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "miniver/callgraph.hpp"
#include "miniver/formula.hpp"
#include "miniver/typecheck.hpp"

namespace miniver {

struct MalformedBlock : std::runtime_error {
  SourceSpan span;
  MalformedBlock(SourceSpan s, const std::string& what) : std::runtime_error(what), span(std::move(s)) {}
};

/// Contract of one callable, as formulas over its parameter names and
/// `result`.
struct Contract {
  std::vector<std::string> params;  // scalar parameters only
  std::vector<Formula> requires_;
  std::vector<Formula> ensures;
  std::optional<LinTerm> decreases;
  Type signature;
  std::optional<Type> result_type;
};

struct ContractEnv {
  std::map<CallableId, Contract> contracts;

  static ContractEnv build(const TypedProgram& program);
  const Contract* find(CallableId id) const;
};

/// Integer or boolean source expression as logic. Throws std::logic_error on
/// expressions that are not pure scalar code.
LinTerm term_of(const Expr& e);
Formula formula_of(const Expr& e);

/// Lifts calls, `new`, invocations and scalar field reads into fresh
/// temporaries `t0, t1, ...` and gives redeclared locals unique names.
/// A call that forms a whole expression statement stays in place.
/// `params` are the enclosing callable's parameter names.
Block anormalize(const Block& body, const std::vector<std::string>& params = {});

/// Which call sites carry a termination obligation, and of what kind.
struct SiteObligation {
  const Expr* site = nullptr;
  enum class Kind { Bound, Nonneg } kind = Kind::Bound;
  LinTerm caller_measure;
};

/// Weakest precondition of an A-normalized block. `post` is the formula
/// required at every `return` (with `result` bound to the returned value);
/// `fallthrough` is required when control falls off the end, and its absence
/// makes such a path a malformed-block error.
Formula wp(const Block& stmts, const Formula& post, const std::optional<Formula>& fallthrough,
           const ContractEnv& env);

enum class VcKind { Postcondition, CalleePrecondition, DecreasesBound, DecreasesNonneg, ContractMatch };

std::string_view vc_kind_name(VcKind k);

struct VerificationCondition {
  CallableId owner = kNoCallable;
  VcKind kind = VcKind::Postcondition;
  Formula formula;
  SourceSpan origin;
  bool erasable_origin = false;
  std::string detail;
};

/// Sites inside `callable` that need decreases obligations under `mode`.
std::vector<const Expr*> decreasing_sites(const TypedProgram& program, CallableId callable, Mode mode);

std::vector<VerificationCondition> vcs_for_callable(CallableId callable, const TypedProgram& program,
                                                    const ContractEnv& env, Mode mode);

std::vector<VerificationCondition> vcs_for_program(const TypedProgram& program, Mode mode);

/// `owner kind line:col: <prefix formula>`
std::string dump_vc(const TypedProgram& program, const VerificationCondition& vc);

}  // namespace miniver
