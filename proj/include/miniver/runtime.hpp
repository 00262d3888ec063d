#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "miniver/typecheck.hpp"

namespace miniver {

struct ObjectData;
struct ClosureData;

struct UnitV {
  friend bool operator==(UnitV, UnitV) { return true; }
};
struct ObjectV {
  std::shared_ptr<ObjectData> data;
  friend bool operator==(const ObjectV& a, const ObjectV& b) { return a.data == b.data; }
};
struct ClosureV {
  std::shared_ptr<ClosureData> data;
  friend bool operator==(const ClosureV& a, const ClosureV& b) { return a.data == b.data; }
};

using Value = std::variant<UnitV, std::int64_t, bool, ObjectV, ClosureV>;

struct ObjectData {
  std::string cls;
  std::map<std::string, Value> fields;
};

struct ClosureData {
  CallableId id = kNoCallable;
  const Expr* lambda = nullptr;
  std::vector<std::pair<std::string, Value>> captured;
  std::optional<ObjectV> self;
};

std::string render_value(const Value& v);

enum class ClauseKind { Requires, Ensures };

struct Returned {
  Value value;
};

struct ContractViolation {
  std::string callable;
  ClauseKind clause = ClauseKind::Requires;
  std::size_t index = 0;
  SourceSpan site;
  std::string clause_text;
  std::optional<Value> returned;  // set for ensures violations
};

struct FuelExhausted {
  std::uint64_t consumed = 0;
};

struct RuntimeError {
  std::string kind;  // unbound-entry, arity-mismatch, argument-type-mismatch, integer-overflow, ...
  SourceSpan site;
  std::string message;
};

using Outcome = std::variant<Returned, ContractViolation, FuelExhausted, RuntimeError>;

struct RunResult {
  Outcome outcome;
  std::uint64_t frames = 0;  // call frames entered
};

bool same_outcome(const Outcome& a, const Outcome& b);
std::string render_outcome(const Outcome& o);

struct ErasureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Removes every ghost variable declaration. Throws ErasureError if the
/// remaining code no longer typechecks (non-ghost code read a ghost value).
TypedProgram erase(const TypedProgram& program);

/// Runs top-level function `entry`. Every function, method, constructor and
/// lambda entry costs one unit of fuel; entering a frame with the budget
/// spent yields FuelExhausted. With `check_contracts`, the entry function's
/// requires clauses are checked on entry and its ensures clauses on return.
RunResult eval(const TypedProgram& program, const std::string& entry, const std::vector<Value>& args,
               std::uint64_t fuel, bool check_contracts);

}  // namespace miniver
