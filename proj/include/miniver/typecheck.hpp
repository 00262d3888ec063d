#pragma once

#include <string>
#include <variant>
#include <vector>

#include "miniver/ast.hpp"

namespace miniver {

enum class TypeErrorCategory {
  UnresolvedName,
  TypeMismatch,
  NonlinearMultiplication,
  ResultMisuse,
  FieldUnassigned,
  GhostMisuse,
  MissingReturn,
  ContractImpure,
  DuplicateName,
};

std::string_view category_name(TypeErrorCategory c);

struct TypeError {
  SourceSpan span;
  TypeErrorCategory category;
  std::string message;
};

std::string format_error(const TypeError& e);

enum class CallableKind { Function, Method, AbstractMethod, Constructor, Lambda, FieldInit };

/// A unit of code that the call graph and the verifier reason about.
///
/// The pointers refer into the owning TypedProgram's AST and are rebuilt
/// whenever the TypedProgram is copied.
struct Callable {
  CallableId id = kNoCallable;
  CallableKind kind = CallableKind::Function;
  std::string name;   // "f", "C.m", "C.constructor", "lambda#0", "C.x.init"
  std::string owner;  // class or trait, empty for top-level functions and lambdas
  SourceSpan span;

  const FunctionDecl* function = nullptr;  // Function, Method, AbstractMethod
  const ClassDecl* cls = nullptr;          // Method, Constructor, FieldInit
  const FieldDecl* field = nullptr;        // FieldInit
  const Expr* lambda = nullptr;            // Lambda
  bool implicit_ctor = false;              // Constructor synthesized for a class without one

  /// Parameter list; empty for field initializers.
  const std::vector<Param>& params() const;
  /// Arrow type of the callable viewed as a function value. Methods exclude
  /// the receiver.
  Type signature() const;
  const Expr* decreases() const;
};

class TypedProgram {
 public:
  TypedProgram() = default;
  TypedProgram(Program program, std::vector<Callable> callables);
  TypedProgram(const TypedProgram& other);
  TypedProgram& operator=(const TypedProgram& other);
  TypedProgram(TypedProgram&&) = default;
  TypedProgram& operator=(TypedProgram&&) = default;

  const Program& program() const { return program_; }
  const std::vector<Callable>& callables() const { return callables_; }
  const Callable& callable(CallableId id) const { return callables_.at(static_cast<std::size_t>(id)); }
  const Callable* find(std::string_view name) const;

  const ClassDecl* find_class(std::string_view name) const;
  const TraitDecl* find_trait(std::string_view name) const;
  const FunctionDecl* find_function(std::string_view name) const;
  /// Classes declaring `implements trait`.
  std::vector<const ClassDecl*> implementors(std::string_view trait) const;
  /// True when the program uses function values (lambdas or invocations).
  bool is_first_order() const;

 private:
  Program program_;
  std::vector<Callable> callables_;

  void relink();
};

/// Resolves names, assigns types and callable ids, and enforces the
/// well-formedness rules. Works on (and returns) an annotated copy.
std::variant<TypedProgram, std::vector<TypeError>> typecheck(Program program);

}  // namespace miniver
