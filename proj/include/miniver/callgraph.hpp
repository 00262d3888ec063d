#pragma once

#include <string>
#include <vector>

#include "miniver/typecheck.hpp"

namespace miniver {

/// Termination policy, from weakest to strongest.
enum class Mode { Partial, SelfCheck, CallGraph, Sound };

std::string_view mode_name(Mode m);
std::optional<Mode> parse_mode(std::string_view text);

enum class EdgePolicy { FirstOrder, Overapprox };

enum class EdgeKind { Direct, HigherOrder, InitializerRef };

std::string_view edge_kind_name(EdgeKind k);

struct CallEdge {
  CallableId from = kNoCallable;
  CallableId to = kNoCallable;
  EdgeKind kind = EdgeKind::Direct;
  SourceSpan site;
};

struct CallGraph {
  std::vector<CallableId> nodes;
  std::vector<CallEdge> edges;

  bool has_edge(CallableId from, CallableId to) const;
  std::vector<CallableId> successors(CallableId from) const;
};

struct Scc {
  std::vector<CallableId> members;  // ascending
  bool nontrivial = false;
};

/// Call targets of one call site: its static callee plus, under the
/// over-approximating policy, everything an Invoke or a dispatch through a
/// trait-typed receiver may reach.
struct CallSite {
  const Expr* expr = nullptr;
  std::vector<CallableId> targets;
};

/// Call sites directly inside `callable` (not inside nested lambdas).
std::vector<CallSite> call_sites(const TypedProgram& program, CallableId callable, EdgePolicy policy);

/// Callables whose signature matches the Arrow type `fn_type`.
std::vector<CallableId> matching_callables(const TypedProgram& program, const Type& fn_type);

CallGraph build_call_graph(const TypedProgram& program, EdgePolicy policy);

/// Strongly connected components, ordered by lowest member id.
std::vector<Scc> sccs(const CallGraph& graph);

enum class DiagnosticKind {
  SelfContractUse,
  ContractCycle,
  RecursiveFieldInitializer,
  MissingDecreases,
  LambdaInCycle,
};

std::string_view diagnostic_kind_name(DiagnosticKind k);

struct TerminationDiagnostic {
  CallableId callable = kNoCallable;
  DiagnosticKind kind = DiagnosticKind::ContractCycle;
  std::vector<CallableId> cycle;  // closed: the last element calls the first
  SourceSpan site;
};

/// Field initializers whose expression mentions the field being defined.
std::vector<CallableId> self_referential_initializers(const TypedProgram& program);

std::vector<TerminationDiagnostic> check_termination(const TypedProgram& program, Mode mode);

std::string render_graph_text(const TypedProgram& program, const CallGraph& graph);
std::string render_graph_dot(const TypedProgram& program, const CallGraph& graph);

}  // namespace miniver
