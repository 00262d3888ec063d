#include "miniver/callgraph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace miniver {

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Partial: return "partial";
    case Mode::SelfCheck: return "self-check";
    case Mode::CallGraph: return "callgraph";
    case Mode::Sound: return "sound";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (Mode m : {Mode::Partial, Mode::SelfCheck, Mode::CallGraph, Mode::Sound})
    if (mode_name(m) == text) return m;
  return std::nullopt;
}

std::string_view edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Direct: return "direct";
    case EdgeKind::HigherOrder: return "higher_order";
    case EdgeKind::InitializerRef: return "initializer_ref";
  }
  return "?";
}

std::string_view diagnostic_kind_name(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::SelfContractUse: return "self_contract_use";
    case DiagnosticKind::ContractCycle: return "contract_cycle";
    case DiagnosticKind::RecursiveFieldInitializer: return "recursive_field_initializer";
    case DiagnosticKind::MissingDecreases: return "missing_decreases";
    case DiagnosticKind::LambdaInCycle: return "lambda_in_cycle";
  }
  return "?";
}

bool CallGraph::has_edge(CallableId from, CallableId to) const {
  return std::any_of(edges.begin(), edges.end(), [&](const CallEdge& e) { return e.from == from && e.to == to; });
}

std::vector<CallableId> CallGraph::successors(CallableId from) const {
  std::set<CallableId> out;
  for (const auto& e : edges)
    if (e.from == from) out.insert(e.to);
  return {out.begin(), out.end()};
}

namespace {

/// Visits the expressions that run as part of `c` itself; nested lambda
/// bodies belong to the lambda's own callable.
template <class F>
void walk_callable(const Callable& c, F&& fn) {
  switch (c.kind) {
    case CallableKind::Function:
    case CallableKind::Method:
      walk_block_exprs(*c.function->body, fn, /*into_lambdas=*/false);
      break;
    case CallableKind::AbstractMethod:
      break;
    case CallableKind::Constructor:
      if (c.cls->ctor) walk_block_exprs(c.cls->ctor->body, fn, false);
      break;
    case CallableKind::Lambda:
      walk_expr(c.lambda->operands[0], fn, false);
      break;
    case CallableKind::FieldInit:
      walk_expr(*c.field->init, fn, false);
      break;
  }
}

std::vector<CallableId> dispatch_targets(const TypedProgram& program, const Expr& call) {
  std::vector<CallableId> out;
  for (const ClassDecl* cls : program.implementors(call.ref.owner))
    for (const auto& m : cls->methods)
      if (m.name == call.name) out.push_back(m.id);
  return out;
}

}  // namespace

std::vector<CallableId> matching_callables(const TypedProgram& program, const Type& fn_type) {
  std::vector<CallableId> out;
  for (const auto& c : program.callables()) {
    if (c.kind != CallableKind::Function && c.kind != CallableKind::Method && c.kind != CallableKind::Lambda)
      continue;
    if (same_type(c.signature(), fn_type)) out.push_back(c.id);
  }
  return out;
}

std::vector<CallSite> call_sites(const TypedProgram& program, CallableId id, EdgePolicy policy) {
  std::vector<CallSite> out;
  walk_callable(program.callable(id), [&](const Expr& e) {
    CallSite site{&e, {}};
    switch (e.kind) {
      case ExprKind::Call:
      case ExprKind::New:
        site.targets.push_back(e.ref.callable);
        break;
      case ExprKind::MethodCall:
        site.targets.push_back(e.ref.callable);
        if (policy == EdgePolicy::Overapprox && e.ref.kind == Resolution::Kind::AbstractMethod)
          for (CallableId t : dispatch_targets(program, e)) site.targets.push_back(t);
        break;
      case ExprKind::Invoke:
        if (policy == EdgePolicy::Overapprox)
          site.targets = matching_callables(program, *e.operands[0].type);
        break;
      default:
        return;
    }
    out.push_back(std::move(site));
  });
  return out;
}

std::vector<CallableId> self_referential_initializers(const TypedProgram& program) {
  std::vector<CallableId> out;
  for (const auto& c : program.callables()) {
    if (c.kind != CallableKind::FieldInit) continue;
    bool mentions = false;
    walk_expr(*c.field->init, [&](const Expr& e) {
      mentions = mentions || (e.kind == ExprKind::FieldAccess && e.ref.kind == Resolution::Kind::Field &&
                              e.ref.owner == c.cls->name && e.name == c.field->name);
    });
    if (mentions) out.push_back(c.id);
  }
  return out;
}

CallGraph build_call_graph(const TypedProgram& program, EdgePolicy policy) {
  CallGraph g;
  for (const auto& c : program.callables()) g.nodes.push_back(c.id);
  for (const auto& c : program.callables()) {
    for (const auto& site : call_sites(program, c.id, policy)) {
      for (std::size_t i = 0; i < site.targets.size(); ++i) {
        // Only the statically resolved callee of a Call/MethodCall/New is direct.
        EdgeKind kind = (i == 0 && site.expr->kind != ExprKind::Invoke) ? EdgeKind::Direct : EdgeKind::HigherOrder;
        g.edges.push_back({c.id, site.targets[i], kind, site.expr->span});
      }
    }
  }
  if (policy == EdgePolicy::Overapprox) {
    for (CallableId init : self_referential_initializers(program))
      g.edges.push_back({init, init, EdgeKind::InitializerRef, program.callable(init).span});
    // Constructing an object runs its field initializers.
    for (const auto& c : program.callables()) {
      if (c.kind != CallableKind::Constructor) continue;
      for (const auto& fld : c.cls->fields)
        if (fld.init) g.edges.push_back({c.id, fld.init_id, EdgeKind::InitializerRef, fld.span});
    }
  }
  return g;
}

std::vector<Scc> sccs(const CallGraph& graph) {
  // Tarjan's algorithm over the node list.
  std::map<CallableId, std::vector<CallableId>> adj;
  for (CallableId n : graph.nodes) adj[n];
  for (const auto& e : graph.edges) adj[e.from].push_back(e.to);

  std::map<CallableId, int> index;
  std::map<CallableId, int> low;
  std::set<CallableId> on_stack;
  std::vector<CallableId> stack;
  std::vector<Scc> out;
  int counter = 0;

  std::function<void(CallableId)> connect = [&](CallableId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (CallableId w : adj[v]) {
      if (!index.count(w)) {
        connect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      Scc scc;
      CallableId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        scc.members.push_back(w);
      } while (w != v);
      std::sort(scc.members.begin(), scc.members.end());
      scc.nontrivial = scc.members.size() > 1 || graph.has_edge(v, v);
      out.push_back(std::move(scc));
    }
  };
  for (const auto& [n, _] : adj)
    if (!index.count(n)) connect(n);

  std::sort(out.begin(), out.end(), [](const Scc& a, const Scc& b) { return a.members.front() < b.members.front(); });
  return out;
}

namespace {

/// Shortest closed walk from `start` back to itself inside `members`.
std::vector<CallableId> cycle_through(const CallGraph& g, CallableId start, const std::vector<CallableId>& members) {
  std::set<CallableId> allowed(members.begin(), members.end());
  std::map<CallableId, CallableId> parent;
  std::deque<CallableId> queue{start};
  std::set<CallableId> seen{start};
  while (!queue.empty()) {
    CallableId v = queue.front();
    queue.pop_front();
    for (CallableId w : g.successors(v)) {
      if (!allowed.count(w)) continue;
      if (w == start) {
        std::vector<CallableId> path{v};
        while (path.back() != start) path.push_back(parent.at(path.back()));
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (seen.insert(w).second) {
        parent[w] = v;
        queue.push_back(w);
      }
    }
  }
  return {start};
}

SourceSpan first_site(const CallGraph& g, CallableId from, CallableId to, const SourceSpan& fallback) {
  for (const auto& e : g.edges)
    if (e.from == from && e.to == to) return e.site;
  return fallback;
}

}  // namespace

std::vector<TerminationDiagnostic> check_termination(const TypedProgram& program, Mode mode) {
  std::vector<TerminationDiagnostic> out;
  auto add_cycle = [&](const CallGraph& g, CallableId c, DiagnosticKind kind, const std::vector<CallableId>& members) {
    auto cycle = cycle_through(g, c, members);
    CallableId next = cycle.size() > 1 ? cycle[1] : c;
    out.push_back({c, kind, cycle, first_site(g, c, next, program.callable(c).span)});
  };
  auto add_initializers = [&] {
    for (CallableId init : self_referential_initializers(program))
      out.push_back({init, DiagnosticKind::RecursiveFieldInitializer, {init}, program.callable(init).span});
  };

  switch (mode) {
    case Mode::Partial:
      break;
    case Mode::SelfCheck: {
      CallGraph g = build_call_graph(program, EdgePolicy::FirstOrder);
      for (const auto& c : program.callables()) {
        if (c.decreases()) continue;  // self-recursion justified by a measure
        for (const auto& e : g.edges) {
          if (e.from == c.id && e.to == c.id && e.kind == EdgeKind::Direct) {
            out.push_back({c.id, DiagnosticKind::SelfContractUse, {c.id}, e.site});
            break;
          }
        }
      }
      break;
    }
    case Mode::CallGraph: {
      CallGraph g = build_call_graph(program, EdgePolicy::FirstOrder);
      for (const auto& scc : sccs(g))
        if (scc.nontrivial)
          for (CallableId c : scc.members) add_cycle(g, c, DiagnosticKind::ContractCycle, scc.members);
      add_initializers();
      break;
    }
    case Mode::Sound: {
      CallGraph g = build_call_graph(program, EdgePolicy::Overapprox);
      for (const auto& scc : sccs(g)) {
        if (!scc.nontrivial) continue;
        for (CallableId c : scc.members) {
          const Callable& callable = program.callable(c);
          if (callable.kind == CallableKind::Lambda)
            add_cycle(g, c, DiagnosticKind::LambdaInCycle, scc.members);
          else if (!callable.decreases())
            add_cycle(g, c, DiagnosticKind::MissingDecreases, scc.members);
        }
      }
      add_initializers();
      break;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.callable < b.callable; });
  return out;
}

std::string render_graph_text(const TypedProgram& program, const CallGraph& graph) {
  std::ostringstream os;
  auto name = [&](CallableId id) { return program.callable(id).name; };
  os << "nodes:\n";
  for (CallableId n : graph.nodes) os << "  " << name(n) << "#" << n << "\n";
  os << "edges:\n";
  for (const auto& e : graph.edges)
    os << "  " << name(e.from) << " -> " << name(e.to) << " [" << edge_kind_name(e.kind) << "] at "
       << e.site.line << ":" << e.site.col << "\n";
  os << "sccs:\n";
  for (const auto& scc : sccs(graph)) {
    os << "  {";
    for (std::size_t i = 0; i < scc.members.size(); ++i) os << (i ? ", " : "") << name(scc.members[i]);
    os << "}" << (scc.nontrivial ? " nontrivial" : "") << "\n";
  }
  return os.str();
}

std::string render_graph_dot(const TypedProgram& program, const CallGraph& graph) {
  std::ostringstream os;
  os << "digraph callgraph {\n";
  for (CallableId n : graph.nodes)
    os << "  n" << n << " [label=\"" << program.callable(n).name << "#" << n << "\"];\n";
  for (const auto& e : graph.edges) {
    std::string_view style = e.kind == EdgeKind::Direct ? "solid" : e.kind == EdgeKind::HigherOrder ? "dashed" : "dotted";
    os << "  n" << e.from << " -> n" << e.to << " [style=" << style << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace miniver
