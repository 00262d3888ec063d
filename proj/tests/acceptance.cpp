// Acceptance checks, one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance N          run criterion N only

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "gen.hpp"
#include "miniver/commands.hpp"
#include "miniver/parser.hpp"
#include "miniver/runtime.hpp"
#include "miniver/solver.hpp"
#include "miniver/vcgen.hpp"

using namespace miniver;

namespace {

struct Result {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

std::string corpus(const std::string& name) { return (std::filesystem::path(MINIVER_CORPUS_DIR) / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> corpus_files() {
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(MINIVER_CORPUS_DIR))
    if (e.path().extension() == ".moo") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

TypedProgram load(const std::string& name) {
  auto parsed = parse(slurp(corpus(name)), name);
  if (!std::holds_alternative<Program>(parsed)) throw std::runtime_error(name + " does not parse");
  auto typed = typecheck(std::get<Program>(std::move(parsed)));
  if (!std::holds_alternative<TypedProgram>(typed)) throw std::runtime_error(name + " does not typecheck");
  return std::get<TypedProgram>(std::move(typed));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << s << " s";
  return os.str();
}

bool call_free(const Block& body) {
  bool any = false;
  walk_block_exprs(body, [&](const Expr& e) { any = any || e.is_call_like(); });
  return !any;
}

bool all_proved(const std::vector<VerificationCondition>& vcs) {
  return std::all_of(vcs.begin(), vcs.end(),
                     [](const auto& vc) { return std::holds_alternative<Proved>(is_valid(vc.formula)); });
}

/// Random argument vectors satisfying the requires clauses of `c`.
std::vector<std::pair<std::vector<Value>, Assignment>> inputs(const Callable& c, const Contract& contract, int count,
                                                              std::mt19937_64& rng, std::int64_t range) {
  std::vector<std::pair<std::vector<Value>, Assignment>> out;
  std::uniform_int_distribution<std::int64_t> dist(-range, range);
  for (int attempts = 0; static_cast<int>(out.size()) < count && attempts < count * 100; ++attempts) {
    std::vector<Value> args;
    Assignment a;
    for (const auto& p : c.params()) {
      if (p.type.is_bool()) {
        bool b = rng() % 2;
        args.push_back(b);
        a[p.name] = b;
      } else {
        std::int64_t v = dist(rng);
        args.push_back(v);
        a[p.name] = v;
      }
    }
    bool ok = std::all_of(contract.requires_.begin(), contract.requires_.end(),
                          [&](const Formula& f) { return eval_formula(f, a); });
    if (ok) out.emplace_back(std::move(args), std::move(a));
  }
  return out;
}

Result criterion1() {
  Result r;
  auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  int code = cmd_matrix(MINIVER_CORPUS_DIR, corpus("expected.json"), Format::Text, out, err);
  if (code != 0) r.fail("matrix exit " + std::to_string(code));

  struct Cell {
    const char* file;
    Mode mode;
    bool verified;
    std::optional<ReasonKind> reason;
  };
  const Cell headline_cells[] = {
      {"gobra_exploit.moo", Mode::Partial, true, {}},
      {"bad_client.moo", Mode::Partial, true, {}},
      {"key_exploit.moo", Mode::SelfCheck, true, {}},
      {"omega_exploit.moo", Mode::CallGraph, true, {}},
      {"omega_direct.moo", Mode::CallGraph, false, ReasonKind::RecursiveFieldInitializer},
  };
  for (const auto& cell : headline_cells) {
    Report rep = verify_source(slurp(corpus(cell.file)), cell.file, cell.mode);
    bool ok = (rep.exit_code() == 0) == cell.verified;
    if (cell.reason) {
      bool found = false;
      for (const auto& c : rep.callables)
        for (const auto& reason : c.reasons) found = found || reason.kind == *cell.reason;
      ok = ok && found;
    }
    if (!ok) r.fail(std::string(cell.file) + " under " + std::string(mode_name(cell.mode)));
  }
  double secs = seconds_since(t0);
  if (secs >= 5) r.fail("took " + fmt_seconds(secs));
  std::string summary = out.str();
  summary = summary.substr(summary.rfind('\n', summary.size() - 2) + 1);
  summary.pop_back();
  if (r.pass) r.detail = summary + ", 5 headline cells hold, " + fmt_seconds(secs);
  return r;
}

Result criterion2() {
  Result r;
  Report rep = verify_source(slurp(corpus("bad_client.moo")), "bad_client.moo", Mode::Partial);
  if (rep.exit_code() != 0) r.fail("bad_client does not verify under partial");
  std::ostringstream out, err;
  int code = cmd_run(corpus("bad_client.moo"), "bad", {}, 1000000, false, true, out, err);
  if (code != 1) r.fail("run exit " + std::to_string(code));
  std::string line = out.str().substr(0, out.str().find('\n'));
  if (line.find("ensures result == 0 violated; returned 1") == std::string::npos) r.fail("outcome: " + line);
  if (r.pass) r.detail = "verified under partial, then at run time: " + line;
  return r;
}

Result criterion3() {
  Result r;
  std::string detail;
  for (const char* name : {"gobra_exploit.moo", "key_exploit.moo", "omega_exploit.moo"}) {
    std::ostringstream o1, e1, o2, e2;
    int raw = cmd_run(corpus(name), "test", {}, 10000, true, false, o1, e1);
    int erased = cmd_run(corpus(name), "test", {}, 10000, false, false, o2, e2);
    RunResult run = eval(erase(load(name)), "test", {}, 10000, false);
    if (raw != 3) r.fail(std::string(name) + " un-erased exit " + std::to_string(raw));
    if (erased != 0) r.fail(std::string(name) + " erased exit " + std::to_string(erased));
    if (run.frames >= 10) r.fail(std::string(name) + " erased run used " + std::to_string(run.frames) + " frames");
    detail += std::string(detail.empty() ? "" : ", ") + name + " 3/0 (" + std::to_string(run.frames) + " frames)";
  }
  if (r.pass) r.detail = detail;
  return r;
}

Result criterion4() {
  Result r;
  std::mt19937_64 rng(4);
  int runs = 0;
  std::vector<std::string> programs;
  for (const auto& name : corpus_files()) {
    if (verify_source(slurp(corpus(name)), name, Mode::Sound).exit_code() != 0) continue;
    programs.push_back(name);
    TypedProgram p = load(name);
    TypedProgram erased = erase(p);
    ContractEnv env = ContractEnv::build(p);
    for (const auto& c : p.callables()) {
      if (c.kind != CallableKind::Function) continue;
      for (const auto& [args, assignment] : inputs(c, *env.find(c.id), 50, rng, 30)) {
        for (const TypedProgram* prog : {&p, &erased})
          for (bool check : {true, false}) {
            RunResult run = eval(*prog, c.name, args, 1000000, check);
            ++runs;
            if (!std::holds_alternative<Returned>(run.outcome))
              r.fail(name + ": " + c.name + " -> " + render_outcome(run.outcome));
          }
      }
    }
  }
  if (programs.empty()) r.fail("no program verifies under sound");
  if (r.pass) {
    std::string list;
    for (const auto& n : programs) list += (list.empty() ? "" : ", ") + n;
    r.detail = std::to_string(runs) + " runs over {" + list + "}, all returned";
  }
  return r;
}

Result criterion5() {
  Result r;
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  int proved = 0, unsound = 0;
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen::random_formula(rng, 4);
    if (!std::holds_alternative<Proved>(is_valid(f))) continue;
    ++proved;
    if (brute_force(f, 10)) {
      ++unsound;
      r.fail("unsound on " + to_prefix(f));
    }
  }
  double secs = seconds_since(t0);
  if (secs >= 30) r.fail("took " + fmt_seconds(secs));
  if (r.pass)
    r.detail = "1000 formulas, " + std::to_string(proved) + " proved, " + std::to_string(unsound) + " refuted by brute force, " +
               fmt_seconds(secs);
  return r;
}

Result criterion6() {
  Result r;
  std::mt19937_64 rng(6);
  int functions = 0, runs = 0;
  for (const auto& name : corpus_files()) {
    TypedProgram p = load(name);
    ContractEnv env = ContractEnv::build(p);
    for (const auto& c : p.callables()) {
      if (c.kind != CallableKind::Function || !call_free(*c.function->body)) continue;
      auto vcs = vcs_for_callable(c.id, p, env, Mode::Partial);
      if (vcs.empty() || !all_proved(vcs)) continue;
      ++functions;
      const Contract& contract = *env.find(c.id);
      auto samples = inputs(c, contract, 100, rng, 1000);
      if (samples.size() < 100) r.fail(c.name + ": could not sample 100 inputs");
      for (auto& [args, a] : samples) {
        ++runs;
        RunResult run = eval(p, c.name, args, 1000000, false);
        auto* ret = std::get_if<Returned>(&run.outcome);
        if (!ret) {
          r.fail(c.name + " -> " + render_outcome(run.outcome));
          continue;
        }
        if (auto* i = std::get_if<std::int64_t>(&ret->value)) a["result"] = *i;
        else if (auto* b = std::get_if<bool>(&ret->value)) a["result"] = *b;
        for (const auto& ens : contract.ensures)
          if (!eval_formula(ens, a)) r.fail(c.name + " violates " + to_prefix(ens) + " at " + to_string(a));
      }
    }
  }
  if (functions == 0) r.fail("no call-free function with proved postcondition");
  if (r.pass)
    r.detail = std::to_string(functions) + " functions, " + std::to_string(runs) + " runs, 0 ensures failures";
  return r;
}

Result criterion7() {
  Result r;
  auto flagged = [](const TypedProgram& p, Mode m) {
    std::set<std::string> out;
    for (const auto& d : check_termination(p, m)) out.insert(p.callable(d.callable).name);
    return out;
  };
  auto missing = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    std::vector<std::string> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
  };
  int first_order = 0;
  for (const auto& name : corpus_files()) {
    TypedProgram p = load(name);
    auto partial = flagged(p, Mode::Partial), self = flagged(p, Mode::SelfCheck);
    auto cg = flagged(p, Mode::CallGraph), sound = flagged(p, Mode::Sound);
    if (p.is_first_order()) {
      ++first_order;
      for (const auto& n : missing(partial, self)) r.fail(name + ": " + n + " flagged by partial, not self-check");
      for (const auto& n : missing(self, cg)) r.fail(name + ": " + n + " flagged by self-check, not callgraph");
    }
    for (const auto& n : missing(cg, sound)) r.fail(name + ": " + n + " flagged by callgraph, not sound");
  }
  if (r.pass) r.detail = std::to_string(first_order) + " first-order programs monotone, callgraph within sound everywhere";
  return r;
}

Result criterion8() {
  Result r;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(0, 256), byte(0, 255);
  int programs = 0, errors = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& ch : s) ch = static_cast<char>(byte(rng));
    auto res = parse(s, "fuzz.moo");
    if (std::holds_alternative<Program>(res)) ++programs;
    else ++errors;
  }
  int round_trips = 0;
  for (const auto& name : corpus_files()) {
    auto p = parse(slurp(corpus(name)), name);
    if (!std::holds_alternative<Program>(p)) {
      r.fail(name + " does not parse");
      continue;
    }
    auto q = parse(pretty_print(std::get<Program>(p)), name);
    if (!std::holds_alternative<Program>(q) || !same_structure(std::get<Program>(p), std::get<Program>(q)))
      r.fail(name + " does not round-trip");
    else
      ++round_trips;
  }
  if (r.pass)
    r.detail = "10000 random inputs (" + std::to_string(errors) + " parse errors, " + std::to_string(programs) +
               " programs, no crash), " + std::to_string(round_trips) + " corpus round trips";
  return r;
}

const std::vector<std::pair<std::string, std::function<Result()>>> kCriteria = {
    {"verdict matrix reproduction", criterion1},
    {"proved-false end-to-end demo", criterion2},
    {"erasure/divergence demo", criterion3},
    {"sound-mode safety", criterion4},
    {"solver soundness vs brute force", criterion5},
    {"wp/interpreter differential", criterion6},
    {"mode monotonicity", criterion7},
    {"frontend robustness", criterion8},
};

}  // namespace

int main(int argc, char** argv) {
  std::size_t only = 0;
  if (argc > 1) {
    only = std::strtoul(argv[1], nullptr, 10);
    if (only < 1 || only > kCriteria.size()) {
      std::cerr << "usage: acceptance [1-" << kCriteria.size() << "]\n";
      return 2;
    }
  }
  int failures = 0;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (only && only != i + 1) continue;
    Result r;
    try {
      r = kCriteria[i].second();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    if (!r.pass) ++failures;
    std::cout << "criterion " << i + 1 << " (" << kCriteria[i].first << "): " << (r.pass ? "PASS" : "FAIL") << " - "
              << r.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
