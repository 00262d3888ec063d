#include <random>

#include "miniver/runtime.hpp"
#include "miniver/solver.hpp"
#include "miniver/vcgen.hpp"
#include "support.hpp"

using namespace miniver;

namespace {

constexpr std::uint64_t kBig = 1000000;

const Block& body_of(const TypedProgram& p, std::string_view name) { return *p.find(name)->function->body; }

template <class T>
const T& as(const RunResult& r) {
  INFO(render_outcome(r.outcome));
  REQUIRE(std::holds_alternative<T>(r.outcome));
  return std::get<T>(r.outcome);
}

}  // namespace

TEST_SUITE("runtime") {

TEST_CASE("erasure examples") {
  TypedProgram gobra = support::corpus("gobra_exploit.moo");
  TypedProgram erased = erase(gobra);
  CHECK(body_of(erased, "test").empty());
  CHECK(body_of(erased, "recurse").size() == 1);

  TypedProgram omega = erase(support::corpus("omega_exploit.moo"));
  const Block& t = body_of(omega, "test");
  REQUIRE(t.size() == 1);
  CHECK(t[0].name == "o");
  CHECK(t[0].value->kind == ExprKind::New);

  TypedProgram plain = support::corpus("straightline.moo");
  CHECK(same_structure(erase(plain).program(), plain.program()));
}

TEST_CASE("erasure inside branches and idempotence") {
  TypedProgram p = support::typed_ok(
      "func f(b: bool) -> int { if b { ghost var g := 1; ghost var h := g + 1; return 1; } else { ghost var k := 2; } "
      "return 0; }");
  TypedProgram e = erase(p);
  const Block& b = body_of(e, "f");
  REQUIRE(b.size() == 2);
  CHECK(b[0].then_body.size() == 1);
  CHECK(b[0].else_body.empty());
  for (const auto& name : support::corpus_files()) {
    TypedProgram once = erase(support::corpus(name));
    CHECK(same_structure(erase(once).program(), once.program()));
  }
}

TEST_CASE("bad returns 1 despite its verified contract") {
  TypedProgram p = erase(support::corpus("bad_client.moo"));
  RunResult r = eval(p, "bad", {}, kBig, true);
  const auto& v = as<ContractViolation>(r);
  CHECK(v.callable == "bad");
  CHECK(v.clause == ClauseKind::Ensures);
  CHECK(v.index == 0);
  CHECK(v.clause_text == "result == 0");
  REQUIRE(v.returned);
  CHECK(std::get<std::int64_t>(*v.returned) == 1);
  CHECK(v.site.line == 17);
  CHECK(render_outcome(r.outcome).rfind("ensures result == 0 violated; returned 1", 0) == 0);
  CHECK(std::get<std::int64_t>(as<Returned>(eval(p, "bad", {}, kBig, false)).value) == 1);
}

TEST_CASE("erased test terminates, un-erased diverges") {
  TypedProgram gobra = support::corpus("gobra_exploit.moo");
  RunResult r = eval(erase(gobra), "test", {}, kBig, false);
  CHECK(std::holds_alternative<UnitV>(as<Returned>(r).value));
  CHECK(as<FuelExhausted>(eval(gobra, "recurse", {}, 1000, false)).consumed == 1000);

  for (const char* name : {"gobra_exploit.moo", "key_exploit.moo", "omega_exploit.moo"}) {
    CAPTURE(name);
    TypedProgram p = support::corpus(name);
    RunResult raw = eval(p, "test", {}, 10000, false);
    CHECK(as<FuelExhausted>(raw).consumed == 10000);
    CHECK(raw.frames == 10000);
    RunResult clean = eval(erase(p), "test", {}, 10000, false);
    as<Returned>(clean);
    CHECK(clean.frames < 10);
  }
}

TEST_CASE("omega direct diverges in the field initializer") {
  TypedProgram p = support::corpus("omega_direct.moo");
  as<FuelExhausted>(eval(p, "test", {}, 5000, false));
  as<Returned>(eval(erase(p), "test", {}, 5000, false));
}

TEST_CASE("fact") {
  TypedProgram p = support::corpus("fact.moo");
  RunResult r = eval(p, "fact", {std::int64_t{10}}, kBig, true);
  CHECK(std::get<std::int64_t>(as<Returned>(r).value) == 56);
  CHECK(r.frames == 11);
  RunResult neg = eval(p, "fact", {std::int64_t{-1}}, kBig, true);
  const auto& v = as<ContractViolation>(neg);
  CHECK(v.clause == ClauseKind::Requires);
  CHECK_FALSE(v.returned);
  as<FuelExhausted>(eval(p, "fact", {std::int64_t{-1}}, 500, false));
}

TEST_CASE("deep recursion stays within the stack") {
  TypedProgram p = support::corpus("fact.moo");
  RunResult r = eval(p, "fact", {std::int64_t{200000}}, kBig, false);
  CHECK(std::get<std::int64_t>(as<Returned>(r).value) == 200000LL * 200001 / 2 + 1);
}

TEST_CASE("closures capture by value") {
  TypedProgram p = support::typed_ok(
      "func k(x: int) -> int { var f := (y: int) => y + x; var x := 100; return f(2) + x; }\n"
      "func apply(g: (int) -> int, v: int) -> int { return g(v); }\n"
      "func h() -> int { return apply((z: int) => 3 * z, 5); }\n");
  CHECK(std::get<std::int64_t>(as<Returned>(eval(p, "k", {std::int64_t{1}}, kBig, false)).value) == 103);
  RunResult h = eval(p, "h", {}, kBig, false);
  CHECK(std::get<std::int64_t>(as<Returned>(h).value) == 15);
  CHECK(h.frames == 3);
}

TEST_CASE("objects, fields and methods") {
  TypedProgram p = support::typed_ok(
      "class P { const x: int; const y: int := 7; constructor(a: int) { this.x := a; }\n"
      "  func sum() -> int { return this.x + this.y; } }\n"
      "func f() -> int { var p := new P(5); return p.sum() + p.x; }\n");
  RunResult r = eval(p, "f", {}, kBig, false);
  CHECK(std::get<std::int64_t>(as<Returned>(r).value) == 17);
  CHECK(r.frames == 3);  // f, constructor, sum; initializers run inside the constructor frame
}

TEST_CASE("short-circuit evaluation") {
  TypedProgram p = support::typed_ok(
      "func loop() -> bool { return loop(); }\n"
      "func f(b: bool) -> bool { return b || loop(); }\n"
      "func g(b: bool) -> bool { return b ==> loop(); }\n");
  CHECK(std::get<bool>(as<Returned>(eval(p, "f", {true}, 100, false)).value));
  CHECK(std::get<bool>(as<Returned>(eval(p, "g", {false}, 100, false)).value));
  as<FuelExhausted>(eval(p, "f", {false}, 100, false));
}

TEST_CASE("runtime errors") {
  TypedProgram p = support::corpus("fact.moo");
  CHECK(as<RuntimeError>(eval(p, "nope", {}, kBig, false)).kind == "unbound-entry");
  CHECK(as<RuntimeError>(eval(p, "fact", {}, kBig, false)).kind == "arity-mismatch");
  CHECK(as<RuntimeError>(eval(p, "fact", {true}, kBig, false)).kind == "argument-type-mismatch");
  TypedProgram q = support::typed_ok("func f(x: int) -> int { return x + 1; }\nfunc g(x: int) -> int { return -x; }");
  CHECK(as<RuntimeError>(eval(q, "f", {std::numeric_limits<std::int64_t>::max()}, kBig, false)).kind ==
        "integer-overflow");
  CHECK(as<RuntimeError>(eval(q, "g", {std::numeric_limits<std::int64_t>::min()}, kBig, false)).kind ==
        "integer-overflow");
  TypedProgram omega = support::corpus("omega_exploit.moo");
  CHECK(as<RuntimeError>(eval(omega, "Omega.constructor", {}, kBig, false)).kind == "unbound-entry");
}

TEST_CASE("fuel monotonicity") {
  TypedProgram fact = support::corpus("fact.moo");
  TypedProgram bad = erase(support::corpus("bad_client.moo"));
  for (std::int64_t n = 0; n <= 12; ++n) {
    RunResult exact = eval(fact, "fact", {n}, kBig, true);
    std::uint64_t need = exact.frames;
    for (std::uint64_t b = need; b < need + 25; ++b) {
      RunResult r = eval(fact, "fact", {n}, b, true);
      CHECK(same_outcome(r.outcome, exact.outcome));
      CHECK(r.frames == need);
    }
    CHECK(as<FuelExhausted>(eval(fact, "fact", {n}, need - 1, true)).consumed == need - 1);
  }
  RunResult v = eval(bad, "bad", {}, kBig, true);
  for (std::uint64_t b = v.frames; b < v.frames + 10; ++b) CHECK(same_outcome(eval(bad, "bad", {}, b, true).outcome, v.outcome));
}

TEST_CASE("determinism") {
  for (const auto& name : support::corpus_files()) {
    TypedProgram p = support::corpus(name);
    for (const auto& c : p.callables()) {
      if (c.kind != CallableKind::Function || !c.params().empty()) continue;
      RunResult a = eval(p, c.name, {}, 3000, true);
      RunResult b = eval(p, c.name, {}, 3000, true);
      CHECK(same_outcome(a.outcome, b.outcome));
      CHECK(a.frames == b.frames);
    }
  }
}

TEST_CASE("verified call-free functions meet their contracts at runtime") {
  TypedProgram p = support::corpus("straightline.moo");
  ContractEnv env = ContractEnv::build(p);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> small(-50, 50);
  int checked_functions = 0;
  for (const auto& c : p.callables()) {
    if (c.kind != CallableKind::Function) continue;
    auto vcs = vcs_for_callable(c.id, p, env, Mode::Partial);
    bool all_proved = std::all_of(vcs.begin(), vcs.end(),
                                  [](const auto& vc) { return std::holds_alternative<Proved>(is_valid(vc.formula)); });
    if (!all_proved) continue;
    ++checked_functions;
    const Contract& contract = *env.find(c.id);
    int runs = 0;
    while (runs < 100) {
      std::vector<Value> args;
      Assignment a;
      for (const auto& param : c.params()) {
        if (param.type.is_bool()) {
          bool b = rng() % 2;
          args.push_back(b);
          a[param.name] = b;
        } else {
          std::int64_t v = small(rng);
          args.push_back(v);
          a[param.name] = v;
        }
      }
      if (!std::all_of(contract.requires_.begin(), contract.requires_.end(),
                       [&](const Formula& f) { return eval_formula(f, a); }))
        continue;
      ++runs;
      RunResult r = eval(p, c.name, args, kBig, true);
      const Value& out = as<Returned>(r).value;
      if (auto* i = std::get_if<std::int64_t>(&out)) a["result"] = *i;
      else a["result"] = std::get<bool>(out);
      for (const auto& ens : contract.ensures) CHECK(eval_formula(ens, a));
    }
  }
  CHECK(checked_functions == 5);
}

TEST_CASE("off_by_one fails at the counterexample") {
  TypedProgram p = support::corpus("straightline.moo");
  auto vcs = vcs_for_callable(support::id_of(p, "off_by_one"), p, ContractEnv::build(p), Mode::Partial);
  auto v = is_valid(vcs.at(0).formula);
  REQUIRE(std::holds_alternative<Counterexample>(v));
  std::int64_t x = std::get<std::int64_t>(std::get<Counterexample>(v).assignment.at("x"));
  as<ContractViolation>(eval(p, "off_by_one", {x}, kBig, true));
}

}  // TEST_SUITE
