#include <random>

#include "miniver/parser.hpp"
#include "miniver/typecheck.hpp"
#include "support.hpp"

using namespace miniver;
using support::parse_ok;

namespace {

bool has_category(const std::vector<TypeError>& errs, TypeErrorCategory c) {
  return std::any_of(errs.begin(), errs.end(), [&](const TypeError& e) { return e.category == c; });
}

const FunctionDecl& function(const Program& p, std::string_view name) {
  for (const auto& d : p.decls)
    if (auto* f = std::get_if<FunctionDecl>(&d); f && f->name == name) return *f;
  FAIL("no function " << name);
  throw;
}

}  // namespace

TEST_SUITE("frontend") {

TEST_CASE("minimal function") {
  Program p = parse_ok("func f() -> int ensures result == 0 { return 0; }");
  REQUIRE(p.decls.size() == 1);
  const auto& f = std::get<FunctionDecl>(p.decls[0]);
  CHECK(f.name == "f");
  CHECK(f.postconditions.size() == 1);
  CHECK(f.preconditions.empty());
  REQUIRE(f.return_type);
  CHECK(f.return_type->is_int());
}

TEST_CASE("recurse and test transcription") {
  Program p = parse_ok(support::read_file(support::corpus_path("gobra_exploit.moo")));
  const auto& recurse = function(p, "recurse");
  REQUIRE(recurse.postconditions.size() == 1);
  CHECK(recurse.postconditions[0].kind == ExprKind::BoolLit);
  CHECK_FALSE(recurse.postconditions[0].bool_value);
  REQUIRE(recurse.body->size() == 1);
  const Stmt& ret = recurse.body->front();
  CHECK(ret.kind == StmtKind::Return);
  CHECK(ret.value->kind == ExprKind::Call);
  CHECK(ret.value->name == "recurse");

  const auto& test = function(p, "test");
  REQUIRE(test.body->size() == 1);
  CHECK(test.body->front().kind == StmtKind::VarDecl);
  CHECK(test.body->front().ghost);
  CHECK(test.body->front().name == "_");
}

TEST_CASE("parse error points at the offending token") {
  auto r = parse("func f( {", "bad.moo");
  REQUIRE(std::holds_alternative<ParseError>(r));
  const auto& e = std::get<ParseError>(r);
  CHECK(e.span.line == 1);
  CHECK(e.span.col == 9);
  CHECK(e.message.find("parameter") != std::string::npos);
  CHECK(e.message.find("')'") != std::string::npos);
}

TEST_CASE("lexer rejects stray characters") {
  CHECK(std::holds_alternative<ParseError>(parse("func f() { return 1 $ 2; }", "x")));
  CHECK(std::holds_alternative<ParseError>(parse("func f() -> int { return 99999999999999999999999; }", "x")));
}

TEST_CASE("omega program callables and invoke type") {
  TypedProgram p = support::corpus("omega_exploit.moo");
  std::vector<std::string> names;
  for (const auto& c : p.callables()) names.push_back(c.name);
  CHECK(names == std::vector<std::string>{"Uninhabited.get", "Omega.constructor", "lambda#0", "test"});
  CHECK(p.find("Uninhabited.get")->kind == CallableKind::AbstractMethod);
  CHECK(p.find("lambda#0")->kind == CallableKind::Lambda);

  int invokes = 0;
  walk_program_exprs(p.program(), [&](const Expr& e) {
    if (e.kind != ExprKind::Invoke) return;
    ++invokes;
    REQUIRE(e.type);
    CHECK(e.type->kind == Type::Kind::Named);
    CHECK(e.type->name == "Uninhabited");
  });
  CHECK(invokes == 2);  // inside the lambda and inside test
}

TEST_CASE("typecheck error categories") {
  CHECK(has_category(support::type_errors("func f(x: int) -> int { return x * x; }"),
                     TypeErrorCategory::NonlinearMultiplication));
  CHECK(has_category(support::type_errors("func f() { return result; }"), TypeErrorCategory::ResultMisuse));
  CHECK(has_category(support::type_errors("func f() -> int { return y; }"), TypeErrorCategory::UnresolvedName));
  CHECK(has_category(support::type_errors("func f() -> int { return true; }"), TypeErrorCategory::TypeMismatch));
  CHECK(has_category(support::type_errors("class C { const x: int; constructor() { } }"),
                     TypeErrorCategory::FieldUnassigned));
  CHECK(has_category(support::type_errors("func f() -> int { ghost var g := 1; return g; }"),
                     TypeErrorCategory::GhostMisuse));
  CHECK(has_category(support::type_errors("func f() -> int requires result > 0 { return 1; }"),
                     TypeErrorCategory::ResultMisuse));
  CHECK(has_category(support::type_errors("func f() -> int decreases true { return 1; }"),
                     TypeErrorCategory::TypeMismatch));
  CHECK_FALSE(support::type_errors("func f() -> int { return 2 * 3; }").size() > 0);
  CHECK(support::type_errors("func f(x: int) -> int { return 3 * x + x * 2; }").empty());
}

TEST_CASE("every field is assigned exactly once") {
  CHECK(support::type_errors("class C { const x: int; constructor(b: bool) { if b { this.x := 1; } } }").size() > 0);
  CHECK(support::type_errors("class C { const x: int; constructor(b: bool) { if b { this.x := 1; } else { this.x := 2; } } }")
            .empty());
  CHECK(support::type_errors("class C { const x: int := 1; constructor() { this.x := 2; } }").size() > 0);
}

TEST_CASE("pretty printing") {
  CHECK(pretty_print(parse_ok("func f() {}")) == "func f() {}\n");
  Program omega = parse_ok(support::read_file(support::corpus_path("omega_exploit.moo")));
  std::string text = pretty_print(omega);
  CHECK(text.find("(o: Omega) => o.omega(o)") != std::string::npos);
  CHECK(text.find("const omega: (Omega) -> Uninhabited;") != std::string::npos);
}

TEST_CASE("round trip on every corpus file") {
  for (const auto& name : support::corpus_files()) {
    CAPTURE(name);
    Program p = parse_ok(support::read_file(support::corpus_path(name)), name);
    std::string once = pretty_print(p);
    Program q = parse_ok(once, name);
    CHECK(same_structure(p, q));
    CHECK(pretty_print(q) == once);
  }
}

TEST_CASE("round trip keeps precedence and associativity") {
  const char* src =
      "func f(a: int, b: int, p: bool, q: bool) -> bool\n"
      "  ensures (p ==> q) ==> p ==> q\n"
      "  ensures a - (b - 1) == a - b + 1\n"
      "  ensures -(a + b) < -a - -b || !(p && q) || !p\n"
      "{ return (p || q) && !(p && q); }";
  Program p = parse_ok(src);
  Program q = parse_ok(pretty_print(p));
  CHECK(same_structure(p, q));
}

TEST_CASE("typed coverage") {
  for (const auto& name : support::corpus_files()) {
    CAPTURE(name);
    TypedProgram p = support::corpus(name);
    walk_program_exprs(p.program(), [&](const Expr& e) {
      CHECK(e.type.has_value());
      bool is_reference = e.kind == ExprKind::VarRef || e.kind == ExprKind::Call || e.kind == ExprKind::MethodCall ||
                          e.kind == ExprKind::FieldAccess;
      if (is_reference) CHECK(e.ref.kind != Resolution::Kind::Unresolved);
    });
  }
}

TEST_CASE("ghost appears only on variable declarations") {
  for (const auto& name : support::corpus_files()) {
    Program p = parse_ok(support::read_file(support::corpus_path(name)), name);
    auto check_block = [&](const Block& b) {
      walk_stmts(b, [&](const Stmt& s) {
        if (s.ghost) CHECK(s.kind == StmtKind::VarDecl);
      });
    };
    for (const auto& d : p.decls) {
      if (auto* f = std::get_if<FunctionDecl>(&d); f && f->body) check_block(*f->body);
      if (auto* c = std::get_if<ClassDecl>(&d)) {
        if (c->ctor) check_block(c->ctor->body);
        for (const auto& m : c->methods) check_block(*m.body);
      }
    }
  }
  CHECK(std::holds_alternative<ParseError>(parse("func f() { ghost return; }", "x")));
  CHECK(std::holds_alternative<ParseError>(parse("func f() { ghost f(); }", "x")));
}

TEST_CASE("blank identifier is never readable") {
  CHECK(has_category(support::type_errors("func f() -> int { var _ := 1; return _; }"),
                     TypeErrorCategory::UnresolvedName));
}

TEST_CASE("parse is total on random bytes") {
  std::mt19937_64 rng(20261019);
  std::uniform_int_distribution<int> len(0, 256), byte(0, 255);
  for (int i = 0; i < 10000; ++i) {
    std::string s(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& ch : s) ch = static_cast<char>(byte(rng));
    auto r = parse(s, "fuzz.moo");
    CHECK((std::holds_alternative<ParseError>(r) || std::holds_alternative<Program>(r)));
  }
}

TEST_CASE("parse and typecheck are total on mutated corpus text") {
  std::mt19937_64 rng(7);
  const std::string alphabet = "(){}:;.,=<>!-+*&|_ \nabcxyz019";
  std::vector<std::string> sources;
  for (const auto& name : support::corpus_files()) sources.push_back(support::read_file(support::corpus_path(name)));
  for (int i = 0; i < 3000; ++i) {
    std::string s = sources[static_cast<std::size_t>(i) % sources.size()];
    int edits = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < edits && !s.empty(); ++k) {
      std::size_t at = rng() % s.size();
      switch (rng() % 3) {
        case 0: s.erase(at, 1 + rng() % 8); break;
        case 1: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
        default: s[at] = alphabet[rng() % alphabet.size()]; break;
      }
    }
    auto r = parse(s, "mut.moo");
    if (auto* p = std::get_if<Program>(&r)) {
      auto t = typecheck(*p);
      CHECK((std::holds_alternative<TypedProgram>(t) || !std::get<std::vector<TypeError>>(t).empty()));
      Program q = parse_ok(pretty_print(*p));
      CHECK(same_structure(*p, q));
    }
  }
}

TEST_CASE("deep nesting does not crash the parser") {
  std::string deep = "func f() -> int { return " + std::string(5000, '(') + "1" + std::string(5000, ')') + "; }";
  auto r = parse(deep, "deep.moo");
  CHECK((std::holds_alternative<ParseError>(r) || std::holds_alternative<Program>(r)));
}

}  // TEST_SUITE
