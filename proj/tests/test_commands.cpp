#include <json.hpp>
#include <random>
#include <set>

#include "miniver/commands.hpp"
#include "support.hpp"

using namespace miniver;
using json = nlohmann::json;

namespace {

struct Captured {
  int code = 0;
  std::string out;
  std::string err;
};

template <class F>
Captured capture(F&& f) {
  std::ostringstream out, err;
  Captured c;
  c.code = f(out, err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

std::string temp_file(const std::string& name, const std::string& content) {
  auto dir = std::filesystem::temp_directory_path() / "miniver-tests";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::ofstream(path, std::ios::binary) << content;
  return path.string();
}

const CallableReport& entry(const Report& r, const std::string& name) {
  for (const auto& c : r.callables)
    if (c.name == name) return c;
  FAIL("no entry " << name);
  throw;
}

const std::string kManifest = support::corpus_path("expected.json");
const std::string kModes[] = {"partial", "self-check", "callgraph", "sound"};

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("verify examples") {
  Report gobra = verify_source(support::read_file(support::corpus_path("gobra_exploit.moo")), "g", Mode::Partial);
  CHECK(gobra.exit_code() == 0);
  CHECK(entry(gobra, "recurse").verified());
  CHECK(entry(gobra, "test").verified());

  Report omega = verify_source(support::read_file(support::corpus_path("omega_exploit.moo")), "o", Mode::Sound);
  CHECK(omega.exit_code() == 1);
  const auto& lambda = entry(omega, "lambda#0");
  REQUIRE(lambda.reasons.size() == 1);
  CHECK(lambda.reasons[0].kind == ReasonKind::LambdaInCycle);
  CHECK(lambda.reasons[0].detail == "cycle lambda#0 -> lambda#0");

  Report direct = verify_source(support::read_file(support::corpus_path("omega_direct.moo")), "d", Mode::CallGraph);
  CHECK(direct.exit_code() == 1);
  CHECK(entry(direct, "Omega.omega.init").reasons.at(0).kind == ReasonKind::RecursiveFieldInitializer);
}

TEST_CASE("every callable is reported") {
  Report r = verify_source(support::read_file(support::corpus_path("omega_exploit.moo")), "o", Mode::Partial);
  CHECK(r.callables.size() == 4);
  CHECK(r.verified_count() == 4);
  CHECK(r.rejected_count() == 0);
}

TEST_CASE("input errors exit 2") {
  Report parse_error = verify_source("func f( {", "bad.moo", Mode::Sound);
  CHECK(parse_error.exit_code() == 2);
  REQUIRE(parse_error.callables.size() == 1);
  CHECK(parse_error.callables[0].reasons.at(0).kind == ReasonKind::TypeError);
  CHECK(parse_error.callables[0].reasons.at(0).col == 9);

  Report type_error = verify_source("func f(x: int) -> int { return x * x; }", "bad.moo", Mode::Sound);
  CHECK(type_error.exit_code() == 2);
  CHECK(type_error.callables[0].reasons.at(0).detail.find("nonlinear-multiplication") != std::string::npos);

  auto missing = capture([](auto& o, auto& e) { return cmd_verify("/nonexistent/x.moo", Mode::Sound, Format::Text, false, o, e); });
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cannot read") != std::string::npos);
}

TEST_CASE("vc failures name the counterexample") {
  Report r = verify_source(support::read_file(support::corpus_path("straightline.moo")), "s", Mode::Partial);
  const auto& off = entry(r, "off_by_one");
  REQUIRE(off.reasons.size() == 1);
  CHECK(off.reasons[0].kind == ReasonKind::VcFailed);
  CHECK(off.reasons[0].detail.find("{x=0}") != std::string::npos);
  CHECK(off.reasons[0].line == 52);
}

TEST_CASE("unknown verdicts reject") {
  Report r = verify_source(
      "func f(x: int, y: int, z: int) -> int requires x == 2 * y requires x == 2 * z + 1 ensures false { return 0; }",
      "u.moo", Mode::Partial);
  CHECK(r.exit_code() == 1);
  CHECK(entry(r, "f").reasons.at(0).kind == ReasonKind::VcUnknown);
}

TEST_CASE("json report schema and agreement with text") {
  for (const auto& name : support::corpus_files()) {
    for (Mode m : {Mode::Partial, Mode::SelfCheck, Mode::CallGraph, Mode::Sound}) {
      Report r = verify_source(support::read_file(support::corpus_path(name)), name, m, true);
      json j = json::parse(render_report_json(r));
      CHECK(j.at("file") == name);
      CHECK(j.at("mode") == std::string(mode_name(m)));
      REQUIRE(j.at("callables").is_array());
      std::string text = render_report_text(r);
      for (const auto& c : j.at("callables")) {
        CHECK(c.at("name").is_string());
        std::string verdict = c.at("verdict");
        CHECK((verdict == "verified" || verdict == "rejected"));
        CHECK((verdict == "verified") == c.at("reasons").empty());
        for (const auto& reason : c.at("reasons")) {
          CHECK(parse_reason_kind(reason.at("kind").get<std::string>()).has_value());
          CHECK(reason.at("detail").is_string());
          CHECK(reason.at("line").is_number_integer());
          CHECK(reason.at("col").is_number_integer());
        }
        // the text rendering lists the same verdict on the callable's line
        std::string needle = "  " + c.at("name").get<std::string>();
        auto pos = text.find(needle);
        REQUIRE(pos != std::string::npos);
        CHECK(text.substr(pos, text.find('\n', pos) - pos).find(verdict) != std::string::npos);
      }
      CHECK(j.at("summary").at("verified") == r.verified_count());
      CHECK(j.at("summary").at("rejected") == r.rejected_count());
      CHECK(j.at("vcs").size() == r.vc_dump.size());
    }
  }
}

TEST_CASE("exit-code contract on every corpus file") {
  for (const auto& name : support::corpus_files()) {
    for (Mode m : {Mode::Partial, Mode::SelfCheck, Mode::CallGraph, Mode::Sound}) {
      auto c = capture([&](auto& o, auto& e) { return cmd_verify(support::corpus_path(name), m, Format::Json, false, o, e); });
      json j = json::parse(c.out);
      int rejected = j.at("summary").at("rejected");
      CHECK(c.code == (rejected == 0 ? 0 : 1));
    }
  }
}

TEST_CASE("run examples") {
  auto bad = capture([](auto& o, auto& e) {
    return cmd_run(support::corpus_path("bad_client.moo"), "bad", {}, 1000000, false, true, o, e);
  });
  CHECK(bad.code == 1);
  CHECK(bad.out.find("ensures result == 0 violated; returned 1") != std::string::npos);

  auto test = capture([](auto& o, auto& e) {
    return cmd_run(support::corpus_path("gobra_exploit.moo"), "test", {}, 10000, false, false, o, e);
  });
  CHECK(test.code == 0);
  CHECK(test.out.find("returned unit") != std::string::npos);

  auto loop = capture([](auto& o, auto& e) {
    return cmd_run(support::corpus_path("gobra_exploit.moo"), "recurse", {}, 1000, true, false, o, e);
  });
  CHECK(loop.code == 3);
  CHECK(loop.out.find("fuel exhausted after 1000 frames") != std::string::npos);

  auto fact = capture([](auto& o, auto& e) {
    return cmd_run(support::corpus_path("fact.moo"), "fact", {"4"}, 1000000, false, true, o, e);
  });
  CHECK(fact.code == 0);
  CHECK(fact.out.find("returned 11") != std::string::npos);
}

TEST_CASE("run input errors") {
  auto path = support::corpus_path("fact.moo");
  CHECK(capture([&](auto& o, auto& e) { return cmd_run(path, "fact", {"x"}, 10, false, false, o, e); }).code == 2);
  CHECK(capture([&](auto& o, auto& e) { return cmd_run(path, "fact", {"1"}, 0, false, false, o, e); }).code == 2);
  CHECK(capture([&](auto& o, auto& e) { return cmd_run(path, "nope", {}, 10, false, false, o, e); }).code == 2);
  CHECK(capture([&](auto& o, auto& e) { return cmd_run(path, "fact", {}, 10, false, false, o, e); }).code == 2);
  CHECK(capture([&](auto& o, auto& e) { return cmd_run(path, "fact", {"true"}, 10, false, false, o, e); }).code == 2);
  auto bad_src = temp_file("bad.moo", "func f( {");
  CHECK(capture([&](auto& o, auto& e) { return cmd_run(bad_src, "f", {}, 10, false, false, o, e); }).code == 2);
}

TEST_CASE("graph examples") {
  auto key = capture([](auto& o, auto& e) {
    return cmd_graph(support::corpus_path("key_exploit.moo"), EdgePolicy::FirstOrder, false, o, e);
  });
  CHECK(key.code == 0);
  CHECK(key.out.find("{recurse1, recurse2}") != std::string::npos);

  auto omega = capture([](auto& o, auto& e) {
    return cmd_graph(support::corpus_path("omega_exploit.moo"), EdgePolicy::FirstOrder, false, o, e);
  });
  CHECK(omega.out.find("nontrivial") == std::string::npos);

  auto over = capture([](auto& o, auto& e) {
    return cmd_graph(support::corpus_path("omega_exploit.moo"), EdgePolicy::Overapprox, true, o, e);
  });
  CHECK(over.out.find("n2 -> n2 [style=dashed]") != std::string::npos);

  auto bad_src = temp_file("bad-graph.moo", "func f() -> int { return x; }");
  CHECK(capture([&](auto& o, auto& e) { return cmd_graph(bad_src, EdgePolicy::FirstOrder, false, o, e); }).code == 2);
}

TEST_CASE("bundled matrix matches") {
  auto m = capture([](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, kManifest, Format::Text, o, e); });
  CHECK(m.code == 0);
  CHECK(m.out.find("28/28 cells match") != std::string::npos);

  json manifest = json::parse(support::read_file(kManifest));
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& e : manifest) cells.insert({e.at("file").get<std::string>(), e.at("mode").get<std::string>()});
  for (const auto& name : support::corpus_files())
    for (const auto& mode : kModes) CHECK(cells.count({name, mode}) == 1);
}

TEST_CASE("matrix flags a wrong cell") {
  json manifest = json::parse(support::read_file(kManifest));
  for (auto& e : manifest)
    if (e.at("file") == "key_exploit.moo" && e.at("mode") == "self-check") e["expected"] = "rejected";
  auto path = temp_file("wrong.json", manifest.dump());
  auto m = capture([&](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, path, Format::Json, o, e); });
  CHECK(m.code == 1);
  json j = json::parse(m.out);
  CHECK(j.at("matched") == 27);
  REQUIRE(j.at("mismatches").size() == 1);
  CHECK(j.at("mismatches")[0].get<std::string>().find("key_exploit.moo [self-check]") != std::string::npos);
}

TEST_CASE("matrix checks reason kinds and per-callable verdicts") {
  json wrong_reason = json::array({{{"file", "omega_direct.moo"}, {"mode", "callgraph"}, {"expected", "rejected"},
                                    {"reason_kind", "contract_cycle"}}});
  auto path = temp_file("reason.json", wrong_reason.dump());
  CHECK(capture([&](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, path, Format::Text, o, e); }).code == 1);

  json wrong_callable = json::array({{{"file", "straightline.moo"}, {"mode", "sound"}, {"expected", "rejected"},
                                      {"callables", {{"abs", "rejected"}}}}});
  auto path2 = temp_file("callable.json", wrong_callable.dump());
  auto m = capture([&](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, path2, Format::Text, o, e); });
  CHECK(m.code == 1);
  CHECK(m.out.find("abs: expected rejected, got verified") != std::string::npos);
}

TEST_CASE("empty and malformed manifests") {
  auto empty = temp_file("empty.json", "[]");
  auto m = capture([&](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, empty, Format::Text, o, e); });
  CHECK(m.code == 0);
  CHECK(m.out.find("0/0 cells match") != std::string::npos);

  for (const char* bad : {"{", "{}", "[{\"file\": \"fact.moo\"}]",
                          "[{\"file\": \"fact.moo\", \"mode\": \"lax\", \"expected\": \"verified\"}]",
                          "[{\"file\": \"fact.moo\", \"mode\": \"sound\", \"expected\": \"maybe\"}]",
                          "[{\"file\": \"fact.moo\", \"mode\": \"sound\", \"expected\": \"verified\", \"reason_kind\": \"x\"}]"}) {
    auto path = temp_file("bad.json", bad);
    CHECK(capture([&](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, path, Format::Text, o, e); }).code == 2);
  }
  auto missing = temp_file("missing.json", "[{\"file\": \"nope.moo\", \"mode\": \"sound\", \"expected\": \"verified\"}]");
  CHECK(capture([&](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, missing, Format::Text, o, e); }).code == 2);
}

TEST_CASE("matrix is deterministic") {
  auto a = capture([](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, kManifest, Format::Json, o, e); });
  for (int i = 0; i < 5; ++i) {
    auto b = capture([](auto& o, auto& e) { return cmd_matrix(MINIVER_CORPUS_DIR, kManifest, Format::Json, o, e); });
    CHECK(a.out == b.out);
    CHECK(a.code == b.code);
  }
}

}  // TEST_SUITE
