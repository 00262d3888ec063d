#include "miniver/commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <set>
#include <json.hpp>
#include <sstream>

#include "miniver/parser.hpp"
#include "miniver/runtime.hpp"
#include "miniver/solver.hpp"
#include "miniver/vcgen.hpp"

namespace miniver {

using json = nlohmann::ordered_json;

namespace {

constexpr std::pair<ReasonKind, std::string_view> kReasonNames[] = {
    {ReasonKind::VcFailed, "vc_failed"},
    {ReasonKind::VcUnknown, "vc_unknown"},
    {ReasonKind::SelfContractUse, "self_contract_use"},
    {ReasonKind::ContractCycle, "contract_cycle"},
    {ReasonKind::RecursiveFieldInitializer, "recursive_field_initializer"},
    {ReasonKind::MissingDecreases, "missing_decreases"},
    {ReasonKind::LambdaInCycle, "lambda_in_cycle"},
    {ReasonKind::TypeError, "type_error"},
};

ReasonKind reason_for(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::SelfContractUse: return ReasonKind::SelfContractUse;
    case DiagnosticKind::ContractCycle: return ReasonKind::ContractCycle;
    case DiagnosticKind::RecursiveFieldInitializer: return ReasonKind::RecursiveFieldInitializer;
    case DiagnosticKind::MissingDecreases: return ReasonKind::MissingDecreases;
    case DiagnosticKind::LambdaInCycle: return ReasonKind::LambdaInCycle;
  }
  return ReasonKind::ContractCycle;
}

std::string location(int line, int col) { return std::to_string(line) + ":" + std::to_string(col); }

std::optional<std::string> read_file(const std::string& path, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read '" << path << "'\n";
    return std::nullopt;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::variant<TypedProgram, Report> load(const std::string& source, const std::string& file, Mode mode) {
  Report failed;
  failed.file = file;
  failed.mode = mode;
  failed.input_error = true;
  CallableReport entry{"<program>", {}};

  auto parsed = parse(source, file);
  if (auto* e = std::get_if<ParseError>(&parsed)) {
    entry.reasons.push_back({ReasonKind::TypeError, "parse error: " + e->message, e->span.line, e->span.col});
    failed.callables.push_back(std::move(entry));
    return failed;
  }
  auto typed = typecheck(std::get<Program>(std::move(parsed)));
  if (auto* errors = std::get_if<std::vector<TypeError>>(&typed)) {
    for (const auto& e : *errors)
      entry.reasons.push_back({ReasonKind::TypeError, std::string(category_name(e.category)) + ": " + e.message,
                               e.span.line, e.span.col});
    failed.callables.push_back(std::move(entry));
    return failed;
  }
  return std::get<TypedProgram>(std::move(typed));
}

}  // namespace

std::string_view reason_kind_name(ReasonKind k) {
  for (const auto& [kind, name] : kReasonNames)
    if (kind == k) return name;
  return "?";
}

std::optional<ReasonKind> parse_reason_kind(std::string_view s) {
  for (const auto& [kind, name] : kReasonNames)
    if (name == s) return kind;
  return std::nullopt;
}

std::size_t Report::verified_count() const {
  return static_cast<std::size_t>(
      std::count_if(callables.begin(), callables.end(), [](const auto& c) { return c.verified(); }));
}

std::size_t Report::rejected_count() const { return callables.size() - verified_count(); }

int Report::exit_code() const {
  if (input_error) return 2;
  return rejected_count() == 0 ? 0 : 1;
}

Report verify_source(const std::string& source, const std::string& file, Mode mode, bool dump_vcs) {
  auto loaded = load(source, file, mode);
  if (auto* failed = std::get_if<Report>(&loaded)) return std::move(*failed);
  const TypedProgram& program = std::get<TypedProgram>(loaded);

  Report report;
  report.file = file;
  report.mode = mode;
  for (const auto& c : program.callables()) report.callables.push_back({c.name, {}});
  auto at = [&](CallableId id) -> CallableReport& { return report.callables.at(static_cast<std::size_t>(id)); };

  for (const auto& d : check_termination(program, mode)) {
    std::string detail = std::string(diagnostic_kind_name(d.kind));
    if (!d.cycle.empty()) detail = "cycle";
    if (!d.cycle.empty()) {
      detail += " ";
      for (CallableId c : d.cycle) detail += program.callable(c).name + " -> ";
      detail += program.callable(d.cycle.front()).name;
    }
    at(d.callable).reasons.push_back({reason_for(d.kind), detail, d.site.line, d.site.col});
  }

  std::vector<VerificationCondition> vcs;
  try {
    vcs = vcs_for_program(program, mode);
  } catch (const MalformedBlock& e) {
    report.input_error = true;
    report.callables.push_back({"<program>", {{ReasonKind::TypeError, e.what(), e.span.line, e.span.col}}});
    return report;
  } catch (const OverflowError& e) {
    report.input_error = true;
    report.callables.push_back({"<program>", {{ReasonKind::TypeError, e.what(), 0, 0}}});
    return report;
  }

  for (const auto& vc : vcs) {
    std::string what = std::string(vc_kind_name(vc.kind)) + " VC at " + location(vc.origin.line, vc.origin.col);
    if (dump_vcs) report.vc_dump.push_back(dump_vc(program, vc));
    std::optional<Reason> reason;
    try {
      SolverVerdict v = is_valid(vc.formula);
      if (auto* cex = std::get_if<Counterexample>(&v)) {
        reason = Reason{ReasonKind::VcFailed, what + " fails for " + to_string(cex->assignment), vc.origin.line,
                        vc.origin.col};
      } else if (auto* unk = std::get_if<Unknown>(&v)) {
        reason = Reason{ReasonKind::VcUnknown, what + " undecided; rational witness " + to_string(unk->rational_witness),
                        vc.origin.line, vc.origin.col};
      }
    } catch (const std::exception& e) {
      reason = Reason{ReasonKind::VcUnknown, what + ": " + e.what(), vc.origin.line, vc.origin.col};
    }
    if (reason && !vc.detail.empty()) reason->detail += " (" + vc.detail + ")";
    if (reason) at(vc.owner).reasons.push_back(std::move(*reason));
  }
  return report;
}

std::string render_report_text(const Report& r) {
  std::ostringstream os;
  os << r.file << " [" << mode_name(r.mode) << "]\n";
  std::size_t width = 0;
  for (const auto& c : r.callables) width = std::max(width, c.name.size());
  for (const auto& c : r.callables) {
    os << "  " << std::left << std::setw(static_cast<int>(width)) << c.name << "  "
       << (c.verified() ? "verified" : "rejected") << "\n";
    for (const auto& reason : c.reasons)
      os << "    " << reason_kind_name(reason.kind) << " at " << location(reason.line, reason.col) << ": "
         << reason.detail << "\n";
  }
  os << r.verified_count() << " verified, " << r.rejected_count() << " rejected\n";
  return os.str();
}

std::string render_report_json(const Report& r) {
  json j;
  j["file"] = r.file;
  j["mode"] = mode_name(r.mode);
  j["callables"] = json::array();
  for (const auto& c : r.callables) {
    json entry;
    entry["name"] = c.name;
    entry["verdict"] = c.verified() ? "verified" : "rejected";
    entry["reasons"] = json::array();
    for (const auto& reason : c.reasons)
      entry["reasons"].push_back(
          {{"kind", reason_kind_name(reason.kind)}, {"detail", reason.detail}, {"line", reason.line}, {"col", reason.col}});
    j["callables"].push_back(std::move(entry));
  }
  j["summary"] = {{"verified", r.verified_count()}, {"rejected", r.rejected_count()}};
  if (!r.vc_dump.empty()) j["vcs"] = r.vc_dump;
  return j.dump(2) + "\n";
}

int cmd_verify(const std::string& path, Mode mode, Format format, bool dump_vcs, std::ostream& out,
               std::ostream& err) {
  auto source = read_file(path, err);
  if (!source) return 2;
  Report report = verify_source(*source, path, mode, dump_vcs);
  if (format == Format::Json) {
    out << render_report_json(report);
  } else {
    for (const auto& line : report.vc_dump) out << line << "\n";
    out << render_report_text(report);
  }
  return report.exit_code();
}

namespace {

std::optional<Value> parse_value(const std::string& text) {
  if (text == "true") return Value{true};
  if (text == "false") return Value{false};
  std::int64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return Value{v};
}

}  // namespace

int cmd_run(const std::string& path, const std::string& entry, const std::vector<std::string>& args,
            std::uint64_t fuel, bool no_erase, bool check_contracts, std::ostream& out, std::ostream& err) {
  auto source = read_file(path, err);
  if (!source) return 2;
  if (fuel == 0) {
    err << "error: fuel must be positive\n";
    return 2;
  }
  std::vector<Value> values;
  for (const auto& a : args) {
    auto v = parse_value(a);
    if (!v) {
      err << "error: argument '" << a << "' is neither an integer nor a boolean\n";
      return 2;
    }
    values.push_back(*v);
  }
  auto loaded = load(*source, path, Mode::Partial);
  if (auto* failed = std::get_if<Report>(&loaded)) {
    for (const auto& reason : failed->callables.front().reasons)
      err << path << ":" << location(reason.line, reason.col) << ": " << reason.detail << "\n";
    return 2;
  }
  const TypedProgram& program = std::get<TypedProgram>(loaded);
  std::optional<TypedProgram> erased;
  if (!no_erase) {
    try {
      erased = erase(program);
    } catch (const ErasureError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }
  RunResult r = eval(erased ? *erased : program, entry, values, fuel, check_contracts);
  out << render_outcome(r.outcome) << "\n";
  out << "frames: " << r.frames << "\n";
  if (std::holds_alternative<Returned>(r.outcome)) return 0;
  if (std::holds_alternative<ContractViolation>(r.outcome)) return 1;
  if (std::holds_alternative<FuelExhausted>(r.outcome)) return 3;
  return 2;
}

int cmd_graph(const std::string& path, EdgePolicy policy, bool dot, std::ostream& out, std::ostream& err) {
  auto source = read_file(path, err);
  if (!source) return 2;
  auto loaded = load(*source, path, Mode::Sound);
  if (auto* failed = std::get_if<Report>(&loaded)) {
    for (const auto& reason : failed->callables.front().reasons)
      err << path << ":" << location(reason.line, reason.col) << ": " << reason.detail << "\n";
    return 2;
  }
  const TypedProgram& program = std::get<TypedProgram>(loaded);
  CallGraph g = build_call_graph(program, policy);
  out << (dot ? render_graph_dot(program, g) : render_graph_text(program, g));
  return 0;
}

namespace {

struct Cell {
  std::string file;
  Mode mode = Mode::Sound;
  std::string expected;
  std::optional<ReasonKind> reason_kind;
  std::map<std::string, std::string> callables;  // optional per-callable expectations
};

std::vector<Cell> parse_manifest(const std::string& text) {
  json j = json::parse(text);
  if (!j.is_array()) throw std::invalid_argument("manifest must be a JSON list");
  std::vector<Cell> cells;
  for (const auto& e : j) {
    if (!e.is_object()) throw std::invalid_argument("manifest entries must be objects");
    Cell c;
    c.file = e.at("file").get<std::string>();
    auto mode = parse_mode(e.at("mode").get<std::string>());
    if (!mode) throw std::invalid_argument("unknown mode '" + e.at("mode").get<std::string>() + "'");
    c.mode = *mode;
    c.expected = e.at("expected").get<std::string>();
    if (c.expected != "verified" && c.expected != "rejected")
      throw std::invalid_argument("expected must be 'verified' or 'rejected'");
    if (e.contains("reason_kind")) {
      auto k = parse_reason_kind(e.at("reason_kind").get<std::string>());
      if (!k) throw std::invalid_argument("unknown reason_kind '" + e.at("reason_kind").get<std::string>() + "'");
      c.reason_kind = k;
    }
    if (e.contains("callables"))
      for (const auto& [name, verdict] : e.at("callables").items()) c.callables[name] = verdict.get<std::string>();
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace

int cmd_matrix(const std::string& corpus_dir, const std::string& manifest_path, Format format, std::ostream& out,
               std::ostream& err) {
  auto text = read_file(manifest_path, err);
  if (!text) return 2;
  std::vector<Cell> cells;
  try {
    cells = parse_manifest(*text);
  } catch (const std::exception& e) {
    err << "error: bad manifest '" << manifest_path << "': " << e.what() << "\n";
    return 2;
  }

  std::vector<std::future<std::optional<Report>>> pending;
  for (const auto& cell : cells)
    pending.push_back(std::async(std::launch::async, [&corpus_dir, cell]() -> std::optional<Report> {
      std::ifstream in(std::filesystem::path(corpus_dir) / cell.file, std::ios::binary);
      if (!in) return std::nullopt;
      std::ostringstream ss;
      ss << in.rdbuf();
      return verify_source(ss.str(), cell.file, cell.mode);
    }));

  json rows = json::array();
  std::ostringstream table;
  std::vector<std::string> mismatches;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    std::optional<Report> report = pending[i].get();
    if (!report) {
      err << "error: cannot read '" << (std::filesystem::path(corpus_dir) / cell.file).string() << "'\n";
      return 2;
    }
    const Report& r = *report;
    std::string actual = r.exit_code() == 0 ? "verified" : r.exit_code() == 1 ? "rejected" : "error";

    std::set<std::string> kinds;
    for (const auto& c : r.callables)
      for (const auto& reason : c.reasons) kinds.insert(std::string(reason_kind_name(reason.kind)));
    std::vector<std::string> problems;
    if (actual != cell.expected) problems.push_back("expected " + cell.expected + ", got " + actual);
    if (cell.reason_kind && !kinds.count(std::string(reason_kind_name(*cell.reason_kind))))
      problems.push_back("missing reason " + std::string(reason_kind_name(*cell.reason_kind)));
    for (const auto& [name, verdict] : cell.callables) {
      auto it = std::find_if(r.callables.begin(), r.callables.end(), [&](const auto& c) { return c.name == name; });
      std::string got = it == r.callables.end() ? "absent" : it->verified() ? "verified" : "rejected";
      if (got != verdict) problems.push_back(name + ": expected " + verdict + ", got " + got);
    }
    bool ok = problems.empty();
    if (ok) ++matched;

    std::string kinds_text;
    for (const auto& k : kinds) kinds_text += (kinds_text.empty() ? "" : ",") + k;
    table << std::left << std::setw(20) << cell.file << std::setw(12) << mode_name(cell.mode) << std::setw(10)
          << cell.expected << std::setw(10) << actual << std::setw(66) << (kinds_text.empty() ? "-" : kinds_text)
          << (ok ? "ok" : "MISMATCH") << "\n";
    for (const auto& p : problems) mismatches.push_back(cell.file + " [" + std::string(mode_name(cell.mode)) + "]: " + p);

    json row = {{"file", cell.file},     {"mode", mode_name(cell.mode)}, {"expected", cell.expected},
                {"actual", actual},      {"reasons", kinds},              {"match", ok}};
    if (cell.reason_kind) row["reason_kind"] = reason_kind_name(*cell.reason_kind);
    rows.push_back(std::move(row));
  }

  if (format == Format::Json) {
    json j = {{"cells", rows}, {"matched", matched}, {"total", cells.size()}, {"mismatches", mismatches}};
    out << j.dump(2) << "\n";
  } else {
    out << std::left << std::setw(20) << "file" << std::setw(12) << "mode" << std::setw(10) << "expected"
        << std::setw(10) << "actual" << std::setw(66) << "reasons"
        << "match\n";
    out << table.str();
    for (const auto& m : mismatches) out << "mismatch: " << m << "\n";
    out << matched << "/" << cells.size() << " cells match\n";
  }
  return matched == cells.size() ? 0 : 1;
}

}  // namespace miniver
