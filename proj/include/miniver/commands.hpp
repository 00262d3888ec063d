#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "miniver/callgraph.hpp"

namespace miniver {

enum class ReasonKind {
  VcFailed,
  VcUnknown,
  SelfContractUse,
  ContractCycle,
  RecursiveFieldInitializer,
  MissingDecreases,
  LambdaInCycle,
  TypeError,
};

std::string_view reason_kind_name(ReasonKind k);
std::optional<ReasonKind> parse_reason_kind(std::string_view s);

struct Reason {
  ReasonKind kind;
  std::string detail;
  int line = 0;
  int col = 0;
};

struct CallableReport {
  std::string name;
  std::vector<Reason> reasons;
  bool verified() const { return reasons.empty(); }
};

struct Report {
  std::string file;
  Mode mode = Mode::Sound;
  bool input_error = false;  // parse or type error
  std::vector<CallableReport> callables;
  std::vector<std::string> vc_dump;

  std::size_t verified_count() const;
  std::size_t rejected_count() const;
  /// 0 when every callable verified, 1 on any rejection, 2 on input errors.
  int exit_code() const;
};

/// parse -> typecheck -> termination check -> VC generation -> solver.
Report verify_source(const std::string& source, const std::string& file, Mode mode, bool dump_vcs = false);

std::string render_report_text(const Report& r);
std::string render_report_json(const Report& r);

enum class Format { Text, Json };

int cmd_verify(const std::string& path, Mode mode, Format format, bool dump_vcs, std::ostream& out,
               std::ostream& err);
int cmd_run(const std::string& path, const std::string& entry, const std::vector<std::string>& args,
            std::uint64_t fuel, bool no_erase, bool check_contracts, std::ostream& out, std::ostream& err);
int cmd_graph(const std::string& path, EdgePolicy policy, bool dot, std::ostream& out, std::ostream& err);
int cmd_matrix(const std::string& corpus_dir, const std::string& manifest_path, Format format, std::ostream& out,
               std::ostream& err);

}  // namespace miniver
