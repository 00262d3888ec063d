#include <CLI11.hpp>
#include <iostream>

#include "miniver/commands.hpp"

int main(int argc, char** argv) {
  using namespace miniver;
  CLI::App app{"miniver: verifier and interpreter for MiniOO"};
  app.require_subcommand(1);

  const std::map<std::string, Mode> modes{{"partial", Mode::Partial},
                                          {"self-check", Mode::SelfCheck},
                                          {"callgraph", Mode::CallGraph},
                                          {"sound", Mode::Sound}};
  const std::map<std::string, Format> formats{{"text", Format::Text}, {"json", Format::Json}};

  std::string file;
  Mode mode = Mode::Sound;
  Format format = Format::Text;
  bool dump_vcs = false;
  auto* verify = app.add_subcommand("verify", "verify every callable of a program");
  verify->add_option("file", file, "MiniOO source")->required();
  verify->add_option("--mode", mode, "termination policy")->transform(CLI::CheckedTransformer(modes));
  verify->add_option("--format", format, "output format")->transform(CLI::CheckedTransformer(formats));
  verify->add_flag("--dump-vcs", dump_vcs, "print each verification condition");

  std::string entry;
  std::vector<std::string> args;
  std::uint64_t fuel = 1000000;
  bool no_erase = false;
  bool check_contracts = false;
  auto* run = app.add_subcommand("run", "execute a function");
  run->add_option("file", file, "MiniOO source")->required();
  run->add_option("--entry", entry, "function to call")->required();
  run->add_option("--arg", args, "argument (integer, true or false); repeatable")->allow_extra_args(false);
  run->add_option("--fuel", fuel, "maximum number of call frames");
  run->add_flag("--no-erase", no_erase, "keep ghost code");
  run->add_flag("--check-contracts", check_contracts, "check the entry function's contract");

  bool overapprox = false;
  bool dot = false;
  auto* graph = app.add_subcommand("graph", "print the call graph");
  graph->add_option("file", file, "MiniOO source")->required();
  graph->add_flag("--overapprox", overapprox, "add edges for function values and field initializers");
  graph->add_flag("--dot", dot, "emit Graphviz DOT");

  std::string dir;
  std::string manifest;
  auto* matrix = app.add_subcommand("matrix", "check a corpus against an expected-verdict manifest");
  matrix->add_option("dir", dir, "corpus directory")->required();
  matrix->add_option("--manifest", manifest, "manifest JSON")->required();
  matrix->add_option("--format", format, "output format")->transform(CLI::CheckedTransformer(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*verify) return cmd_verify(file, mode, format, dump_vcs, std::cout, std::cerr);
  if (*run) return cmd_run(file, entry, args, fuel, no_erase, check_contracts, std::cout, std::cerr);
  if (*graph)
    return cmd_graph(file, overapprox ? EdgePolicy::Overapprox : EdgePolicy::FirstOrder, dot, std::cout, std::cerr);
  return cmd_matrix(dir, manifest, format, std::cout, std::cerr);
}
