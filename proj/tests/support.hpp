#pragma once

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "miniver/parser.hpp"
#include "miniver/typecheck.hpp"

namespace support {

inline std::string corpus_path(const std::string& name) {
  return (std::filesystem::path(MINIVER_CORPUS_DIR) / name).string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in, "cannot open " << path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> corpus_files() {
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(MINIVER_CORPUS_DIR))
    if (e.path().extension() == ".moo") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

inline miniver::Program parse_ok(const std::string& source, const std::string& file = "test.moo") {
  auto r = miniver::parse(source, file);
  if (auto* e = std::get_if<miniver::ParseError>(&r)) FAIL(miniver::format_error(*e));
  return std::get<miniver::Program>(std::move(r));
}

inline miniver::TypedProgram typed_ok(const std::string& source, const std::string& file = "test.moo") {
  auto r = miniver::typecheck(parse_ok(source, file));
  if (auto* errs = std::get_if<std::vector<miniver::TypeError>>(&r)) {
    std::string all;
    for (const auto& e : *errs) all += miniver::format_error(e) + "\n";
    FAIL(all);
  }
  return std::get<miniver::TypedProgram>(std::move(r));
}

inline std::vector<miniver::TypeError> type_errors(const std::string& source) {
  auto r = miniver::typecheck(parse_ok(source));
  if (auto* errs = std::get_if<std::vector<miniver::TypeError>>(&r)) return *errs;
  return {};
}

inline miniver::TypedProgram corpus(const std::string& name) {
  return typed_ok(read_file(corpus_path(name)), name);
}

inline miniver::CallableId id_of(const miniver::TypedProgram& p, std::string_view name) {
  const miniver::Callable* c = p.find(name);
  REQUIRE_MESSAGE(c != nullptr, "no callable " << name);
  return c->id;
}

}  // namespace support
