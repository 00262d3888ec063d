#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "miniver/ast.hpp"

namespace miniver {

enum class TokenKind {
  Ident,
  Int,
  Keyword,
  Punct,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  SourceSpan span;
};

struct ParseError {
  SourceSpan span;
  std::string message;
};

std::string format_error(const ParseError& e);

/// Splits MiniOO source into tokens. The final token is always End.
std::variant<std::vector<Token>, ParseError> lex(std::string_view source, const std::string& file);

/// Parses a whole program. Never throws on malformed input.
std::variant<Program, ParseError> parse(std::string_view source, const std::string& file);

/// Canonical source text; re-parses to a structurally identical Program.
std::string pretty_print(const Program& program);
std::string pretty_print(const Expr& expr);
std::string pretty_print(const Type& type);

}  // namespace miniver
