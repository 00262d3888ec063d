#include <array>
#include <charconv>

#include "miniver/parser.hpp"

namespace miniver {

namespace {

constexpr std::array<std::string_view, 21> kKeywords = {
    "func",  "trait", "class", "implements", "const", "constructor", "requires",
    "ensures", "decreases", "ghost", "var", "this", "return", "if",
    "else", "true", "false", "result", "new", "int", "bool"};

// Longest first so that maximal munch picks "==>" over "==".
constexpr std::array<std::string_view, 24> kPuncts = {
    "==>", ":=", "->", "=>", "==", "!=", "<=", ">=", "&&", "||", "(", ")",
    "{",   "}",  ",",  ";",  ":",  ".",  "+",  "-",  "*",  "<",  ">", "!"};

bool is_ident_start(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

// Length of a valid UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_length(std::string_view s, std::size_t i) {
  auto c = static_cast<unsigned char>(s[i]);
  std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
  if (n == 0 || i + n > s.size()) return 0;
  for (std::size_t k = 1; k < n; ++k)
    if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return 0;
  return n;
}

}  // namespace

std::string format_error(const ParseError& e) { return format_location(e.span) + ": " + e.message; }

std::variant<std::vector<Token>, ParseError> lex(std::string_view src, const std::string& file) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;

  auto span_at = [&](std::size_t start, std::size_t end, int l, int c) {
    return SourceSpan{file, start, end, l, c};
  };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };

  while (i < src.size()) {
    unsigned char c = static_cast<unsigned char>(src[i]);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') {
        std::size_t n = utf8_length(src, i);
        if (n == 0) return ParseError{span_at(i, i + 1, line, col), "invalid UTF-8 in comment"};
        advance(n);
      }
      continue;
    }
    std::size_t start = i;
    int l = line;
    int cl = col;
    if (is_ident_start(c)) {
      while (i < src.size() && is_ident_char(static_cast<unsigned char>(src[i]))) advance(1);
      std::string text(src.substr(start, i - start));
      bool kw = false;
      for (auto k : kKeywords) kw = kw || k == text;
      out.push_back({kw ? TokenKind::Keyword : TokenKind::Ident, std::move(text), span_at(start, i, l, cl)});
      continue;
    }
    if (c >= '0' && c <= '9') {
      while (i < src.size() && src[i] >= '0' && src[i] <= '9') advance(1);
      if (i < src.size() && is_ident_start(static_cast<unsigned char>(src[i])))
        return ParseError{span_at(start, i + 1, l, cl), "malformed integer literal"};
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(src.data() + start, src.data() + i, value);
      if (ec != std::errc{}) return ParseError{span_at(start, i, l, cl), "integer literal out of range"};
      out.push_back({TokenKind::Int, std::string(src.substr(start, i - start)), span_at(start, i, l, cl)});
      continue;
    }
    bool matched = false;
    for (auto p : kPuncts) {
      if (src.substr(i).starts_with(p)) {
        advance(p.size());
        out.push_back({TokenKind::Punct, std::string(p), span_at(start, i, l, cl)});
        matched = true;
        break;
      }
    }
    if (matched) continue;
    std::string shown = c >= 0x20 && c < 0x7f ? std::string(1, static_cast<char>(c)) : "byte " + std::to_string(c);
    return ParseError{span_at(start, start + 1, l, cl), "unexpected character '" + shown + "'"};
  }
  out.push_back({TokenKind::End, "", span_at(i, i, line, col)});
  return out;
}

}  // namespace miniver
