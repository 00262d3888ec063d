#include <stdexcept>

#include "miniver/parser.hpp"

namespace miniver {

namespace {

constexpr int kMaxNesting = 200;

struct ParseFailure {
  ParseError error;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program program(const std::string& file) {
    Program p;
    p.file = file;
    while (!at_end()) p.decls.push_back(decl());
    return p;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxNesting) p.fail("nesting too deep");
    }
    ~DepthGuard() { --p.depth_; }
  };

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at_end() const { return peek().kind == TokenKind::End; }
  bool check(std::string_view text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return (t.kind == TokenKind::Punct || t.kind == TokenKind::Keyword) && t.text == text;
  }
  bool check_ident(std::size_t ahead = 0) const { return peek(ahead).kind == TokenKind::Ident; }
  bool accept(std::string_view text) {
    if (!check(text)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw ParseFailure{ParseError{t.span, "expected " + expected + ", found " + found}};
  }

  const Token& expect(std::string_view text) {
    if (!check(text)) fail("'" + std::string(text) + "'");
    return toks_[pos_++];
  }
  std::string ident(const std::string& what = "identifier") {
    if (!check_ident()) fail(what);
    return toks_[pos_++].text;
  }

  SourceSpan span_from(const SourceSpan& start) const {
    SourceSpan s = start;
    std::size_t last = pos_ == 0 ? 0 : pos_ - 1;
    s.end = std::max(start.start, toks_[last].span.end);
    return s;
  }

  Decl decl() {
    if (check("func")) return function(/*abstract=*/false, "");
    if (check("trait")) return trait();
    if (check("class")) return class_decl();
    fail("'func', 'trait' or 'class'");
  }

  std::vector<Param> params() {
    std::vector<Param> out;
    if (check(")")) return out;
    do {
      if (!check_ident()) fail("parameter or ')'");
      SourceSpan s = peek().span;
      std::string name = ident();
      expect(":");
      Type t = type();
      out.push_back({std::move(name), std::move(t), span_from(s)});
    } while (accept(","));
    return out;
  }

  FunctionDecl function(bool abstract, const std::string& owner) {
    SourceSpan s = expect("func").span;
    FunctionDecl f;
    f.owner = owner;
    f.name = ident("function name");
    expect("(");
    f.params = params();
    expect(")");
    if (abstract || check("->")) {
      expect("->");
      f.return_type = type();
    }
    while (true) {
      if (accept("requires")) {
        f.preconditions.push_back(expr());
      } else if (accept("ensures")) {
        f.postconditions.push_back(expr());
      } else if (check("decreases")) {
        if (f.decreases) fail("at most one decreases clause");
        ++pos_;
        f.decreases = expr();
      } else {
        break;
      }
    }
    if (abstract) {
      expect(";");
    } else {
      f.body = block();
    }
    f.span = span_from(s);
    return f;
  }

  TraitDecl trait() {
    SourceSpan s = expect("trait").span;
    TraitDecl t;
    t.name = ident("trait name");
    expect("{");
    while (!check("}")) {
      if (!check("func")) fail("'func' or '}'");
      t.methods.push_back(function(/*abstract=*/true, t.name));
    }
    expect("}");
    t.span = span_from(s);
    return t;
  }

  ClassDecl class_decl() {
    SourceSpan s = expect("class").span;
    ClassDecl c;
    c.name = ident("class name");
    if (accept("implements")) c.implements = ident("trait name");
    expect("{");
    while (check("const")) {
      SourceSpan fs = peek().span;
      ++pos_;
      FieldDecl f;
      f.name = ident("field name");
      expect(":");
      f.type = type();
      if (accept(":=")) f.init = expr();
      expect(";");
      f.span = span_from(fs);
      c.fields.push_back(std::move(f));
    }
    if (check("constructor")) {
      SourceSpan cs = peek().span;
      ++pos_;
      ConstructorDecl ctor;
      expect("(");
      ctor.params = params();
      expect(")");
      ctor.body = block();
      ctor.span = span_from(cs);
      c.ctor = std::move(ctor);
    }
    while (check("func")) c.methods.push_back(function(/*abstract=*/false, c.name));
    if (!check("}")) fail(c.ctor ? "'func' or '}'" : "'const', 'constructor', 'func' or '}'");
    ++pos_;
    c.span = span_from(s);
    return c;
  }

  Type type() {
    DepthGuard guard(*this);
    SourceSpan s = peek().span;
    Type t;
    if (accept("int")) {
      t = Type::integer();
    } else if (accept("bool")) {
      t = Type::boolean();
    } else if (check_ident()) {
      t = Type::named(ident());
    } else if (accept("(")) {
      std::vector<Type> ps;
      if (!check(")")) {
        do {
          ps.push_back(type());
        } while (accept(","));
      }
      expect(")");
      expect("->");
      Type r = type();
      t = Type::arrow(std::move(ps), std::move(r));
    } else {
      fail("type");
    }
    t.span = span_from(s);
    return t;
  }

  Block block() {
    DepthGuard guard(*this);
    expect("{");
    Block b;
    while (!check("}")) {
      if (at_end()) fail("statement or '}'");
      b.push_back(statement());
    }
    expect("}");
    return b;
  }

  Stmt statement() {
    SourceSpan s = peek().span;
    Stmt st;
    if (check("ghost") || check("var")) {
      st.kind = StmtKind::VarDecl;
      st.ghost = accept("ghost");
      expect("var");
      st.name = ident("variable name");
      expect(":=");
      st.value = expr();
      expect(";");
    } else if (check("this") && check(".", 1) && check_ident(2) && check(":=", 3)) {
      st.kind = StmtKind::FieldAssign;
      pos_ += 2;
      st.name = ident();
      expect(":=");
      st.value = expr();
      expect(";");
    } else if (accept("return")) {
      st.kind = StmtKind::Return;
      if (!check(";")) st.value = expr();
      expect(";");
    } else if (accept("if")) {
      st.kind = StmtKind::If;
      st.value = expr();
      st.then_body = block();
      if (accept("else")) {
        st.has_else = true;
        st.else_body = block();
      }
    } else {
      st.kind = StmtKind::ExprStmt;
      st.value = expr();
      expect(";");
    }
    st.span = span_from(s);
    return st;
  }

  static int binary_precedence(const Token& t, BinaryOp& op) {
    if (t.kind != TokenKind::Punct) return -1;
    const std::string& s = t.text;
    if (s == "==>") return op = BinaryOp::Implies, 1;
    if (s == "||") return op = BinaryOp::Or, 2;
    if (s == "&&") return op = BinaryOp::And, 3;
    if (s == "==") return op = BinaryOp::Eq, 4;
    if (s == "!=") return op = BinaryOp::Ne, 4;
    if (s == "<") return op = BinaryOp::Lt, 4;
    if (s == "<=") return op = BinaryOp::Le, 4;
    if (s == ">") return op = BinaryOp::Gt, 4;
    if (s == ">=") return op = BinaryOp::Ge, 4;
    if (s == "+") return op = BinaryOp::Add, 5;
    if (s == "-") return op = BinaryOp::Sub, 5;
    if (s == "*") return op = BinaryOp::Mul, 6;
    return -1;
  }

 public:
  Expr expr(int min_prec = 1) {
    DepthGuard guard(*this);
    SourceSpan s = peek().span;
    Expr lhs = unary();
    while (true) {
      BinaryOp op{};
      int prec = binary_precedence(peek(), op);
      if (prec < min_prec) break;
      ++pos_;
      // "==>" is right-associative, everything else left-associative.
      Expr rhs = expr(op == BinaryOp::Implies ? prec : prec + 1);
      lhs = make_binary(op, std::move(lhs), std::move(rhs), span_from(s));
    }
    return lhs;
  }

 private:
  Expr unary() {
    DepthGuard guard(*this);
    SourceSpan s = peek().span;
    if (accept("!")) return make_unary(UnaryOp::Not, unary(), span_from(s));
    if (accept("-")) return make_unary(UnaryOp::Neg, unary(), span_from(s));
    return postfix();
  }

  std::vector<Expr> args() {
    std::vector<Expr> out;
    expect("(");
    if (!check(")")) {
      do {
        out.push_back(expr());
      } while (accept(","));
    }
    expect(")");
    return out;
  }

  Expr postfix() {
    SourceSpan s = peek().span;
    bool plain_ident = check_ident() && check("(", 1);
    Expr e;
    if (plain_ident) {
      e.kind = ExprKind::Call;
      e.name = ident();
      e.operands = args();
      e.span = span_from(s);
    } else {
      e = primary();
    }
    while (true) {
      if (accept(".")) {
        std::string member = ident("member name");
        Expr next;
        next.operands.push_back(std::move(e));
        next.name = std::move(member);
        if (check("(")) {
          next.kind = ExprKind::MethodCall;
          for (auto& a : args()) next.operands.push_back(std::move(a));
        } else {
          next.kind = ExprKind::FieldAccess;
        }
        next.span = span_from(s);
        e = std::move(next);
      } else if (check("(")) {
        Expr next;
        next.kind = ExprKind::Invoke;
        next.operands.push_back(std::move(e));
        for (auto& a : args()) next.operands.push_back(std::move(a));
        next.span = span_from(s);
        e = std::move(next);
      } else {
        break;
      }
    }
    return e;
  }

  bool at_lambda() const {
    if (!check("(")) return false;
    if (check(")", 1)) return check("=>", 2);
    return check_ident(1) && check(":", 2);
  }

  Expr primary() {
    DepthGuard guard(*this);
    SourceSpan s = peek().span;
    const Token& t = peek();
    Expr e;
    if (t.kind == TokenKind::Int) {
      ++pos_;
      e = make_int(std::stoll(t.text));
    } else if (accept("true")) {
      e = make_bool(true);
    } else if (accept("false")) {
      e = make_bool(false);
    } else if (accept("result")) {
      e.kind = ExprKind::Result;
    } else if (accept("this")) {
      e.kind = ExprKind::This;
    } else if (check_ident()) {
      e = make_var(ident());
    } else if (accept("new")) {
      e.kind = ExprKind::New;
      e.name = ident("class name");
      e.operands = args();
    } else if (at_lambda()) {
      ++pos_;
      e.kind = ExprKind::Lambda;
      e.params = params();
      expect(")");
      expect("=>");
      e.operands.push_back(expr());
    } else if (accept("(")) {
      e = expr();
      expect(")");
      return e;
    } else {
      fail("expression");
    }
    e.span = span_from(s);
    return e;
  }
};

}  // namespace

std::variant<Program, ParseError> parse(std::string_view source, const std::string& file) {
  auto lexed = lex(source, file);
  if (auto* err = std::get_if<ParseError>(&lexed)) return *err;
  Parser parser(std::move(std::get<std::vector<Token>>(lexed)));
  try {
    return parser.program(file);
  } catch (const ParseFailure& f) {
    return f.error;
  }
}

}  // namespace miniver
