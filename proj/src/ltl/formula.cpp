#include <set>

#include "webtlr/ltl.hpp"

namespace webtlr::ltl {

namespace {

enum class Tok { name, always, eventually, next, neg, until, conj, disj, implies, lparen, rparen, comma, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
};

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '#';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return cur_; }
  bool at(Tok k) const { return cur_.kind == k; }
  Token next() {
    Token t = cur_;
    advance();
    return t;
  }
  [[noreturn]] void fail(const std::string& message) const {
    std::string found = cur_.kind == Tok::end ? "end of input" : "'" + cur_.text + "'";
    throw ParseError(message + ", found " + found, cur_.line, cur_.column);
  }
  void expect(Tok k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what);
    advance();
  }

 private:
  bool starts(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }
  void bump(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i, ++pos_) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
        ++column_;
      }
    }
  }
  bool symbol(std::string_view s, Tok k) {
    if (!starts(s)) return false;
    cur_.kind = k;
    cur_.text = std::string(s);
    bump(s.size());
    return true;
  }
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) bump(1);
    cur_ = Token{};
    cur_.line = line_;
    cur_.column = column_;
    if (pos_ >= text_.size()) return;
    static const std::pair<std::string_view, Tok> symbols[] = {
        {"[]", Tok::always},   {"<>", Tok::eventually}, {"->", Tok::implies}, {"/\\", Tok::conj},
        {"\\/", Tok::disj},    {"~", Tok::neg},         {"!", Tok::neg},      {"(", Tok::lparen},
        {")", Tok::rparen},    {",", Tok::comma},       {"□", Tok::always},   {"◇", Tok::eventually},
        {"○", Tok::next},      {"¬", Tok::neg},         {"∧", Tok::conj},     {"∨", Tok::disj},
        {"→", Tok::implies}};
    for (const auto& [s, k] : symbols) {
      if (symbol(s, k)) return;
    }
    if (!name_char(text_[pos_])) {
      cur_.text = std::string(1, text_[pos_]);
      fail("unexpected character");
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && name_char(text_[pos_]) && !starts("->")) bump(1);
    cur_.text = std::string(text_.substr(start, pos_ - start));
    cur_.kind = cur_.text == "U" ? Tok::until : cur_.text == "O" ? Tok::next : Tok::name;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token cur_;
};

class Parser {
 public:
  Parser(std::string_view text, const AtomResolver& resolve) : lex_(text), resolve_(resolve) {}

  Formula parse() {
    Formula f = implication();
    if (!lex_.at(Tok::end)) lex_.fail("expected end of formula");
    return f;
  }

 private:
  Formula implication() {
    Formula lhs = disjunction();
    if (lex_.at(Tok::implies)) {
      lex_.next();
      return Formula::make(Op::implies, {lhs, implication()});
    }
    return lhs;
  }
  Formula disjunction() {
    Formula f = conjunction();
    while (lex_.at(Tok::disj)) {
      lex_.next();
      f = Formula::make(Op::disj, {f, conjunction()});
    }
    return f;
  }
  Formula conjunction() {
    Formula f = until();
    while (lex_.at(Tok::conj)) {
      lex_.next();
      f = Formula::make(Op::conj, {f, until()});
    }
    return f;
  }
  Formula until() {
    Formula lhs = unary();
    if (lex_.at(Tok::until)) {
      lex_.next();
      return Formula::make(Op::until, {lhs, until()});
    }
    return lhs;
  }
  Formula unary() {
    switch (lex_.peek().kind) {
      case Tok::always:
        lex_.next();
        return Formula::make(Op::always, {unary()});
      case Tok::eventually:
        lex_.next();
        return Formula::make(Op::until, {Formula::make(Op::tt), unary()});
      case Tok::next:
        lex_.next();
        return Formula::make(Op::next, {unary()});
      case Tok::neg:
        lex_.next();
        return Formula::make(Op::neg, {unary()});
      case Tok::lparen: {
        lex_.next();
        Formula f = implication();
        lex_.expect(Tok::rparen, "')'");
        return f;
      }
      case Tok::name:
        return atom();
      default:
        lex_.fail("expected a formula");
    }
  }
  Formula atom() {
    Token name = lex_.next();
    if (name.text == "true") return Formula::make(Op::tt);
    if (name.text == "false") return Formula::make(Op::ff);
    Atom a;
    a.name = name.text;
    if (lex_.at(Tok::lparen)) {
      lex_.next();
      if (!lex_.at(Tok::rparen)) {
        while (true) {
          if (!lex_.at(Tok::name)) lex_.fail("expected a predicate argument");
          a.args.push_back(lex_.next().text);
          if (lex_.at(Tok::rparen)) break;
          lex_.expect(Tok::comma, "',' or ')'");
        }
      }
      lex_.next();
    }
    if (resolve_) {
      auto kind = resolve_(a.name, a.args.size());
      if (!kind) {
        throw Error("unknown predicate '" + a.name + "/" + std::to_string(a.args.size()) + "' at " +
                    std::to_string(name.line) + ":" + std::to_string(name.column));
      }
      a.kind = *kind;
    }
    return Formula::of(std::move(a));
  }

  Lexer lex_;
  const AtomResolver& resolve_;
};

Formula negate(const Formula& f) { return nnf(Formula::make(Op::neg, {f})); }

void collect_atoms(const Formula& f, std::set<Atom>& out) {
  if (f.op == Op::atom) out.insert(f.atom);
  for (const auto& a : f.args) collect_atoms(a, out);
}

}  // namespace

std::string Atom::str() const {
  if (args.empty()) return name;
  std::string out = name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? "," : "") + args[i];
  return out + ")";
}

Formula Formula::make(Op op, std::vector<Formula> args) {
  Formula f;
  f.op = op;
  f.args = std::move(args);
  return f;
}

Formula Formula::of(Atom a) {
  Formula f;
  f.op = Op::atom;
  f.atom = std::move(a);
  return f;
}

std::string Formula::str() const {
  auto bin = [&](const char* s) { return "(" + args[0].str() + " " + s + " " + args[1].str() + ")"; };
  switch (op) {
    case Op::tt:
      return "true";
    case Op::ff:
      return "false";
    case Op::atom:
      return atom.str();
    case Op::neg:
      return "~ " + args[0].str();
    case Op::next:
      return "O " + args[0].str();
    case Op::always:
      return "[] " + args[0].str();
    case Op::conj:
      return bin("/\\");
    case Op::disj:
      return bin("\\/");
    case Op::implies:
      return bin("->");
    case Op::until:
      return bin("U");
    case Op::release:
      return bin("R");
  }
  return "?";
}

std::string Formula::tree() const {
  auto un = [&](const char* s) { return std::string(s) + "(" + args[0].tree() + ")"; };
  auto bin = [&](const char* s) { return std::string(s) + "(" + args[0].tree() + ", " + args[1].tree() + ")"; };
  switch (op) {
    case Op::tt:
      return "true";
    case Op::ff:
      return "false";
    case Op::atom:
      return atom.str();
    case Op::neg:
      return un("¬");
    case Op::next:
      return un("○");
    case Op::always:
      return un("□");
    case Op::conj:
      return bin("∧");
    case Op::disj:
      return bin("∨");
    case Op::implies:
      return bin("→");
    case Op::until:
      return bin("U");
    case Op::release:
      return bin("R");
  }
  return "?";
}

Formula parse_formula(std::string_view text, const AtomResolver& resolve) { return Parser(text, resolve).parse(); }

Formula nnf(const Formula& f) {
  const auto& a = f.args;
  switch (f.op) {
    case Op::tt:
    case Op::ff:
    case Op::atom:
      return f;
    case Op::conj:
    case Op::disj:
    case Op::until:
    case Op::release:
      return Formula::make(f.op, {nnf(a[0]), nnf(a[1])});
    case Op::next:
      return Formula::make(Op::next, {nnf(a[0])});
    case Op::implies:
      return Formula::make(Op::disj, {negate(a[0]), nnf(a[1])});
    case Op::always:
      return Formula::make(Op::release, {Formula::make(Op::ff), nnf(a[0])});
    case Op::neg:
      break;
  }
  const Formula& g = a[0];
  const auto& b = g.args;
  switch (g.op) {
    case Op::tt:
      return Formula::make(Op::ff);
    case Op::ff:
      return Formula::make(Op::tt);
    case Op::atom:
      return f;
    case Op::neg:
      return nnf(b[0]);
    case Op::conj:
      return Formula::make(Op::disj, {negate(b[0]), negate(b[1])});
    case Op::disj:
      return Formula::make(Op::conj, {negate(b[0]), negate(b[1])});
    case Op::implies:
      return Formula::make(Op::conj, {nnf(b[0]), negate(b[1])});
    case Op::next:
      return Formula::make(Op::next, {negate(b[0])});
    case Op::always:
      return Formula::make(Op::until, {Formula::make(Op::tt), negate(b[0])});
    case Op::until:
      return Formula::make(Op::release, {negate(b[0]), negate(b[1])});
    case Op::release:
      return Formula::make(Op::until, {negate(b[0]), negate(b[1])});
  }
  return f;
}

std::vector<Atom> atoms_of(const Formula& f) {
  std::set<Atom> s;
  collect_atoms(f, s);
  return {s.begin(), s.end()};
}

}  // namespace webtlr::ltl
