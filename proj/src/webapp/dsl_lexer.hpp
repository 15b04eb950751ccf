// Tokenizer for the navigation DSL and the script surface syntax.
#pragma once

#include <string>
#include <string_view>

#include "webtlr/term.hpp"

namespace webtlr::web::detail {

enum class Tok {
  name,     // identifiers, may contain '-' and '.'
  qname,    // 'x (text without the quote)
  string,   // "..." (text unescaped)
  lbrace,
  rbrace,
  lparen,
  rparen,
  lbrack,
  rbrack,
  semi,
  comma,
  eq,       // =
  neq,      // !=
  assign,   // :=
  cont,     // =>
  link,     // ->
  query,    // ?
  concat,   // '.
  end
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }
  Token next() {
    Token t = current_;
    advance();
    return t;
  }
  bool at(Tok k) const { return current_.kind == k; }
  bool at_word(std::string_view w) const { return current_.kind == Tok::name && current_.text == w; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    advance();
    return true;
  }
  bool accept_word(std::string_view w) {
    if (!at_word(w)) return false;
    advance();
    return true;
  }
  [[noreturn]] void fail(const std::string& message) const {
    std::string found = current_.kind == Tok::end ? "end of input" : "'" + current_.text + "'";
    throw ParseError(message + ", found " + found, current_.line, current_.column);
  }
  Token expect(Tok k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what);
    return next();
  }
  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("expected '" + std::string(w) + "'");
    advance();
  }
  // Raw source text up to (not including) the next `stop` character.
  std::string raw_until(char stop) {
    std::size_t start = token_start_;
    std::size_t p = start;
    while (p < text_.size() && text_[p] != stop) ++p;
    std::string out(text_.substr(start, p - start));
    while (pos_ < p) bump();
    advance();
    return out;
  }

 private:
  static bool name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.' || c == '#' || c == '%';
  }

  void skip_blank() {
    for (;;) {
      while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                     text_[pos_] == '\r')) {
        bump();
      }
      if (text_.substr(pos_, 3) == "---" || text_.substr(pos_, 2) == "//") {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
        continue;
      }
      return;
    }
  }

  void advance() {
    skip_blank();
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    token_start_ = pos_;
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    auto single = [&](Tok k) {
      current_.kind = k;
      current_.text = std::string(1, c);
      bump();
    };
    auto two = [&](Tok k) {
      current_.kind = k;
      current_.text = std::string(text_.substr(pos_, 2));
      bump();
      bump();
    };
    const char n = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
    switch (c) {
      case '{': return single(Tok::lbrace);
      case '}': return single(Tok::rbrace);
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case '[': return single(Tok::lbrack);
      case ']': return single(Tok::rbrack);
      case ';': return single(Tok::semi);
      case ',': return single(Tok::comma);
      case '?': return single(Tok::query);
      case '=':
        if (n == '>') return two(Tok::cont);
        return single(Tok::eq);
      case '!':
        if (n == '=') return two(Tok::neq);
        break;
      case ':':
        if (n == '=') return two(Tok::assign);
        break;
      case '-':
        if (n == '>') return two(Tok::link);
        break;
      case '\'':
        if (n == '.') return two(Tok::concat);
        if (name_char(n)) {
          bump();
          current_.kind = Tok::qname;
          current_.text = read_name();
          return;
        }
        break;
      case '"': {
        current_.kind = Tok::string;
        bump();
        std::string s;
        while (pos_ < text_.size() && text_[pos_] != '"') {
          if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) bump();
          s += text_[pos_];
          bump();
        }
        if (pos_ >= text_.size()) throw ParseError("unterminated string", current_.line, current_.column);
        bump();
        current_.text = std::move(s);
        return;
      }
      default:
        if (name_char(c)) {
          current_.kind = Tok::name;
          current_.text = read_name();
          return;
        }
        break;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && name_char(text_[pos_])) {
      if (text_[pos_] == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') break;
      if (text_.substr(pos_, 3) == "---") break;
      bump();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t token_start_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

// Statement sequence up to (not including) `}`, `else` or `fi`.
Term parse_statements(Lexer& lex);

}  // namespace webtlr::web::detail
