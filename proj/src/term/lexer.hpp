// Tokenizer shared by the term and filter-pattern parsers.
#pragma once

#include <string>
#include <string_view>

#include "webtlr/term.hpp"

namespace webtlr::detail {

enum class Tok { name, string, lparen, rparen, comma, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
};

class TermLexer {
 public:
  explicit TermLexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }
  Token next() {
    Token t = current_;
    advance();
    return t;
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, current_.line, current_.column);
  }
  void expect(Tok kind, const char* what) {
    if (current_.kind != kind) fail(std::string("expected ") + what);
    advance();
  }

 private:
  void advance() {
    while (pos_ < text_.size() && is_space(text_[pos_])) bump();
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    switch (c) {
      case '(':
        current_.kind = Tok::lparen;
        bump();
        return;
      case ')':
        current_.kind = Tok::rparen;
        bump();
        return;
      case ',':
        current_.kind = Tok::comma;
        bump();
        return;
      case '"': {
        current_.kind = Tok::string;
        std::string s(1, '"');
        bump();
        while (pos_ < text_.size() && text_[pos_] != '"') {
          if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
            s += text_[pos_];
            bump();
          }
          s += text_[pos_];
          bump();
        }
        if (pos_ >= text_.size()) throw ParseError("unterminated string", current_.line, current_.column);
        s += '"';
        bump();
        current_.text = std::move(s);
        return;
      }
      default:
        break;
    }
    current_.kind = Tok::name;
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')' &&
           text_[pos_] != ',' && text_[pos_] != '"') {
      bump();
    }
    current_.text = std::string(text_.substr(start, pos_ - start));
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
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
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

}  // namespace webtlr::detail
