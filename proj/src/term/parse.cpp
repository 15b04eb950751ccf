#include "lexer.hpp"
#include "webtlr/canonical.hpp"
#include "webtlr/term.hpp"

namespace webtlr {

namespace {

class TermParser {
 public:
  TermParser(std::string_view text, const Signature& sig, const ParseOptions& options)
      : lex_(text), sig_(sig), options_(options) {}

  Term parse() {
    Term t = term(options_.expected_sort);
    if (lex_.peek().kind != detail::Tok::end) lex_.fail("trailing input after term");
    return t;
  }

 private:
  Term term(std::optional<SortId> expected) {
    const auto& tok = lex_.peek();
    if (tok.kind != detail::Tok::name && tok.kind != detail::Tok::string) lex_.fail("expected a term");
    detail::Token head = lex_.next();
    if (lex_.peek().kind == detail::Tok::lparen) {
      if (head.kind == detail::Tok::string) lex_.fail("string literal cannot be applied");
      auto op = sig_.find_op(head.text);
      if (!op) throw ParseError("unknown operator '" + head.text + "'", head.line, head.column);
      const auto& info = sig_.op(*op);
      lex_.next();
      std::vector<Term> args;
      if (lex_.peek().kind != detail::Tok::rparen) {
        for (;;) {
          std::optional<SortId> want;
          if (info.decl.is_ac()) {
            want = info.result;
          } else if (args.size() < info.args.size()) {
            want = info.args[args.size()];
          }
          args.push_back(term(want));
          if (lex_.peek().kind == detail::Tok::comma) {
            lex_.next();
            continue;
          }
          break;
        }
      }
      lex_.expect(detail::Tok::rparen, "')'");
      try {
        return Term::make(sig_, *op, std::move(args));
      } catch (const SortError& e) {
        throw SortError(std::string(e.what()) + " (at " + std::to_string(head.line) + ":" +
                        std::to_string(head.column) + ")");
      }
    }
    return leaf(head, expected);
  }

  Term leaf(const detail::Token& tok, std::optional<SortId> expected) {
    if (tok.kind == detail::Tok::name) {
      if (auto it = options_.variables.find(tok.text); it != options_.variables.end()) {
        if (expected && *expected != it->second) {
          throw SortError("variable " + tok.text + " has sort " + sig_.sort_name(it->second) + ", expected " +
                          sig_.sort_name(*expected));
        }
        return Term::variable(sig_, tok.text, it->second);
      }
      if (auto op = sig_.find_op(tok.text); op && !sig_.op(*op).literal) {
        return Term::make(sig_, *op, {});
      }
    }
    if (expected && sig_.is_literal_sort(*expected)) return Term::literal(sig_, *expected, tok.text);
    if (!expected && tok.kind == detail::Tok::string) {
      if (auto s = sig_.find_sort("Str"); s && sig_.is_literal_sort(*s)) return Term::literal(sig_, *s, tok.text);
    }
    throw ParseError("unknown symbol '" + tok.text + "'", tok.line, tok.column);
  }

  detail::TermLexer lex_;
  const Signature& sig_;
  const ParseOptions& options_;
};

}  // namespace

Term parse_term(std::string_view text, const Signature& sig, const ParseOptions& options) {
  Term t = TermParser(text, sig, options).parse();
  return options.canonicalize ? flatten(sig, t) : t;
}

}  // namespace webtlr
