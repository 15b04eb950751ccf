#include <optional>

#include "webapp/dsl_lexer.hpp"
#include "webapp/internal.hpp"

namespace webtlr::web {

namespace detail {

namespace {

Term var_term(const std::string& name) { return id_term("Var", "'" + name); }

Term parse_expr(Lexer& lex);

Term parse_atom(Lexer& lex) {
  if (lex.at(Tok::string)) return op("lit", {str_term(lex.next().text)});
  if (lex.at(Tok::qname)) return op("ref", {var_term(lex.next().text)});
  if (lex.accept(Tok::lparen)) {
    Term e = parse_expr(lex);
    lex.expect(Tok::rparen, "')'");
    return e;
  }
  if (lex.accept_word("null")) return Term::constant(web_signature(), "null");
  for (const char* read : {"getSession", "selectDB", "getQuery"}) {
    if (!lex.accept_word(read)) continue;
    lex.expect(Tok::lparen, "'('");
    Term arg;
    // getQuery('k) names the query key directly.
    if (std::string_view(read) == "getQuery" && lex.at(Tok::qname)) {
      arg = op("lit", {str_term(lex.next().text)});
    } else {
      arg = parse_expr(lex);
    }
    lex.expect(Tok::rparen, "')'");
    return op(read, {arg});
  }
  lex.fail("expected an expression");
}

Term parse_concat(Lexer& lex) {
  Term e = parse_atom(lex);
  while (lex.accept(Tok::concat)) e = op("cat", {e, parse_atom(lex)});
  return e;
}

Term parse_expr(Lexer& lex) {
  Term e = parse_concat(lex);
  if (lex.accept(Tok::eq)) return op("eq", {e, parse_concat(lex)});
  if (lex.accept(Tok::neq)) return op("neq", {e, parse_concat(lex)});
  return e;
}

Term parse_statement(Lexer& lex) {
  if (lex.accept_word("skip")) return Term::constant(web_signature(), "skip");
  for (const char* write : {"setSession", "updateDB"}) {
    if (!lex.accept_word(write)) continue;
    lex.expect(Tok::lparen, "'('");
    Term k = parse_expr(lex);
    lex.expect(Tok::comma, "','");
    Term v = parse_expr(lex);
    lex.expect(Tok::rparen, "')'");
    return op(write, {k, v});
  }
  if (lex.accept_word("if")) {
    Term c = parse_expr(lex);
    lex.expect_word("then");
    Term then_branch = parse_statements(lex);
    Term else_branch = Term::constant(web_signature(), "skip");
    if (lex.accept_word("else")) else_branch = parse_statements(lex);
    lex.expect_word("fi");
    return op("if", {c, then_branch, else_branch});
  }
  if (lex.at(Tok::qname)) {
    Term v = var_term(lex.next().text);
    lex.expect(Tok::assign, "':='");
    return op("assign", {v, parse_expr(lex)});
  }
  lex.fail("expected a statement");
}

bool at_block_end(const Lexer& lex) {
  return lex.at(Tok::rbrace) || lex.at(Tok::end) || lex.at_word("else") || lex.at_word("fi");
}

}  // namespace

Term parse_statements(Lexer& lex) {
  std::vector<Term> stmts;
  while (!at_block_end(lex)) {
    stmts.push_back(parse_statement(lex));
    if (!lex.accept(Tok::semi)) break;
  }
  if (stmts.empty()) return Term::constant(web_signature(), "skip");
  Term out = stmts.back();
  for (std::size_t i = stmts.size() - 1; i-- > 0;) out = op("seq", {stmts[i], out});
  return out;
}

}  // namespace detail

Term parse_script(std::string_view text) {
  detail::Lexer lex(text);
  Term s = detail::parse_statements(lex);
  if (!lex.at(detail::Tok::end)) lex.fail("trailing input after script");
  return s;
}

namespace {

using Value = std::optional<std::string>;

struct Evaluator {
  const Store& query;
  ScriptOutcome out;
  std::map<std::string, Value> vars;

  // Reads of keys the script already wrote do not touch the input.
  Value read(const Store& store, std::set<std::string>& reads, const std::set<std::string>& written,
             const Value& key) {
    const std::string k = key.value_or("");
    if (!written.count(k)) reads.insert(k);
    auto it = store.find(k);
    if (it == store.end()) return std::nullopt;
    return it->second;
  }

  Value expr(const Term& e) {
    const std::string& s = e.symbol();
    if (s == "lit") return unquote(e.arg(0).symbol());
    if (s == "null") return std::nullopt;
    if (s == "ref") {
      auto it = vars.find(e.arg(0).symbol());
      return it == vars.end() ? std::nullopt : it->second;
    }
    if (s == "getSession") return read(out.session, out.read_session, out.written_session, expr(e.arg(0)));
    if (s == "selectDB") return read(out.db, out.read_db, out.written_db, expr(e.arg(0)));
    if (s == "getQuery") return read(query, out.read_query, {}, expr(e.arg(0)));
    if (s == "cat") return expr(e.arg(0)).value_or("") + expr(e.arg(1)).value_or("");
    if (s == "eq") return expr(e.arg(0)) == expr(e.arg(1)) ? "true" : "false";
    if (s == "neq") return expr(e.arg(0)) != expr(e.arg(1)) ? "true" : "false";
    throw Error("malformed script expression " + e.str());
  }

  void run(const Term& st) {
    const std::string& s = st.symbol();
    if (s == "skip") return;
    if (s == "seq") {
      run(st.arg(0));
      run(st.arg(1));
    } else if (s == "assign") {
      vars[st.arg(0).symbol()] = expr(st.arg(1));
    } else if (s == "setSession" || s == "updateDB") {
      const std::string k = expr(st.arg(0)).value_or("");
      const std::string v = expr(st.arg(1)).value_or("");
      if (s == "setSession") {
        out.session[k] = v;
        out.written_session.insert(k);
      } else {
        out.db[k] = v;
        out.written_db.insert(k);
      }
    } else if (s == "if") {
      run(expr(st.arg(0)) == "true" ? st.arg(1) : st.arg(2));
    } else {
      throw Error("malformed script statement " + st.str());
    }
  }
};

}  // namespace

ScriptOutcome eval_script(const Term& script, const Store& session, const Store& db, const Store& query) {
  Evaluator ev{query, {}, {}};
  ev.out.session = session;
  ev.out.db = db;
  ev.run(script);
  return std::move(ev.out);
}

}  // namespace webtlr::web
