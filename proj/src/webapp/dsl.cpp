#include <fstream>
#include <sstream>

#include "webapp/dsl_lexer.hpp"
#include "webapp/internal.hpp"
#include "webtlr/canonical.hpp"

namespace webtlr::web {

namespace {

using detail::Lexer;
using detail::Tok;

std::string word(Lexer& lex, const char* what) {
  if (!lex.at(Tok::name) && !lex.at(Tok::string)) lex.fail(std::string("expected ") + what);
  return lex.next().text;
}

Term parse_test(Lexer& lex) {
  std::string key = word(lex, "a session key");
  lex.expect(Tok::eq, "'='");
  std::string value = word(lex, "a value");
  return op("ceq", {str_term(key), str_term(value)});
}

Term parse_condition(Lexer& lex) {
  if (lex.accept(Tok::lparen)) {
    Term c = parse_condition(lex);
    lex.expect(Tok::rparen, "')'");
    if (lex.accept_word("and")) return op("cand", {c, parse_condition(lex)});
    return c;
  }
  if (lex.accept_word("true")) return Term::constant(web_signature(), "TRUE");
  Term c = parse_test(lex);
  if (lex.accept_word("and")) return op("cand", {c, parse_condition(lex)});
  return c;
}

PageDef parse_page(Lexer& lex) {
  PageDef page;
  page.name = word(lex, "a page name");
  page.script = Term::constant(web_signature(), "skip");
  lex.expect(Tok::lbrace, "'{'");
  while (!lex.accept(Tok::rbrace)) {
    if (lex.accept_word("script")) {
      lex.expect(Tok::lbrace, "'{'");
      page.script = detail::parse_statements(lex);
      lex.expect(Tok::rbrace, "'}'");
    } else if (lex.accept_word("continuations")) {
      lex.expect(Tok::lbrace, "'{'");
      while (!lex.accept(Tok::rbrace)) {
        ContinuationDef c;
        c.cond = parse_condition(lex);
        lex.expect(Tok::cont, "'=>'");
        c.target = word(lex, "a page name");
        lex.expect(Tok::semi, "';'");
        page.continuations.push_back(std::move(c));
      }
    } else if (lex.accept_word("links")) {
      lex.expect(Tok::lbrace, "'{'");
      while (!lex.accept(Tok::rbrace)) {
        LinkDef l;
        l.cond = parse_condition(lex);
        lex.expect(Tok::link, "'->'");
        l.target = word(lex, "a page name");
        if (lex.accept(Tok::query)) {
          lex.expect(Tok::lbrack, "'['");
          while (!lex.accept(Tok::rbrack)) {
            l.params.push_back(word(lex, "a query parameter"));
            if (!lex.at(Tok::rbrack)) lex.expect(Tok::comma, "','");
          }
        }
        lex.expect(Tok::semi, "';'");
        page.links.push_back(std::move(l));
      }
    } else {
      lex.fail("expected 'script', 'continuations' or 'links'");
    }
  }
  return page;
}

void parse_pairs(Lexer& lex, Store& into) {
  lex.expect(Tok::lbrace, "'{'");
  while (!lex.accept(Tok::rbrace)) {
    std::string k = word(lex, "a key");
    lex.expect(Tok::eq, "'='");
    std::string v = word(lex, "a value");
    lex.expect(Tok::semi, "';'");
    into[k] = v;
  }
}

unsigned parse_count(Lexer& lex, unsigned fallback) {
  if (!lex.at(Tok::name)) return fallback;
  const std::string& t = lex.peek().text;
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) lex.fail("expected a number");
  unsigned v = static_cast<unsigned>(std::stoul(lex.next().text));
  if (v == 0) lex.fail("limits must be positive");
  return v;
}

void parse_scenario(Lexer& lex, Scenario& sc) {
  lex.expect(Tok::lbrace, "'{'");
  while (!lex.accept(Tok::rbrace)) {
    if (lex.accept_word("browser")) {
      BrowserDef b;
      b.id = word(lex, "a browser id");
      lex.expect_word("tab");
      b.tab = word(lex, "a tab id");
      if (lex.accept_word("sigma")) parse_pairs(lex, b.sigma);
      lex.accept(Tok::semi);
      sc.browsers.push_back(std::move(b));
    } else if (lex.accept_word("db")) {
      parse_pairs(lex, sc.db);
    } else if (lex.accept_word("entry")) {
      sc.entry = word(lex, "a page name");
      lex.expect(Tok::semi, "';'");
    } else if (lex.accept_word("actions")) {
      lex.expect(Tok::lbrace, "'{'");
      while (!lex.accept(Tok::rbrace)) {
        if (lex.accept_word("click")) {
        } else if (lex.accept_word("refresh")) {
          sc.refresh = true;
          sc.refresh_limit = parse_count(lex, sc.refresh_limit);
        } else if (lex.accept_word("back")) {
          sc.back = true;
          sc.history_limit = parse_count(lex, sc.history_limit);
        } else {
          lex.fail("expected 'click', 'refresh' or 'back'");
        }
        lex.expect(Tok::semi, "';'");
      }
    } else if (lex.accept_word("alphabet")) {
      lex.expect(Tok::lbrace, "'{'");
      sc.alphabet.clear();
      while (!lex.accept(Tok::rbrace)) {
        sc.alphabet.push_back(lex.expect(Tok::string, "a string").text);
        if (!lex.at(Tok::rbrace) && !lex.accept(Tok::comma)) lex.expect(Tok::semi, "',' or ';'");
      }
      if (sc.alphabet.empty()) throw Error("the value alphabet must not be empty");
    } else {
      lex.fail("expected 'browser', 'db', 'entry', 'actions' or 'alphabet'");
    }
  }
}

// Two continuation conditions conflict when one session satisfies both.
bool satisfiable_together(const Term& a, const Term& b) {
  Store need;
  for (const auto& tests : {condition_tests(a), condition_tests(b)}) {
    for (const auto& [k, v] : tests) {
      auto [it, fresh] = need.emplace(k, v);
      if (!fresh && it->second != v) return false;
    }
  }
  return true;
}

void validate(const WebModel& m) {
  const auto& sig = web_signature();
  if (m.pages.empty() || m.scenario.entry.empty()) throw Error("no entry page");
  std::set<std::string> names;
  for (const auto& p : m.pages) {
    if (sig.find_op(p.name)) throw Error("page name '" + p.name + "' clashes with a reserved operator");
    if (!names.insert(p.name).second) throw Error("page '" + p.name + "' defined twice");
  }
  if (!names.count(m.scenario.entry)) throw Error("no entry page: '" + m.scenario.entry + "' is not defined");
  for (const auto& p : m.pages) {
    for (const auto& l : p.links) {
      if (!names.count(l.target)) throw Error("page " + p.name + ": link to undefined page '" + l.target + "'");
    }
    for (const auto& c : p.continuations) {
      if (!names.count(c.target)) {
        throw Error("page " + p.name + ": continuation to undefined page '" + c.target + "'");
      }
    }
    for (std::size_t i = 0; i < p.continuations.size(); ++i) {
      for (std::size_t j = i + 1; j < p.continuations.size(); ++j) {
        if (satisfiable_together(p.continuations[i].cond, p.continuations[j].cond)) {
          throw Error("page " + p.name + ": continuation conflict between '" +
                      condition_text(p.continuations[i].cond) + "' and '" +
                      condition_text(p.continuations[j].cond) + "'");
        }
      }
    }
  }
  std::set<std::pair<std::string, std::string>> ids;
  for (const auto& b : m.scenario.browsers) {
    if (!ids.insert({b.id, b.tab}).second) throw Error("browser " + b.id + "/" + b.tab + " declared twice");
  }
}

Term initial_state(const WebModel& m) {
  const auto& sc = m.scenario;
  std::vector<Term> browsers;
  for (const auto& b : sc.browsers) {
    Term entry = id_term("Qid", sc.entry);
    browsers.push_back(op("B", {id_term("Id", b.id), id_term("Id", b.tab), entry,
                                op("url", {entry, session_term({})}), session_term({}), session_term(b.sigma),
                                Term::constant(web_signature(), "mes-empty"),
                                Term::constant(web_signature(), "history-empty"), nat_term(0)}));
  }
  std::vector<Term> pages;
  for (const auto& p : m.pages) pages.push_back(page_term(p));
  Term server = op("S", {bag_of("pages", "page-empty", std::move(pages)), Term::constant(web_signature(), "us-empty"),
                         session_term(sc.db), Term::constant(web_signature(), "fifo-empty"),
                         Term::constant(web_signature(), "fifo-empty")});
  return flatten(web_signature(), op("WS", {bag_of("brs", "br-empty", std::move(browsers)),
                                            Term::constant(web_signature(), "mes-empty"), server}));
}

}  // namespace

Term page_term(const PageDef& page) {
  std::vector<Term> conts;
  for (const auto& c : page.continuations) conts.push_back(op("cont", {c.cond, id_term("Qid", c.target)}));
  std::vector<Term> navs;
  for (const auto& l : page.links) {
    Store params;
    for (const auto& k : l.params) params[k] = "";
    navs.push_back(op("nav", {l.cond, id_term("Qid", l.target), session_term(params)}));
  }
  return flatten(web_signature(), op("page", {id_term("Qid", page.name), page.script,
                                              bag_of("conts", "cont-empty", std::move(conts)),
                                              bag_of("navs", "nav-empty", std::move(navs))}));
}

const PageDef* WebModel::page(std::string_view name) const {
  for (const auto& p : pages) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const PredicateDef* WebModel::predicate(std::string_view name) const {
  for (const auto& p : predicates) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

WebModel parse_webapp(std::string_view text) {
  WebModel m;
  m.source_hash = hex64(fnv1a(text));
  Lexer lex(text);
  bool seen_scenario = false;
  while (!lex.at(Tok::end)) {
    if (lex.accept_word("page")) {
      m.pages.push_back(parse_page(lex));
    } else if (lex.accept_word("scenario")) {
      if (seen_scenario) lex.fail("only one scenario block is allowed");
      seen_scenario = true;
      parse_scenario(lex, m.scenario);
    } else if (lex.accept_word("predicate")) {
      PredicateDef p;
      p.name = word(lex, "a predicate name");
      if (p.name == "curPage" || m.predicate(p.name)) lex.fail("predicate '" + p.name + "' already defined");
      if (!lex.at(Tok::eq)) lex.fail("expected '='");
      lex.next();
      const int line = lex.peek().line;
      const int column = lex.peek().column;
      p.text = lex.raw_until(';');
      try {
        p.pattern = parse_filter(p.text);
      } catch (const ParseError& e) {
        throw ParseError(std::string("predicate ") + p.name + ": " + e.what(), line, column);
      }
      lex.expect(Tok::semi, "';'");
      m.predicates.push_back(std::move(p));
    } else {
      lex.fail("expected 'page', 'scenario' or 'predicate'");
    }
  }
  validate(m);
  m.initial = initial_state(m);
  install_protocol(m);
  return m;
}

WebModel load_webapp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_webapp(buf.str());
}

}  // namespace webtlr::web
