// Web applications as rewrite theories: the Web-state signature, the
// navigation DSL, the script interpreter and the request/response protocol
// rules.
#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "webtlr/filter.hpp"
#include "webtlr/rewrite.hpp"

namespace webtlr::web {

// Shared by every loaded model, so terms of different models interoperate.
const Signature& web_signature();

// String literals carry their quotes in the term.
std::string quote(std::string_view raw);
std::string unquote(std::string_view token);
Term str_term(std::string_view raw);

using Store = std::map<std::string, std::string>;

// ses(kv(k, v), ...) <-> map.  Throws Error on a malformed session term.
Store store_of(const Term& session);
Term session_term(const Store& store);

struct ScriptOutcome {
  Store session;
  Store db;
  std::set<std::string> read_session;
  std::set<std::string> read_db;
  std::set<std::string> read_query;
  std::set<std::string> written_session;
  std::set<std::string> written_db;
};

// Big-step evaluation.  Unset reads yield null; `null` compares equal only
// to null and concatenates as the empty string.
ScriptOutcome eval_script(const Term& script, const Store& session, const Store& db, const Store& query);

// Script surface syntax: `setSession(e, e)`, `updateDB(e, e)`, `'x := e`,
// `if (e) then s [else s] fi`, `skip`, `;` sequencing; expressions are string
// literals, `'x`, `null`, `getSession(e)`, `getQuery('k)`, `selectDB(e)`,
// `e '. e`, `e = e`, `e != e`.
Term parse_script(std::string_view text);

// Conditions are conjunctions of `key = value` tests over the session.
bool eval_condition(const Term& cond, const Store& session);
std::set<std::string> condition_keys(const Term& cond);
std::string condition_text(const Term& cond);

struct LinkDef {
  Term cond;
  std::string target;
  std::vector<std::string> params;
};

struct ContinuationDef {
  Term cond;
  std::string target;
};

struct PageDef {
  std::string name;
  Term script;
  std::vector<ContinuationDef> continuations;
  std::vector<LinkDef> links;
};

struct BrowserDef {
  std::string id;
  std::string tab;
  Store sigma;
};

struct Scenario {
  std::vector<BrowserDef> browsers;
  Store db;
  std::string entry;
  bool refresh = false;
  bool back = false;
  unsigned refresh_limit = 1;
  unsigned history_limit = 8;
  std::vector<std::string> alphabet{""};
};

struct PredicateDef {
  std::string name;
  std::string text;
  FilterPattern pattern;
};

struct WebModel {
  std::vector<PageDef> pages;
  Scenario scenario;
  std::vector<PredicateDef> predicates;
  Theory theory{web_signature()};
  Term initial;
  std::string source_hash;  // FNV-1a of the source text

  const PageDef* page(std::string_view name) const;
  const PredicateDef* predicate(std::string_view name) const;
};

// Throws ParseError for syntax errors and Error for load-time validation
// failures (no entry page, undefined target, continuation conflict).
WebModel parse_webapp(std::string_view text);
WebModel load_webapp(const std::string& path);

// The page term of a definition, as stored in the server.
Term page_term(const PageDef& page);

// State predicates: `curPage(idb, page)` and the model's pattern predicates.
bool has_state_predicate(const WebModel& model, std::string_view name, std::size_t arity);
// Throws Error for an unknown predicate.
bool eval_predicate(const WebModel& model, std::string_view name, const std::vector<std::string>& args,
                    const Term& state);
bool cur_page(const Term& state, std::string_view idb, std::string_view page);

// Navigation graph: solid edges for links labeled `cond / query`, dashed
// edges for continuations labeled by their condition.
std::string render_dot(const WebModel& model);
nlohmann::json graph_json(const WebModel& model);

std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace webtlr::web
