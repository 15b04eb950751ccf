#include "webapp/internal.hpp"

#include <cstdio>

#include "webtlr/canonical.hpp"

namespace webtlr::web {

namespace {

Signature build_signature() {
  Signature sig;
  for (const char* lit : {"Id", "Qid", "Str", "Nat", "Var"}) sig.add_sort(lit, true);
  for (const char* s : {"WebState", "Browser", "Message", "Server", "Url", "Session", "Fifo", "UserSession", "Page",
                        "Script", "Expr", "Cond", "Cont", "Nav", "History"}) {
    sig.add_sort(s);
  }
  auto ctor = [&](const char* name, std::vector<std::string> args, const char* result) {
    sig.add_op({name, std::move(args), result, false, false, true, ""});
  };
  auto bag = [&](const char* name, const char* sort, const char* empty) {
    sig.add_op({empty, {}, sort, false, false, true, ""});
    sig.add_op({name, {sort, sort}, sort, true, true, true, empty});
  };
  auto builtin = [&](const char* name, std::vector<std::string> args, const char* result) {
    sig.add_op({name, std::move(args), result, false, false, false, ""});
  };

  ctor("WS", {"Browser", "Message", "Server"}, "WebState");
  ctor("B", {"Id", "Id", "Qid", "Url", "Session", "Session", "Message", "History", "Nat"}, "Browser");
  bag("brs", "Browser", "br-empty");
  ctor("B2S", {"Id", "Id", "Url", "Nat"}, "Message");
  ctor("S2B", {"Id", "Id", "Qid", "Url", "Session", "Nat"}, "Message");
  bag("mes", "Message", "mes-empty");
  ctor("S", {"Page", "UserSession", "Session", "Fifo", "Fifo"}, "Server");
  ctor("url", {"Qid", "Session"}, "Url");
  bag("urls", "Url", "url-empty");
  ctor("kv", {"Str", "Str"}, "Session");
  bag("ses", "Session", "ses-empty");
  ctor("fifo-empty", {}, "Fifo");
  ctor("q", {"Message", "Fifo"}, "Fifo");
  ctor("us", {"Id", "Session"}, "UserSession");
  bag("uss", "UserSession", "us-empty");
  ctor("page", {"Qid", "Script", "Cont", "Nav"}, "Page");
  bag("pages", "Page", "page-empty");
  ctor("cont", {"Cond", "Qid"}, "Cont");
  bag("conts", "Cont", "cont-empty");
  ctor("nav", {"Cond", "Qid", "Session"}, "Nav");
  bag("navs", "Nav", "nav-empty");
  ctor("TRUE", {}, "Cond");
  ctor("ceq", {"Str", "Str"}, "Cond");
  ctor("cand", {"Cond", "Cond"}, "Cond");
  ctor("history-empty", {}, "History");
  ctor("h", {"Qid", "History"}, "History");

  ctor("skip", {}, "Script");
  ctor("seq", {"Script", "Script"}, "Script");
  ctor("assign", {"Var", "Expr"}, "Script");
  ctor("setSession", {"Expr", "Expr"}, "Script");
  ctor("updateDB", {"Expr", "Expr"}, "Script");
  ctor("if", {"Expr", "Script", "Script"}, "Script");
  ctor("lit", {"Str"}, "Expr");
  ctor("ref", {"Var"}, "Expr");
  ctor("null", {}, "Expr");
  ctor("getSession", {"Expr"}, "Expr");
  ctor("getQuery", {"Expr"}, "Expr");
  ctor("selectDB", {"Expr"}, "Expr");
  ctor("cat", {"Expr", "Expr"}, "Expr");
  ctor("eq", {"Expr", "Expr"}, "Expr");
  ctor("neq", {"Expr", "Expr"}, "Expr");

  builtin("evalSession", {"Page", "Session", "Session", "Message"}, "Session");
  builtin("evalDB", {"Page", "Session", "Session", "Message"}, "Session");
  builtin("evalResponse", {"Page", "Session", "Session", "Message"}, "Message");
  builtin("enqueue", {"Fifo", "Message"}, "Fifo");
  builtin("fill", {"Session", "Session", "Str"}, "Session");
  builtin("inc", {"Nat"}, "Nat");
  builtin("push", {"History", "Qid", "Nat"}, "History");
  sig.validate();
  return sig;
}

}  // namespace

const Signature& web_signature() {
  static const Signature sig = build_signature();
  return sig;
}

std::string quote(std::string_view raw) {
  std::string out(1, '"');
  for (char c : raw) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string unquote(std::string_view token) {
  if (token.size() < 2 || token.front() != '"' || token.back() != '"') return std::string(token);
  std::string out;
  for (std::size_t i = 1; i + 1 < token.size(); ++i) {
    if (token[i] == '\\' && i + 2 < token.size()) ++i;
    out += token[i];
  }
  return out;
}

Term str_term(std::string_view raw) {
  const auto& sig = web_signature();
  return Term::literal(sig, sig.sort("Str"), quote(raw));
}

Term id_term(std::string_view sort, std::string_view token) {
  const auto& sig = web_signature();
  return Term::literal(sig, sig.sort(sort), std::string(token));
}

Term nat_term(unsigned long v) { return id_term("Nat", std::to_string(v)); }

unsigned long nat_of(const Term& t) {
  const std::string& s = t.symbol();
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw BuiltinError("'" + s + "' is not a natural number");
  }
  return std::stoul(s);
}

Term op(std::string_view name, std::vector<Term> args) { return Term::make(web_signature(), name, std::move(args)); }

Term bag_of(std::string_view name, std::string_view empty, std::vector<Term> items) {
  if (items.empty()) return Term::constant(web_signature(), empty);
  if (items.size() == 1) return items.front();
  return flatten(web_signature(), op(name, std::move(items)));
}

std::vector<Term> items_of(const Term& t, std::string_view name, std::string_view empty) {
  if (t.symbol() == empty) return {};
  if (t.symbol() == name) return {t.args().begin(), t.args().end()};
  return {t};
}

std::vector<Position> item_positions(const Term& t, const Position& at, std::string_view name,
                                     std::string_view empty) {
  if (t.symbol() == empty) return {};
  if (t.symbol() != name) return {at};
  std::vector<Position> out;
  for (std::uint32_t i = 0; i < t.arity(); ++i) out.push_back(at.child(i + 1));
  return out;
}

Store store_of(const Term& session) {
  Store out;
  for (const auto& kv : items_of(session, "ses", "ses-empty")) {
    if (kv.symbol() != "kv") throw Error("malformed session entry " + kv.str());
    out[unquote(kv.arg(0).symbol())] = unquote(kv.arg(1).symbol());
  }
  return out;
}

Term session_term(const Store& store) {
  std::vector<Term> items;
  for (const auto& [k, v] : store) items.push_back(op("kv", {str_term(k), str_term(v)}));
  return bag_of("ses", "ses-empty", std::move(items));
}

bool eval_condition(const Term& cond, const Store& session) {
  const std::string& s = cond.symbol();
  if (s == "TRUE") return true;
  if (s == "cand") return eval_condition(cond.arg(0), session) && eval_condition(cond.arg(1), session);
  if (s == "ceq") {
    auto it = session.find(unquote(cond.arg(0).symbol()));
    return it != session.end() && it->second == unquote(cond.arg(1).symbol());
  }
  throw Error("malformed condition " + cond.str());
}

namespace {
void collect_tests(const Term& cond, std::vector<std::pair<std::string, std::string>>& out) {
  if (cond.symbol() == "cand") {
    collect_tests(cond.arg(0), out);
    collect_tests(cond.arg(1), out);
  } else if (cond.symbol() == "ceq") {
    out.emplace_back(unquote(cond.arg(0).symbol()), unquote(cond.arg(1).symbol()));
  }
}
}  // namespace

std::vector<std::pair<std::string, std::string>> condition_tests(const Term& cond) {
  std::vector<std::pair<std::string, std::string>> out;
  collect_tests(cond, out);
  return out;
}

std::set<std::string> condition_keys(const Term& cond) {
  std::set<std::string> out;
  for (const auto& [k, v] : condition_tests(cond)) out.insert(k);
  return out;
}

std::string condition_text(const Term& cond) {
  auto tests = condition_tests(cond);
  if (tests.empty()) return "true";
  std::string out;
  for (const auto& [k, v] : tests) {
    if (!out.empty()) out += " and ";
    out += k + "=" + v;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace webtlr::web
