#include <functional>

#include "webapp/internal.hpp"
#include "webtlr/canonical.hpp"

namespace webtlr::web {

namespace {

// Positions are relative to the builtin call node.
const Position kPages{1};
const Position kSession{2};
const Position kDb{3};
const Position kMsg{4};

struct Located {
  Term page;
  Position at;
};

Located find_page(const Term& pages, std::string_view name) {
  auto items = items_of(pages, "pages", "page-empty");
  auto where = item_positions(pages, kPages, "pages", "page-empty");
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].symbol() == "page" && items[i].arg(0).symbol() == name) return {items[i], where[i]};
  }
  throw BuiltinError("no page named " + std::string(name));
}

// Key positions of every entry of a store.
std::vector<Position> key_positions(const std::map<std::string, Position>& at) {
  std::vector<Position> out;
  for (const auto& [k, p] : at) out.push_back(p.child(1));
  return out;
}

std::map<std::string, Position> entry_positions(const Term& session, const Position& at) {
  std::map<std::string, Position> out;
  auto items = items_of(session, "ses", "ses-empty");
  auto where = item_positions(session, at, "ses", "ses-empty");
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].symbol() != "kv") throw BuiltinError("malformed session entry " + items[i].str());
    out[unquote(items[i].arg(0).symbol())] = where[i];
  }
  return out;
}

std::vector<Position> joined(std::vector<Position> a, const std::vector<Position>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// One evaluation of the requested page's script with every position the
// outcome may depend on.
struct Evaluation {
  Term request;  // B2S(I, T, url(P, Q), N)
  Located page;
  ScriptOutcome outcome;
  std::map<std::string, Position> session_at;
  std::map<std::string, Position> db_at;
  std::vector<Position> session_keys;
  std::vector<Position> page_names;
  std::vector<Position> control;  // script, page lookup and every input entry read
};

Evaluation evaluate(std::span<const Term> in) {
  Evaluation ev;
  ev.request = in[3];
  if (ev.request.symbol() != "B2S" || ev.request.arg(2).symbol() != "url") {
    throw BuiltinError("not a request: " + ev.request.str());
  }
  const Term& url = ev.request.arg(2);
  ev.page = find_page(in[0], url.arg(0).symbol());
  ev.session_at = entry_positions(in[1], kSession);
  ev.db_at = entry_positions(in[2], kDb);
  auto query_at = entry_positions(url.arg(1), kMsg.child(3).child(2));
  ev.outcome = eval_script(ev.page.page.arg(1), store_of(in[1]), store_of(in[2]), store_of(url.arg(1)));
  ev.session_keys = key_positions(ev.session_at);
  for (const auto& p : item_positions(in[0], kPages, "pages", "page-empty")) ev.page_names.push_back(p.child(1));
  ev.control = joined({kMsg.child(3).child(1), ev.page.at.child(2)}, ev.page_names);
  // A missing key reads as null, which depends on every key of the store.
  auto add_reads = [&](const std::set<std::string>& keys, const std::map<std::string, Position>& at) {
    bool missing = false;
    for (const auto& k : keys) {
      if (auto it = at.find(k); it != at.end()) {
        ev.control.push_back(it->second);
      } else {
        missing = true;
      }
    }
    if (missing) {
      auto all = key_positions(at);
      ev.control.insert(ev.control.end(), all.begin(), all.end());
    }
  };
  add_reads(ev.outcome.read_session, ev.session_at);
  add_reads(ev.outcome.read_db, ev.db_at);
  add_reads(ev.outcome.read_query, query_at);
  return ev;
}


// Entries for an output session: unwritten entries are copies of the input
// entries, written ones derive from the evaluation's control positions.  The
// container shape depends on the input keys and the control positions.
void store_deps(DependencyRecord& deps, const Position& base, const Term& out, const std::set<std::string>& written,
                const std::map<std::string, Position>& input_at, const std::vector<Position>& control) {
  const std::vector<Position> shape = joined(key_positions(input_at), control);
  auto items = items_of(out, "ses", "ses-empty");
  auto where = item_positions(out, base, "ses", "ses-empty");
  const bool container = out.symbol() == "ses" || out.symbol() == "ses-empty";
  if (container) deps.derive(base, shape);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string key = unquote(items[i].arg(0).symbol());
    auto src = input_at.find(key);
    const bool copied = !written.count(key) && src != input_at.end();
    if (container && copied) {
      deps.copy(where[i], src->second);
    } else if (copied) {
      deps.derive(where[i], joined({src->second}, shape));
    } else {
      deps.derive(where[i], container ? control : shape);
    }
  }
}

std::vector<Position> condition_sources(const Term& cond, const Evaluation& ev) {
  std::vector<Position> out;
  for (const auto& k : condition_keys(cond)) {
    if (ev.outcome.written_session.count(k)) {
      out.insert(out.end(), ev.control.begin(), ev.control.end());
    } else if (auto it = ev.session_at.find(k); it != ev.session_at.end()) {
      out.push_back(it->second);
    } else {
      out.insert(out.end(), ev.session_keys.begin(), ev.session_keys.end());
    }
  }
  return out;
}

BuiltinResult eval_session(const Signature&, std::span<const Term> in) {
  Evaluation ev = evaluate(in);
  BuiltinResult r{session_term(ev.outcome.session), {}};
  store_deps(r.deps, Position{}, r.value, ev.outcome.written_session, ev.session_at, ev.control);
  return r;
}

BuiltinResult eval_db(const Signature&, std::span<const Term> in) {
  Evaluation ev = evaluate(in);
  BuiltinResult r{session_term(ev.outcome.db), {}};
  store_deps(r.deps, Position{}, r.value, ev.outcome.written_db, ev.db_at, ev.control);
  return r;
}

// S2B(I, T, page', urls', session', N): page' is the first continuation whose
// condition holds under the new session, or the requested page; urls' are
// page's links enabled under the new session.
BuiltinResult eval_response(const Signature&, std::span<const Term> in) {
  Evaluation ev = evaluate(in);
  const Store& session = ev.outcome.session;
  const Term conts = ev.page.page.arg(2);
  std::string target = ev.page.page.arg(0).symbol();
  std::vector<Position> target_deps = joined({kMsg.child(3).child(1)}, ev.page_names);
  if (conts.symbol() != "cont-empty") {
    target_deps.push_back(ev.page.at.child(3));
    for (const auto& c : items_of(conts, "conts", "cont-empty")) {
      auto more = condition_sources(c.arg(0), ev);
      target_deps.insert(target_deps.end(), more.begin(), more.end());
      if (eval_condition(c.arg(0), session)) {
        target = c.arg(1).symbol();
        break;
      }
    }
  }
  Located shown = find_page(in[0], target);
  std::vector<Term> urls;
  std::vector<Position> url_deps = joined({shown.at.child(1), shown.at.child(4)}, target_deps);
  for (const auto& nav : items_of(shown.page.arg(3), "navs", "nav-empty")) {
    auto more = condition_sources(nav.arg(0), ev);
    url_deps.insert(url_deps.end(), more.begin(), more.end());
    if (eval_condition(nav.arg(0), session)) urls.push_back(op("url", {nav.arg(1), nav.arg(2)}));
  }
  const Term& req = ev.request;
  Term out_session = session_term(session);
  BuiltinResult r{op("S2B", {req.arg(0), req.arg(1), id_term("Qid", target), bag_of("urls", "url-empty", urls),
                             out_session, req.arg(3)}),
                  {}};
  r.deps.derive(Position{}, {});
  r.deps.copy(Position{1}, kMsg.child(1));
  r.deps.copy(Position{2}, kMsg.child(2));
  r.deps.derive(Position{3}, target_deps);
  r.deps.derive(Position{4}, url_deps);
  store_deps(r.deps, Position{5}, out_session, ev.outcome.written_session, ev.session_at, ev.control);
  r.deps.copy(Position{6}, kMsg.child(4));
  return r;
}

BuiltinResult enqueue(const Signature&, std::span<const Term> in) {
  std::vector<Term> items;
  for (Term t = in[0]; t.symbol() == "q"; t = t.arg(1)) items.push_back(t.arg(0));
  BuiltinResult r{Term::constant(web_signature(), "fifo-empty"), {}};
  r.value = op("q", {in[1], r.value});
  for (std::size_t i = items.size(); i-- > 0;) r.value = op("q", {items[i], r.value});
  r.deps.derive(Position{}, {Position{1}});
  Position out_at;
  Position in_at{1};
  for (std::size_t i = 0; i < items.size(); ++i) {
    r.deps.copy(out_at.child(1), in_at.child(1));
    out_at = out_at.child(2);
    in_at = in_at.child(2);
  }
  r.deps.copy(out_at.child(1), Position{2});
  return r;
}

// fill(params, sigma, v): every parameter takes its sigma value, or v.
BuiltinResult fill(const Signature&, std::span<const Term> in) {
  Store params = store_of(in[0]);
  Store sigma = store_of(in[1]);
  auto param_at = entry_positions(in[0], Position{1});
  auto sigma_at = entry_positions(in[1], Position{2});
  const std::string fallback = unquote(in[2].symbol());
  Store out;
  for (const auto& [k, unused] : params) {
    auto it = sigma.find(k);
    out[k] = it != sigma.end() ? it->second : fallback;
  }
  BuiltinResult r{session_term(out), {}};
  auto items = items_of(r.value, "ses", "ses-empty");
  auto where = item_positions(r.value, Position{}, "ses", "ses-empty");
  const bool container = r.value.symbol() != "kv";
  if (container) r.deps.derive(Position{}, {Position{1}});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string key = unquote(items[i].arg(0).symbol());
    std::vector<Position> node_deps;
    if (!container) node_deps.push_back(Position{1});
    r.deps.derive(where[i], node_deps);
    r.deps.copy(where[i].child(1), param_at.at(key).child(1));
    if (auto s = sigma_at.find(key); s != sigma_at.end()) {
      r.deps.derive(where[i].child(2), {s->second});
    } else {
      r.deps.derive(where[i].child(2), joined({Position{3}}, key_positions(sigma_at)));
    }
  }
  return r;
}

BuiltinResult inc(const Signature&, std::span<const Term> in) {
  BuiltinResult r{nat_term(nat_of(in[0]) + 1), {}};
  r.deps.derive(Position{}, {Position{1}});
  return r;
}

// push(history, page, limit): prepend, keeping at most `limit` entries.
BuiltinResult push(const Signature&, std::span<const Term> in) {
  const unsigned long limit = nat_of(in[2]);
  std::vector<Term> pages{in[1]};
  for (Term t = in[0]; t.symbol() == "h" && pages.size() < limit; t = t.arg(1)) pages.push_back(t.arg(0));
  Term out = Term::constant(web_signature(), "history-empty");
  for (std::size_t i = pages.size(); i-- > 0;) out = op("h", {pages[i], out});
  BuiltinResult r{out, {}};
  r.deps.derive(Position{}, {Position{1}, Position{3}});
  if (pages.size() > 0) r.deps.copy(Position{1}, Position{2});
  return r;
}

bool no_session(const Signature&, std::span<const Term> in) {
  for (const auto& u : items_of(in[0], "uss", "us-empty")) {
    if (u.symbol() == "us" && u.arg(0) == in[1]) return false;
  }
  return true;
}

// No message of browser in[0] on the channel in[1] or in the queues of the
// server in[2].
bool idle(const Signature&, std::span<const Term> in) {
  auto mine = [&](const Term& m) { return !m.is_variable() && m.arity() > 0 && m.arg(0) == in[0]; };
  for (const auto& m : items_of(in[1], "mes", "mes-empty")) {
    if (mine(m)) return false;
  }
  for (std::size_t k : {3u, 4u}) {
    for (Term q = in[2].arg(k); q.symbol() == "q"; q = q.arg(1)) {
      if (mine(q.arg(0))) return false;
    }
  }
  return true;
}

bool nat_less(const Signature&, std::span<const Term> in) {
  try {
    return nat_of(in[0]) < nat_of(in[1]);
  } catch (const BuiltinError&) {
    return false;
  }
}

}  // namespace

void install_protocol(WebModel& model) {
  Theory& th = model.theory;
  const Signature& sig = th.sig();
  th.add_builtin("evalSession", eval_session);
  th.add_builtin("evalDB", eval_db);
  th.add_builtin("evalResponse", eval_response);
  th.add_builtin("enqueue", enqueue);
  th.add_builtin("fill", fill);
  th.add_builtin("inc", inc);
  th.add_builtin("push", push);
  th.add_predicate("noSession", no_session);
  th.add_predicate("lt", nat_less);
  th.add_predicate("idle", idle);

  ParseOptions o;
  auto declare = [&](std::initializer_list<const char*> names, const char* sort) {
    for (const char* n : names) o.variables[n] = sig.sort(sort);
  };
  declare({"I", "T"}, "Id");
  declare({"P", "P2"}, "Qid");
  declare({"U", "UR", "UR2"}, "Url");
  declare({"SS", "SS2", "SG", "Q", "Q2", "D", "D2"}, "Session");
  declare({"LM", "MS", "M", "R", "M0"}, "Message");
  declare({"H", "H2"}, "History");
  declare({"N", "N0", "N2"}, "Nat");
  declare({"BR"}, "Browser");
  declare({"SV"}, "Server");
  declare({"W"}, "Page");
  declare({"US"}, "UserSession");
  declare({"FQ", "FQ2", "FR", "FR2"}, "Fifo");
  auto t = [&](const std::string& text) { return parse_term(text, sig, o); };
  auto v = [&](const char* name) { return Term::variable(sig, name, o.variables.at(name)); };
  const Scenario& sc = model.scenario;
  const Term request = t("B2S(I, T, U, N)");

  for (std::size_t k = 0; k < sc.alphabet.size(); ++k) {
    Rule r;
    r.label = sc.alphabet.size() == 1 ? "ReqIni" : "ReqIni-" + std::to_string(k + 1);
    r.lhs = t("WS(brs(B(I, T, P, urls(url(P2, Q), UR), SS, SG, LM, H, N), BR), MS, SV)");
    const std::string history = sc.back ? "H2" : "H";
    r.rhs = t("WS(brs(B(I, T, P, url-empty, SS, SG, B2S(I, T, url(P2, Q2), N), " + history +
              ", N), BR), mes(B2S(I, T, url(P2, Q2), N), MS), SV)");
    r.conditions.push_back(Computation{"Q2", "fill", {v("Q"), v("SG"), str_term(sc.alphabet[k])}});
    if (sc.back) r.conditions.push_back(Computation{"H2", "push", {v("H"), v("P"), nat_term(sc.history_limit)}});
    th.add_rule(std::move(r));
  }
  {
    Rule r{"ReqFin", t("WS(BR, mes(B2S(I, T, U, N), MS), S(W, US, D, FQ, FR))"),
           t("WS(BR, MS, S(W, US, D, FQ2, FR))"), {}, true, {}};
    r.conditions.push_back(Computation{"FQ2", "enqueue", {v("FQ"), request}});
    th.add_rule(std::move(r));
  }
  {
    Rule r{"SessionInit", t("WS(BR, MS, S(W, US, D, q(B2S(I, T, U, N), FQ), FR))"),
           t("WS(BR, MS, S(W, uss(us(I, ses-empty), US), D, q(B2S(I, T, U, N), FQ), FR))"), {}, true, {}};
    r.conditions.push_back(BoolTest{"noSession", {v("US"), v("I")}});
    th.add_rule(std::move(r));
  }
  {
    Rule r{"ScriptEval", t("WS(BR, MS, S(W, uss(us(I, SS), US), D, q(B2S(I, T, U, N), FQ), FR))"),
           t("WS(BR, MS, S(W, uss(us(I, SS2), US), D2, FQ, FR2))"), {}, true, {}};
    std::vector<Term> in{v("W"), v("SS"), v("D"), request};
    r.conditions.push_back(Computation{"SS2", "evalSession", in});
    r.conditions.push_back(Computation{"D2", "evalDB", in});
    r.conditions.push_back(Computation{"R", "evalResponse", in});
    r.conditions.push_back(Computation{"FR2", "enqueue", {v("FR"), v("R")}});
    th.add_rule(std::move(r));
  }
  th.add_rule({"ResIni", t("WS(BR, MS, S(W, US, D, FQ, q(M, FR)))"), t("WS(BR, mes(M, MS), S(W, US, D, FQ, FR))"),
               {}, true, {}});
  th.add_rule({"ResFin", t("WS(brs(B(I, T, P, UR, SS, SG, LM, H, N), BR), mes(S2B(I, T, P2, UR2, SS2, N), MS), SV)"),
               t("WS(brs(B(I, T, P2, UR2, SS2, SG, LM, H, N), BR), MS, SV)"), {}, true, {}});
  if (sc.refresh) {
    Rule stale{"ResFinStale",
               t("WS(brs(B(I, T, P, UR, SS, SG, LM, H, N), BR), mes(S2B(I, T, P2, UR2, SS2, N0), MS), SV)"),
               t("WS(brs(B(I, T, P, UR, SS, SG, LM, H, N), BR), MS, SV)"), {}, true, {}};
    stale.conditions.push_back(BoolTest{"lt", {v("N0"), v("N")}});
    th.add_rule(std::move(stale));
    Rule r{"Refresh", t("WS(brs(B(I, T, P, UR, SS, SG, B2S(I, T, U, N0), H, N), BR), MS, SV)"),
           t("WS(brs(B(I, T, P, url-empty, SS, SG, B2S(I, T, U, N2), H, N2), BR), mes(B2S(I, T, U, N2), MS), SV)"),
           {}, true, {}};
    r.conditions.push_back(BoolTest{"lt", {v("N"), nat_term(sc.refresh_limit)}});
    r.conditions.push_back(Computation{"N2", "inc", {v("N")}});
    th.add_rule(std::move(r));
  }
  if (sc.back) {
    Rule r{"Back", t("WS(brs(B(I, T, P, UR, SS, SG, LM, h(P2, H), N), BR), MS, SV)"),
           t("WS(brs(B(I, T, P, url-empty, SS, SG, B2S(I, T, url(P2, ses-empty), N), H, N), BR), "
             "mes(B2S(I, T, url(P2, ses-empty), N), MS), SV)"),
           {}, true, {}};
    r.conditions.push_back(BoolTest{"idle", {v("I"), v("MS"), v("SV")}});
    th.add_rule(std::move(r));
  }
}

}  // namespace webtlr::web
