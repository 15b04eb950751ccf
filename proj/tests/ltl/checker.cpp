#include <random>

#include "doctest.h"
#include "forum.hpp"
#include "ltl_oracle.hpp"
#include "naive_check.hpp"
#include "toy_theory.hpp"
#include "webtlr/trace_io.hpp"

using namespace webtlr;
using namespace webtlr::testing;
using ltl::parse_formula;
using ltl::Status;

namespace {

const char* kProperty = "[] ~ (curPage(bidAlfred, Admin) /\\ curPage(bidAnna, Admin))";

const char* kTiny = R"(
page Home {
  links { true -> Home ? [] ; }
}
scenario {
  browser b1 tab t1 ;
  entry Home ;
}
)";

Term toy_state(const Theory& th, const std::string& text) { return parse_term(text, th.sig()); }

// p: the counter is even.  q: the bag holds a zero item.
ltl::StateEval toy_eval() {
  return [](const ltl::Atom& a, const Term& s) {
    if (a.name == "p") return nat_value(s.arg(1)) % 2 == 0;
    bool zero = false;
    std::function<void(const Term&)> walk = [&](const Term& t) {
      if (t.symbol() == "item" && t.arg(0).symbol() == "0") zero = true;
      for (const auto& x : t.args()) walk(x);
    };
    walk(s.arg(0));
    return zero;
  };
}

ltl::Formula toy_formula(const std::string& text) {
  return parse_formula(text, [](const std::string& name, std::size_t arity) -> std::optional<ltl::Atom::Kind> {
    if (arity != 0) return std::nullopt;
    if (name == "p" || name == "q") return ltl::Atom::Kind::state;
    if (name == "merge" || name == "zero") return ltl::Atom::Kind::label;
    return std::nullopt;
  });
}

// Browser pages in the last state of a trace, by browser id.
std::map<std::string, std::string> final_pages(const ltl::Verdict& v) {
  std::map<std::string, std::string> out;
  const Term& s = v.trace.states.back();
  for (const char* id : {"bidAlfred", "bidAnna"}) {
    for (const char* page : {"Index", "Login", "Admin", "Access", "Logout"}) {
      if (web::cur_page(s, id, page)) out[id] = page;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("the buggy forum violates mutual exclusion of the administration page") {
  const auto& m = corpus("forum-buggy.nav");
  auto f = ltl::parse_property(m, kProperty);
  auto v = ltl::check_webapp(m, f);
  REQUIRE(v.status == Status::refuted);
  auto pages = final_pages(v);
  CHECK(pages["bidAlfred"] == "Admin");
  CHECK(pages["bidAnna"] == "Admin");
  CHECK(v.trace.states.front() == m.initial);
  CHECK(v.trace.theory_hash == m.source_hash);
  CHECK(v.trace.metadata.at("verdict") == "refuted");
  CHECK(v.trace.metadata.at("lasso_start") == std::to_string(v.lasso_start));
  CHECK(replay(m.theory, v.trace).ok);
  CHECK_FALSE(ltl::validate_counterexample(m.theory, f, v, ltl::web_eval(m)).has_value());
  // No earlier state of the trace already violates the property.
  auto bounds = group_boundaries(v.trace);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const Term& s = v.trace.states[bounds[i]];
    CHECK_FALSE((web::cur_page(s, "bidAlfred", "Admin") && web::cur_page(s, "bidAnna", "Admin")));
  }
}

TEST_CASE("the fixed forum satisfies mutual exclusion of the administration page") {
  const auto& m = corpus("forum-fixed.nav");
  auto f = ltl::parse_property(m, kProperty);
  auto v = ltl::check_webapp(m, f);
  CHECK(v.status == Status::fulfilled);
  CHECK(v.stats.states == 74708);
  CHECK(v.trace.states.empty());
}

TEST_CASE("always true holds and always false fails at the initial state") {
  const auto& m = corpus("forum-buggy.nav");
  auto t = ltl::check_webapp(m, parse_formula("[] true"));
  CHECK(t.status == Status::fulfilled);
  CHECK(t.stats.states == 1);
  auto f = ltl::check_webapp(m, parse_formula("[] false"));
  REQUIRE(f.status == Status::refuted);
  CHECK(f.trace.states.size() == 1);
  CHECK(f.lasso_start == 0);
}

TEST_CASE("checking is deterministic") {
  const auto& m = corpus("forum-buggy.nav");
  auto f = ltl::parse_property(m, kProperty);
  auto a = ltl::check_webapp(m, f);
  auto b = ltl::check_webapp(m, f);
  CHECK(trace_to_json(a.trace, m.theory.sig()).dump() == trace_to_json(b.trace, m.theory.sig()).dump());
  CHECK(a.stats.states == b.stats.states);
}

TEST_CASE("budgets stop the search") {
  const auto& m = corpus("forum-fixed.nav");
  auto f = ltl::parse_property(m, kProperty);
  ltl::Budget states;
  states.max_states = 500;
  auto v = ltl::check_webapp(m, f, states);
  CHECK(v.status == Status::budget_exhausted);
  CHECK(v.exhausted == "states");
  CHECK(v.stats.states <= 500);
  ltl::Budget depth;
  depth.max_depth = 10;
  auto w = ltl::check_webapp(m, f, depth);
  CHECK(w.status == Status::budget_exhausted);
  CHECK(w.exhausted == "depth");
  ltl::Budget time;
  time.time_limit = std::chrono::milliseconds(0);
  auto x = ltl::check_webapp(m, f, time);
  CHECK(x.status == Status::budget_exhausted);
  CHECK(x.exhausted == "time");
  // A refutation within the budget is still found.
  auto y = ltl::check_webapp(corpus("forum-buggy.nav"), f, depth);
  CHECK(y.status != Status::fulfilled);
}

TEST_CASE("rule label atoms") {
  auto m = web::parse_webapp(kTiny);
  auto always_req = ltl::parse_property(m, "[] (ReqIni -> O ReqFin)");
  CHECK(ltl::check_webapp(m, always_req).status == Status::fulfilled);
  auto never_fin = ltl::parse_property(m, "[] ~ ResFin");
  auto v = ltl::check_webapp(m, never_fin);
  REQUIRE(v.status == Status::refuted);
  bool fin = false;
  for (const auto& s : v.trace.steps) fin = fin || s.label == "ResFin";
  CHECK(fin);
  CHECK_FALSE(ltl::validate_counterexample(m.theory, never_fin, v, ltl::web_eval(m)).has_value());
}

TEST_CASE("liveness counterexamples are lassos") {
  auto m = web::parse_webapp(kTiny);
  auto f = ltl::parse_property(m, "<> [] ~ ReqIni");
  auto v = ltl::check_webapp(m, f);
  REQUIRE(v.status == Status::refuted);
  CHECK(v.lasso_start + 1 < v.trace.states.size());
  CHECK(v.trace.states[v.lasso_start] == v.trace.states.back());
  bool req = false;
  for (std::size_t i = v.lasso_start; i < v.trace.steps.size(); ++i) req = req || v.trace.steps[i].label == "ReqIni";
  CHECK(req);
  CHECK_FALSE(ltl::validate_counterexample(m.theory, f, v, ltl::web_eval(m)).has_value());
}

TEST_CASE("deadlocked states stutter") {
  auto th = toy_theory(false);
  Term init = toy_state(th, "st(bag(item(1), item(2)), 0)");
  auto live = ltl::check(th, init, toy_formula("[] <> merge"), toy_eval());
  REQUIRE(live.status == Status::refuted);
  CHECK(live.lasso_start + 1 == live.trace.states.size());
  CHECK(nat_value(live.trace.states.back().arg(1)) == 1);
  CHECK(ltl::check(th, init, toy_formula("<> [] ~ p"), toy_eval()).status == Status::fulfilled);
  CHECK(ltl::check(th, init, toy_formula("O O [] ~ merge"), toy_eval()).status == Status::fulfilled);
}

TEST_CASE("verdicts agree with a naive product emptiness check on a small theory") {
  auto table = enumerate_formulas(2);
  std::vector<ltl::Formula> props = table.formulas;
  for (const char* extra : {"[] (merge -> O ~ p)", "[] <> zero", "<> [] ~ merge", "[] (q -> [] q)",
                            "(~ zero) U merge", "[] (p -> <> merge)", "<> (zero /\\ O zero)"}) {
    props.push_back(toy_formula(extra));
  }
  for (bool with_zero : {false, true}) {
    auto th = toy_theory(with_zero);
    for (const char* s : {"st(bag(item(1), item(2), item(3)), 0)", "st(bag(item(2), item(2)), 1)"}) {
      Term init = toy_state(th, s);
      for (const auto& f : props) {
        auto v = ltl::check(th, init, f, toy_eval());
        auto n = naive_check(th, init, f, toy_eval());
        INFO(f.str() << " from " << s);
        CHECK((v.status == Status::fulfilled) == n.holds);
        CHECK(v.status != Status::budget_exhausted);
      }
    }
  }
}

TEST_CASE("web verdicts agree with the naive product emptiness check") {
  auto tiny = web::parse_webapp(kTiny);
  for (const char* p : {"[] (ReqIni -> O ReqFin)", "[] <> ResFin", "<> [] ~ ReqIni", "[] curPage(b1, Home)",
                        "[] (ReqIni -> ~ curPage(b1, Home)) \\/ <> ScriptEval"}) {
    auto f = ltl::parse_property(tiny, p);
    INFO(p);
    CHECK((ltl::check_webapp(tiny, f).status == Status::fulfilled) ==
          naive_check(tiny.theory, tiny.initial, f, ltl::web_eval(tiny)).holds);
  }
  const auto& m = corpus("webmail-back.nav");
  for (const char* p : {"[] (curPage(carol, Logout) -> [] ~ curPage(carol, Inbox))", "[] ~ curPage(carol, Inbox)",
                        "[] <> curPage(carol, Welcome)", "[] (Back -> O ~ Back)"}) {
    auto f = ltl::parse_property(m, p);
    INFO(p);
    auto n = naive_check(m.theory, m.initial, f, ltl::web_eval(m));
    CHECK(n.states == 107);
    CHECK((ltl::check_webapp(m, f).status == Status::fulfilled) == n.holds);
  }
}

TEST_CASE("the fixed forum passes the naive product emptiness check") {
  const auto& m = corpus("forum-fixed.nav");
  auto n = naive_check(m.theory, m.initial, ltl::parse_property(m, kProperty), ltl::web_eval(m));
  CHECK(n.holds);
  CHECK(n.states == 74708);
}

TEST_CASE("the additional corpus applications are refuted") {
  const auto& mail = corpus("webmail-back.nav");
  auto f = ltl::parse_property(mail, "[] (curPage(carol, Logout) -> [] ~ curPage(carol, Inbox))");
  auto v = ltl::check_webapp(mail, f);
  REQUIRE(v.status == Status::refuted);
  CHECK(web::cur_page(v.trace.states.back(), "carol", "Inbox"));
  bool back = false;
  for (const auto& s : v.trace.steps) back = back || s.label == "Back";
  CHECK(back);

  const auto& shop = corpus("checkout-refresh.nav");
  auto g = ltl::parse_property(shop, "[] ~ curPage(dave, Error)");
  auto w = ltl::check_webapp(shop, g);
  REQUIRE(w.status == Status::refuted);
  CHECK(web::cur_page(w.trace.states.back(), "dave", "Error"));
  bool refresh = false;
  for (const auto& s : w.trace.steps) refresh = refresh || s.label == "Refresh";
  CHECK(refresh);
}
