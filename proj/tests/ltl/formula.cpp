#include <random>

#include "doctest.h"
#include "forum.hpp"
#include "ltl_oracle.hpp"

using namespace webtlr;
using namespace webtlr::testing;
using ltl::parse_formula;

namespace {

const std::map<std::string, int> kBits{{"p", 0}, {"q", 1}};

std::vector<Letter> translate(const std::vector<Letter>& w, const ltl::Automaton& a) {
  std::vector<Letter> out;
  for (Letter l : w) out.push_back(to_automaton_letter(l, a));
  return out;
}

// Number of lassos on which automaton acceptance and semantic evaluation
// disagree.
std::size_t disagreements(const Formula& f, const std::vector<Lasso>& lassos) {
  auto a = ltl::to_buchi(f);
  ltl::LassoAcceptor acc(a);
  std::size_t bad = 0;
  for (const auto& l : lassos) {
    bool expected = LassoEvaluator(l).holds(f, kBits);
    if (acc.accepts(translate(l.stem, a), translate(l.cycle, a)) != expected) ++bad;
  }
  return bad;
}

}  // namespace

TEST_CASE("parse the mutual exclusion property") {
  auto f = parse_formula("[] ~ (curPage(bidAlfred, Admin) /\\ curPage(bidAnna, Admin))");
  CHECK(f.tree() == "□(¬(∧(curPage(bidAlfred,Admin), curPage(bidAnna,Admin))))");
  CHECK(parse_formula("[]~(curPage(bidAlfred,Admin)/\\curPage(bidAnna,Admin))") == f);
  CHECK(parse_formula("□¬(curPage(bidAlfred,Admin) ∧ curPage(bidAnna,Admin))") == f);
  CHECK(parse_formula(f.str()) == f);
}

TEST_CASE("parse trivial formulas and abbreviations") {
  CHECK(parse_formula("[] true").tree() == "□(true)");
  CHECK(parse_formula("<> p") == parse_formula("true U p"));
  CHECK(parse_formula("<> p").tree() == "U(true, p)");
  CHECK(parse_formula("O false").tree() == "○(false)");
}

TEST_CASE("operator precedence and associativity") {
  CHECK(parse_formula("~p U q /\\ r \\/ s -> t").tree() == "→(∨(∧(U(¬(p), q), r), s), t)");
  CHECK(parse_formula("p U q U r").tree() == "U(p, U(q, r))");
  CHECK(parse_formula("p -> q -> r").tree() == "→(p, →(q, r))");
  CHECK(parse_formula("p /\\ q /\\ r").tree() == "∧(∧(p, q), r)");
  CHECK(parse_formula("[] <> p").tree() == "□(U(true, p))");
  CHECK(parse_formula("~[]p U q").tree() == "U(¬(□(p)), q)");
  CHECK(parse_formula("ReqIni-2 -> O Add-Comment").tree() == "→(ReqIni-2, ○(Add-Comment))");
}

TEST_CASE("formula syntax errors") {
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("p q"), ParseError);
  CHECK_THROWS_AS(parse_formula("p /\\"), ParseError);
  CHECK_THROWS_AS(parse_formula("curPage(a,)"), ParseError);
  try {
    parse_formula("[] (p\n  /\\ q");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 7);
  }
}

TEST_CASE("atoms resolve against the web model") {
  const auto& m = corpus("forum-buggy.nav");
  auto f = ltl::parse_property(m, "[] (ReqIni -> ~annaAdmin) \\/ <> curPage(bidAnna, Admin)");
  auto atoms = ltl::atoms_of(f);
  REQUIRE(atoms.size() == 3);
  std::map<std::string, ltl::Atom::Kind> kinds;
  for (const auto& a : atoms) kinds[a.name] = a.kind;
  CHECK(kinds["ReqIni"] == ltl::Atom::Kind::label);
  CHECK(kinds["annaAdmin"] == ltl::Atom::Kind::state);
  CHECK(kinds["curPage"] == ltl::Atom::Kind::state);
  CHECK_THROWS_WITH_AS(ltl::parse_property(m, "[] curPage(bidAnna)"), doctest::Contains("unknown predicate"), Error);
  CHECK_THROWS_WITH_AS(ltl::parse_property(m, "[] adminBusy"), doctest::Contains("unknown predicate"), Error);
  CHECK(ltl::label_matches("ReqIni", "ReqIni-3"));
  CHECK_FALSE(ltl::label_matches("ResFin", "ResFinStale"));
  CHECK_FALSE(ltl::label_matches("ReqIni", "ReqIni-"));
}

TEST_CASE("negation normal form keeps the lasso semantics") {
  auto table = enumerate_formulas(2, true);
  auto lassos = all_lassos(4, 4);
  for (const auto& f : table.formulas) {
    auto g = ltl::nnf(f);
    bool neg_only_on_atoms = true;
    std::function<void(const Formula&)> walk = [&](const Formula& x) {
      if (x.op == Op::neg && x.args[0].op != Op::atom) neg_only_on_atoms = false;
      if (x.op == Op::implies || x.op == Op::always) neg_only_on_atoms = false;
      for (const auto& y : x.args) walk(y);
    };
    walk(g);
    CHECK(neg_only_on_atoms);
    for (const auto& l : lassos) {
      LassoEvaluator ev(l);
      CHECK(ev.holds(f, kBits) == ev.holds(g, kBits));
    }
  }
}

TEST_CASE("automaton for the negation of always true is empty") {
  auto a = ltl::to_buchi(parse_formula("~ [] true"));
  CHECK(a.states.empty());
  CHECK(a.initial.empty());
  CHECK_FALSE(ltl::to_buchi(parse_formula("[] true")).states.empty());
  CHECK(ltl::to_buchi(parse_formula("false")).states.empty());
  CHECK(ltl::to_buchi(parse_formula("p /\\ ~p")).states.empty());
}

TEST_CASE("negated always over one atom matches the lasso oracle") {
  auto lassos = all_lassos(6, 2);
  CHECK(lassos.size() == 2 + 8 + 24 + 64 + 160 + 384);
  CHECK(disagreements(parse_formula("~ [] p"), lassos) == 0);
}

TEST_CASE("negated until over two atoms matches the lasso oracle") {
  CHECK(disagreements(parse_formula("~ (p U q)"), all_lassos(5, 4)) == 0);
}

TEST_CASE("all formulas with at most two operators match the lasso oracle") {
  auto table = enumerate_formulas(2, true);
  auto lassos = all_lassos(6, 4);
  std::size_t bad = 0;
  for (const auto& f : table.formulas) {
    std::size_t d = disagreements(f, lassos);
    if (d) MESSAGE(f.str() << ": " << d << " disagreements");
    bad += d;
  }
  CHECK(bad == 0);
}

TEST_CASE("cached acceptance agrees with a naive product search") {
  auto table = enumerate_formulas(3);
  auto lassos = all_lassos(6, 4);
  std::mt19937 rng(5);
  std::uniform_int_distribution<std::size_t> pick_f(0, table.formulas.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_l(0, lassos.size() - 1);
  for (int i = 0; i < 300; ++i) {
    const auto& f = table.formulas[pick_f(rng)];
    auto a = ltl::to_buchi(f);
    ltl::LassoAcceptor acc(a);
    for (int j = 0; j < 100; ++j) {
      const auto& l = lassos[pick_l(rng)];
      Lasso t{translate(l.stem, a), translate(l.cycle, a)};
      CHECK(acc.accepts(t.stem, t.cycle) == naive_accepts(a, t));
      CHECK(ltl::accepts(a, t.stem, t.cycle) == naive_accepts(a, t));
    }
  }
}

TEST_CASE("universal states accept every continuation") {
  auto table = enumerate_formulas(2);
  auto lassos = all_lassos(3, 4);
  for (const auto& f : table.formulas) {
    auto a = ltl::to_buchi(f);
    for (std::size_t s = 0; s < a.states.size(); ++s) {
      if (!a.states[s].universal) continue;
      // Start the automaton in s by making it the only initial state.
      ltl::Automaton b = a;
      b.initial = {static_cast<int>(s)};
      for (const auto& l : lassos) CHECK(ltl::accepts(b, translate(l.stem, a), translate(l.cycle, a)));
    }
  }
}
