#include <doctest.h>

#include "ac_oracle.hpp"

using namespace webtlr;
using namespace webtlr::testing;

TEST_CASE("flatten is idempotent on random terms") {
  auto sig = small_signature();
  std::mt19937 rng(11);
  for (int i = 0; i < 400; ++i) {
    int leaves = 0;
    Term t = random_raw(sig, rng, 5, leaves, 10);
    Term f = flatten(sig, t);
    CHECK(flatten(sig, f) == f);
    CHECK(f.is_canonical());
    auto tf = flatten_tracked(sig, t);
    CHECK(tf.canonical == f);
    CHECK(tf.record.rebuild_unflat(sig, f) == t);
    for (const auto& q : positions(t)) {
      // Collapsed AC nodes map onto their single surviving argument.
      auto img = tf.record.to_flat(q);
      if (img && !sig.op(subterm_at(t, q).op()).decl.is_ac()) {
        CHECK(subterm_at(f, *img).symbol() == subterm_at(t, q).symbol());
      }
    }
  }
}

TEST_CASE("canonical equality agrees with brute-force AC equivalence") {
  auto sig = small_signature();
  std::mt19937 rng(12);
  int equal = 0;
  for (int i = 0; i < 500; ++i) {
    int leaves = 0;
    Term a = random_raw(sig, rng, 4, leaves, 6);
    Term b;
    if (i % 2) {
      b = shuffle_ac(sig, a, rng);
    } else {
      leaves = 0;
      b = random_raw(sig, rng, 4, leaves, 6);
    }
    bool expected = brute_ac_equal(sig, a, b);
    equal += expected;
    CHECK_MESSAGE(ac_equal(sig, a, b) == expected, a.str() << " vs " << b.str());
  }
  CHECK(equal >= 250);
}

TEST_CASE("match_modulo agrees with brute-force partition enumeration") {
  auto sig = small_signature();
  std::mt19937 rng(13);
  std::size_t nonempty = 0;
  for (int i = 0; i < 500; ++i) {
    auto mc = random_match_case(sig, rng);
    auto expected = brute_match(sig, mc.op, mc.pargs, mc.subject);
    nonempty += !expected.empty();
    CHECK_MESSAGE(engine_match(sig, mc.pattern, mc.subject) == expected,
                  mc.pattern.str() << " against " << mc.subject.str());
  }
  CHECK(nonempty >= 100);
}

TEST_CASE("match_modulo basics") {
  auto sig = small_signature();
  auto T = sig.sort("T");
  auto x = Term::variable(sig, "X", T);
  auto t = p(sig, "h(a,k(b))");
  auto m = match_modulo(sig, x, t);
  REQUIRE(m.size() == 1);
  CHECK(m[0].at("X") == t);

  ParseOptions o;
  o.variables = {{"X", T}, {"Y", T}};
  auto pat = parse_term("f(X, b)", sig, o);
  auto subj = p(sig, "f(a,b,b,c)");
  auto ms = match_modulo(sig, pat, subj);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].at("X").str() == "f(a,b,c)");

  auto free = match_modulo(sig, parse_term("h(X, Y)", sig, o), p(sig, "h(a,b)"));
  REQUIRE(free.size() == 1);
  CHECK(render(free[0]) == "{X |-> a, Y |-> b}");

  CHECK(match_modulo(sig, parse_term("f(X, Y)", sig, o), p(sig, "f(a,b,c)")).size() == 6);
  CHECK(match_modulo(sig, parse_term("g(X, Y)", sig, o), p(sig, "a")).size() == 2);
  CHECK(match_modulo(sig, parse_term("f(X, Y)", sig, o), p(sig, "a")).empty());
  CHECK(match_modulo(sig, parse_term("c2(X, a)", sig, o), p(sig, "c2(a,b)")).size() == 1);
}

TEST_CASE("match_modulo limit and cap") {
  auto sig = small_signature();
  ParseOptions o;
  o.variables = {{"X", sig.sort("T")}, {"Y", sig.sort("T")}};
  auto pat = parse_term("f(X, Y)", sig, o);
  auto subj = p(sig, "f(a,b,c,d,k(a),k(b),k(c),k(d),k(u))");
  MatchOptions limited;
  limited.limit = 1;
  CHECK(match_modulo(sig, pat, subj, limited).size() == 1);
  CHECK_THROWS_AS(match_modulo(sig, pat, subj), MatchLimitError);
}
