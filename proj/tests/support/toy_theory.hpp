// A bag-of-numbers theory used by the rewrite and slicer tests.
#pragma once

#include <string>

#include "webtlr/rewrite.hpp"

namespace webtlr::testing {

inline long nat_value(const Term& t) { return std::stol(t.symbol()); }

inline Term nat(const Signature& sig, long v) { return Term::literal(sig, sig.sort("Nat"), std::to_string(v)); }

// st(bag, counter).  `merge` picks two items with N < M, replaces them by
// their sum and increments the counter; `zero` resets any item other than 0.
inline Theory toy_theory(bool with_zero = true) {
  Signature sig;
  sig.add_sort("Nat", true);
  sig.add_sort("Bag");
  sig.add_sort("State");
  sig.add_op({"none", {}, "Bag", false, false, true, ""});
  sig.add_op({"item", {"Nat"}, "Bag", false, false, true, ""});
  sig.add_op({"bag", {"Bag", "Bag"}, "Bag", true, true, true, "none"});
  sig.add_op({"st", {"Bag", "Nat"}, "State", false, false, true, ""});
  sig.add_op({"add", {"Nat", "Nat"}, "Nat", false, false, false, ""});
  sig.add_op({"inc", {"Nat"}, "Nat", false, false, false, ""});
  sig.validate();
  Theory th(std::move(sig));
  th.add_builtin("add", [](const Signature& s, std::span<const Term> in) {
    BuiltinResult r{nat(s, nat_value(in[0]) + nat_value(in[1])), {}};
    r.deps.derive(Position{}, {Position{1}, Position{2}});
    return r;
  });
  th.add_builtin("inc", [](const Signature& s, std::span<const Term> in) {
    if (nat_value(in[0]) >= 50) throw BuiltinError("counter overflow");
    BuiltinResult r{nat(s, nat_value(in[0]) + 1), {}};
    r.deps.derive(Position{}, {Position{1}});
    return r;
  });
  th.add_predicate("lt", [](const Signature&, std::span<const Term> a) { return nat_value(a[0]) < nat_value(a[1]); });
  th.add_predicate("nonzero", [](const Signature&, std::span<const Term> a) { return nat_value(a[0]) != 0; });
  const auto& g = th.sig();
  ParseOptions o;
  o.variables = {{"N", g.sort("Nat")}, {"M", g.sort("Nat")}, {"K", g.sort("Nat")},
                 {"S", g.sort("Nat")}, {"K2", g.sort("Nat")}, {"B", g.sort("Bag")}};
  Rule merge{"merge", parse_term("st(bag(item(N), item(M), B), K)", g, o),
             parse_term("st(bag(item(S), B), K2)", g, o), {}, true, {}};
  merge.conditions.push_back(BoolTest{"lt", {Term::variable(g, "N", g.sort("Nat")), Term::variable(g, "M", g.sort("Nat"))}});
  merge.conditions.push_back(
      Computation{"S", "add", {Term::variable(g, "N", g.sort("Nat")), Term::variable(g, "M", g.sort("Nat"))}});
  merge.conditions.push_back(Computation{"K2", "inc", {Term::variable(g, "K", g.sort("Nat"))}});
  th.add_rule(std::move(merge));
  if (with_zero) {
    Rule zero{"zero", parse_term("item(N)", g, o), parse_term("item(0)", g, o), {}, false, {}};
    zero.conditions.push_back(BoolTest{"nonzero", {Term::variable(g, "N", g.sort("Nat"))}});
    th.add_rule(std::move(zero));
  }
  return th;
}

}  // namespace webtlr::testing
