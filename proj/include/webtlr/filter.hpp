// Filtering patterns and sliced terms.
//
// A filtering pattern is a term-shaped query: `?` keeps the matched subterm
// as relevant, `_` marks it irrelevant, and every name matches any operator
// of the same arity whose symbol contains it as a substring.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "webtlr/term.hpp"

namespace webtlr {

struct FilterPattern {
  enum class Kind { relevant, blank, name };
  Kind kind = Kind::name;
  std::string fragment;
  std::vector<FilterPattern> args;

  std::string str() const;
};

// Throws ParseError on syntax errors and Error for an all-`_` pattern.
FilterPattern parse_filter(std::string_view text);

using PositionSet = std::set<Position>;

PositionSet ancestor_closure(const PositionSet& positions);

// A term with some subterms erased.  `kept` is prefix-closed; every
// position of `original` outside it is covered by a hole, which keeps the
// erased subterm's sort (recoverable from `original`).
struct SlicedTerm {
  Term original;
  PositionSet kept;

  bool is_hole(const Position& p) const { return !kept.count(p); }
  // Maximal hole positions.
  std::vector<Position> holes() const;
  // |kept| + number of maximal holes.
  std::size_t symbol_count() const;
  // Holes rendered as `hole`; with `compress`, adjacent sibling holes under
  // an AC operator collapse into one.
  std::string render(const Signature& sig, std::string_view hole = "*", bool compress = true) const;
  // Holes replaced by fresh variables named `<prefix><n>`.  With
  // `merge_ac_holes`, all hole arguments of one AC node share one variable.
  Term to_pattern(const Signature& sig, const std::string& prefix = "%H", bool merge_ac_holes = true) const;

  static SlicedTerm all_holes(const Term& t) { return {t, {}}; }
  static SlicedTerm full(const Term& t);
};

struct FilterResult {
  SlicedTerm slice;
  PositionSet criterion;
};

FilterResult filter_match(const FilterPattern& fp, const Term& subject);

// Name-fragment semantics on a single node.
bool fragment_matches(const std::string& fragment, const Term& node);

}  // namespace webtlr
