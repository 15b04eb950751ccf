// Canonical (flattened) forms for AC operators and the position
// bookkeeping that relates a non-canonical term to its canonical form.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "webtlr/term.hpp"

namespace webtlr {

// Correspondence between an unflattened term and its canonical form.  Every
// node of the unflattened term is covered by exactly one entry, either
// directly or because it lies inside a `copy` entry's subtree:
//   copy      the subtree at `unflat` is identical to the subtree at `flat`;
//   node      an operator node `op`/`arity` that maps to `flat` (used for
//             reassociated AC nodes and for nodes whose children moved);
//   identity  an identity element absorbed by flattening (no flat image).
struct PermutationEntry {
  enum class Kind { copy, node, identity };
  Kind kind = Kind::copy;
  Position unflat;
  std::optional<Position> flat;
  std::string op;
  std::uint32_t arity = 0;

  bool operator==(const PermutationEntry&) const = default;
};

struct PermutationRecord {
  std::vector<PermutationEntry> entries;  // sorted by unflat position

  std::optional<Position> to_flat(const Position& unflat) const;
  std::optional<Position> to_unflat(const Position& flat) const;
  Term rebuild_unflat(const Signature& sig, const Term& flat) const;
  bool is_identity() const;

  bool operator==(const PermutationRecord&) const = default;
};

struct TrackedFlatten {
  Term canonical;
  PermutationRecord record;  // unflat side = the input term
};

// Absorbs identities, merges nested applications of the same AC operator and
// sorts AC arguments by term_less.  Idempotent.
Term flatten(const Signature& sig, const Term& t);
TrackedFlatten flatten_tracked(const Signature& sig, const Term& t);

struct Unflattened {
  Term term;
  PermutationRecord record;  // unflat side = `term`
};

// Returns `shape` (which must be AC-equal to the canonical `t`) together with
// its position record.  Without a shape, the root AC node is rebuilt as a
// left comb.  Throws Error when the argument multisets differ.
Unflattened unflatten(const Signature& sig, const Term& t, const std::optional<Term>& shape = std::nullopt);

bool ac_equal(const Signature& sig, const Term& a, const Term& b);

}  // namespace webtlr
