// Matching modulo associativity, commutativity and identity.
#pragma once

#include <cstddef>
#include <vector>

#include "webtlr/term.hpp"

namespace webtlr {

class MatchLimitError : public Error {
 public:
  using Error::Error;
};

struct MatchOptions {
  // More distinct matchers than this is an error (guards against
  // combinatorial blowup).
  std::size_t cap = 256;
  // Stop after this many matchers (0 = enumerate all).  When set, the cap is
  // not enforced.
  std::size_t limit = 0;
};

// Every substitution σ with σ(pattern) =AC subject.  The subject must be
// ground and canonical; the pattern canonical.  Matchers are returned sorted
// and without duplicates.
std::vector<Substitution> match_modulo(const Signature& sig, const Term& pattern, const Term& subject,
                                       const MatchOptions& options = {});

// Extends `seed`: only matchers consistent with the seed bindings.
std::vector<Substitution> match_modulo(const Signature& sig, const Term& pattern, const Term& subject,
                                       const Substitution& seed, const MatchOptions& options);

bool matches(const Signature& sig, const Term& pattern, const Term& subject);

}  // namespace webtlr
