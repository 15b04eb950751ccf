// Corpus access and random state-space walks for the webapp-level tests.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "webtlr/webapp.hpp"

namespace webtlr::testing {

inline std::string corpus_path(const std::string& name) { return std::string(WEBTLR_CORPUS_DIR) + "/" + name; }

inline const web::WebModel& corpus(const std::string& name) {
  static std::map<std::string, web::WebModel> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, web::load_webapp(corpus_path(name))).first;
  return it->second;
}

// States visited by `walks` random runs of at most `length` steps each.
inline std::vector<Term> random_states(const Theory& th, const Term& initial, std::mt19937& rng, int walks,
                                       int length) {
  std::vector<Term> out;
  for (int w = 0; w < walks; ++w) {
    Term s = initial;
    out.push_back(s);
    for (int i = 0; i < length; ++i) {
      auto next = successors(th, s);
      if (next.empty()) break;
      s = next[std::uniform_int_distribution<std::size_t>(0, next.size() - 1)(rng)].target;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace webtlr::testing
