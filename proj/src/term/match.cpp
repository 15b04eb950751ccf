#include "webtlr/match.hpp"

#include <algorithm>
#include <set>
#include <variant>

namespace webtlr {

namespace {

struct Simple {
  Term pattern;
  Term subject;
};

struct AcRest {
  OpId op;
  std::vector<Term> patterns;
  std::vector<Term> subjects;  // sorted
};

using Goal = std::variant<Simple, AcRest>;

class AcMatcher {
 public:
  AcMatcher(const Signature& sig, const MatchOptions& options) : sig_(sig), options_(options) {}

  std::vector<Substitution> run(const Term& pattern, const Term& subject, Substitution seed) {
    std::vector<Goal> goals{Simple{pattern, subject}};
    sub_ = std::move(seed);
    solve(goals);
    return std::move(results_);
  }

 private:
  // Returns true when enumeration must stop.
  bool solve(std::vector<Goal>& goals) {
    if (goals.empty()) return record();
    Goal g = std::move(goals.back());
    goals.pop_back();
    bool stop = std::visit([&](auto& goal) { return step(goal, goals); }, g);
    goals.push_back(std::move(g));
    return stop;
  }

  bool record() {
    std::string key;
    for (const auto& [k, v] : sub_) key += k + "=" + v.str() + ";";
    if (!seen_.insert(key).second) return false;
    results_.push_back(sub_);
    if (options_.limit > 0) return results_.size() >= options_.limit;
    if (results_.size() > options_.cap) {
      throw MatchLimitError("more than " + std::to_string(options_.cap) + " AC matchers");
    }
    return false;
  }

  std::vector<Term> items_of(OpId f, const Term& t) const {
    if (t.op() == f) return {t.args().begin(), t.args().end()};
    OpId id = sig_.op(f).identity;
    if (id >= 0 && t.op() == id) return {};
    return {t};
  }

  bool bind_and_continue(const std::string& var, const Term& value, std::vector<Goal>& goals) {
    sub_.emplace(var, value);
    bool stop = solve(goals);
    sub_.erase(var);
    return stop;
  }

  bool step(Simple& g, std::vector<Goal>& goals) {
    const Term& p = g.pattern;
    const Term& s = g.subject;
    if (p.is_variable()) {
      if (auto it = sub_.find(p.symbol()); it != sub_.end()) {
        return it->second == s ? solve(goals) : false;
      }
      if (p.sort() != s.sort()) return false;
      return bind_and_continue(p.symbol(), s, goals);
    }
    if (p.is_ground()) return p == s ? solve(goals) : false;
    const auto& info = sig_.op(p.op());
    if (info.decl.is_ac()) {
      if (s.sort() != p.sort()) return false;
      goals.push_back(AcRest{p.op(), {p.args().begin(), p.args().end()}, items_of(p.op(), s)});
      bool stop = solve(goals);
      goals.pop_back();
      return stop;
    }
    if (s.op() != p.op() || s.arity() != p.arity()) return false;
    if (info.decl.comm) {
      for (int swap = 0; swap < 2; ++swap) {
        if (swap && s.arg(0) == s.arg(1)) break;
        goals.push_back(Simple{p.arg(1), s.arg(swap ? 0 : 1)});
        goals.push_back(Simple{p.arg(0), s.arg(swap ? 1 : 0)});
        bool stop = solve(goals);
        goals.pop_back();
        goals.pop_back();
        if (stop) return true;
      }
      return false;
    }
    std::size_t mark = goals.size();
    for (std::size_t i = p.arity(); i-- > 0;) goals.push_back(Simple{p.arg(i), s.arg(i)});
    bool stop = solve(goals);
    goals.resize(mark);
    return stop;
  }

  bool step(AcRest& g, std::vector<Goal>& goals) {
    if (g.patterns.empty()) return g.subjects.empty() ? solve(goals) : false;
    // Rigid (non-variable) pattern arguments first.
    for (std::size_t pi = 0; pi < g.patterns.size(); ++pi) {
      if (g.patterns[pi].is_variable()) continue;
      Term p = g.patterns[pi];
      AcRest rest{g.op, g.patterns, {}};
      rest.patterns.erase(rest.patterns.begin() + static_cast<long>(pi));
      for (std::size_t si = 0; si < g.subjects.size(); ++si) {
        if (si > 0 && g.subjects[si] == g.subjects[si - 1]) continue;
        if (p.is_ground() && !(p == g.subjects[si])) continue;
        if (!p.is_ground() && p.op() != g.subjects[si].op() && !sig_.op(p.op()).decl.is_ac()) continue;
        rest.subjects = g.subjects;
        rest.subjects.erase(rest.subjects.begin() + static_cast<long>(si));
        goals.push_back(rest);
        goals.push_back(Simple{p, g.subjects[si]});
        bool stop = solve(goals);
        goals.pop_back();
        goals.pop_back();
        if (stop) return true;
      }
      return false;
    }
    // Only variables remain.
    Term v = g.patterns.front();
    std::vector<Term> others(g.patterns.begin() + 1, g.patterns.end());
    if (auto it = sub_.find(v.symbol()); it != sub_.end()) {
      auto need = items_of(g.op, it->second);
      std::vector<Term> remaining = g.subjects;
      for (const auto& n : need) {
        auto f = std::find(remaining.begin(), remaining.end(), n);
        if (f == remaining.end()) return false;
        remaining.erase(f);
      }
      goals.push_back(AcRest{g.op, std::move(others), std::move(remaining)});
      bool stop = solve(goals);
      goals.pop_back();
      return stop;
    }
    const auto& info = sig_.op(g.op);
    if (v.sort() != info.result) return false;
    const bool allow_empty = info.identity >= 0;
    if (others.empty()) {
      if (g.subjects.empty() && !allow_empty) return false;
      return bind_and_continue(v.symbol(), combine(g.op, g.subjects), goals);
    }
    // Enumerate sub-multisets by choosing a count for each distinct value.
    std::vector<std::pair<Term, std::size_t>> groups;
    for (const auto& s : g.subjects) {
      if (!groups.empty() && groups.back().first == s) {
        ++groups.back().second;
      } else {
        groups.push_back({s, 1});
      }
    }
    std::vector<std::size_t> take(groups.size(), 0);
    for (;;) {
      std::vector<Term> chosen;
      std::vector<Term> remaining;
      for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t c = 0; c < groups[i].second; ++c) {
          (c < take[i] ? chosen : remaining).push_back(groups[i].first);
        }
      }
      if (!chosen.empty() || allow_empty) {
        goals.push_back(AcRest{g.op, others, std::move(remaining)});
        bool stop = bind_and_continue(v.symbol(), combine(g.op, chosen), goals);
        goals.pop_back();
        if (stop) return true;
      }
      std::size_t i = 0;
      while (i < take.size() && take[i] == groups[i].second) take[i++] = 0;
      if (i == take.size()) break;
      ++take[i];
    }
    return false;
  }

  Term combine(OpId f, const std::vector<Term>& items) const {
    if (items.empty()) return Term::make(sig_, sig_.op(f).identity, {});
    if (items.size() == 1) return items.front();
    return Term::make(sig_, f, items);
  }

  const Signature& sig_;
  const MatchOptions& options_;
  Substitution sub_;
  std::vector<Substitution> results_;
  std::set<std::string> seen_;
};

bool substitution_less(const Substitution& a, const Substitution& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return term_less(x.second, y.second);
  });
}

}  // namespace

std::vector<Substitution> match_modulo(const Signature& sig, const Term& pattern, const Term& subject,
                                       const Substitution& seed, const MatchOptions& options) {
  AcMatcher m(sig, options);
  auto out = m.run(pattern, subject, seed);
  std::sort(out.begin(), out.end(), substitution_less);
  return out;
}

std::vector<Substitution> match_modulo(const Signature& sig, const Term& pattern, const Term& subject,
                                       const MatchOptions& options) {
  return match_modulo(sig, pattern, subject, Substitution{}, options);
}

bool matches(const Signature& sig, const Term& pattern, const Term& subject) {
  MatchOptions o;
  o.limit = 1;
  return !match_modulo(sig, pattern, subject, Substitution{}, o).empty();
}

}  // namespace webtlr
