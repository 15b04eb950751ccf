// Semantic LTL evaluation on lasso words and exhaustive enumeration of small
// formulas and lassos.  Independent of the automaton construction.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "webtlr/ltl.hpp"

namespace webtlr::testing {

using ltl::Formula;
using ltl::Letter;
using ltl::Op;

struct Lasso {
  std::vector<Letter> stem;
  std::vector<Letter> cycle;

  std::size_t size() const { return stem.size() + cycle.size(); }
  Letter at(std::size_t i) const { return i < stem.size() ? stem[i] : cycle[i - stem.size()]; }
};

// Every lasso with a nonempty cycle, |stem| + |cycle| <= max_len, over
// letters 0 .. letters-1.
inline std::vector<Lasso> all_lassos(std::size_t max_len, Letter letters) {
  std::vector<Lasso> out;
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= letters;
    for (std::size_t stem = 0; stem < len; ++stem) {
      for (std::size_t code = 0; code < total; ++code) {
        Lasso l;
        std::size_t c = code;
        for (std::size_t i = 0; i < len; ++i) {
          Letter x = c % letters;
          c /= letters;
          (i < stem ? l.stem : l.cycle).push_back(x);
        }
        out.push_back(std::move(l));
      }
    }
  }
  return out;
}

// Formulas as a DAG: entries refer to earlier entries.  Atom k is letter
// bit k.
struct FormulaTable {
  struct Entry {
    Op op;
    int a = -1;
    int b = -1;
    int atom = -1;
    int ops = 0;       // operator count
    int temporal = 0;  // temporal operator count
  };
  std::vector<Entry> entries;
  std::vector<Formula> formulas;

  int add(Entry e, Formula f) {
    entries.push_back(e);
    formulas.push_back(std::move(f));
    return static_cast<int>(entries.size() - 1);
  }
};

// All formulas over the atoms p, q (and, with constants, true/false) with
// at most `max_ops` operators among ~ O [] <> U /\ \/ ->.
inline FormulaTable enumerate_formulas(int max_ops, bool constants = false) {
  FormulaTable t;
  std::vector<std::vector<int>> by_ops(static_cast<std::size_t>(max_ops) + 1);
  const char* names[] = {"p", "q"};
  for (int k = 0; k < 2; ++k) {
    ltl::Atom a;
    a.name = names[k];
    by_ops[0].push_back(t.add({Op::atom, -1, -1, k, 0, 0}, Formula::of(a)));
  }
  if (constants) {
    by_ops[0].push_back(t.add({Op::tt}, Formula::make(Op::tt)));
    by_ops[0].push_back(t.add({Op::ff}, Formula::make(Op::ff)));
  }
  int tt = -1;
  auto truth = [&] {
    if (tt < 0) tt = t.add({Op::tt}, Formula::make(Op::tt));
    return tt;
  };
  for (int n = 1; n <= max_ops; ++n) {
    for (Op op : {Op::neg, Op::next, Op::always}) {
      for (int x : by_ops[n - 1]) {
        int temporal = t.entries[x].temporal + (op == Op::neg ? 0 : 1);
        by_ops[n].push_back(
            t.add({op, x, -1, -1, n, temporal}, Formula::make(op, {t.formulas[x]})));
      }
    }
    // <> f, stored as true U f.
    for (int x : by_ops[n - 1]) {
      int one = truth();
      by_ops[n].push_back(t.add({Op::until, one, x, -1, n, t.entries[x].temporal + 1},
                                Formula::make(Op::until, {Formula::make(Op::tt), t.formulas[x]})));
    }
    for (Op op : {Op::until, Op::conj, Op::disj, Op::implies}) {
      for (int i = 0; i <= n - 1; ++i) {
        for (int x : by_ops[static_cast<std::size_t>(i)]) {
          for (int y : by_ops[static_cast<std::size_t>(n - 1 - i)]) {
            int temporal = t.entries[x].temporal + t.entries[y].temporal + (op == Op::until ? 1 : 0);
            by_ops[n].push_back(t.add({op, x, y, -1, n, temporal},
                                      Formula::make(op, {t.formulas[x], t.formulas[y]})));
          }
        }
      }
    }
  }
  return t;
}

// Truth of every table entry at every position of a lasso, as position
// bitmasks (bit i = position i).  Fixpoints follow the standard lasso
// semantics: U is a least fixpoint, [] and R are greatest fixpoints.
class LassoEvaluator {
 public:
  explicit LassoEvaluator(const Lasso& l) : lasso_(l), len_(l.size()) {
    all_ = len_ == 64 ? ~0ull : (1ull << len_) - 1;
  }

  std::uint64_t shift(std::uint64_t v) const {
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < len_; ++i) {
      std::size_t j = i + 1 < len_ ? i + 1 : lasso_.stem.size();
      if (v >> j & 1) out |= 1ull << i;
    }
    return out;
  }

  std::uint64_t atom(int k) const {
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < len_; ++i) {
      if (lasso_.at(i) >> k & 1) out |= 1ull << i;
    }
    return out;
  }

  std::uint64_t eval(Op op, std::uint64_t a, std::uint64_t b) const {
    switch (op) {
      case Op::tt:
        return all_;
      case Op::ff:
        return 0;
      case Op::neg:
        return all_ & ~a;
      case Op::conj:
        return a & b;
      case Op::disj:
        return a | b;
      case Op::implies:
        return (all_ & ~a) | b;
      case Op::next:
        return shift(a);
      case Op::always: {
        std::uint64_t v = all_;
        for (std::size_t k = 0; k <= len_; ++k) v = a & shift(v);
        return v;
      }
      case Op::until: {
        std::uint64_t v = 0;
        for (std::size_t k = 0; k <= len_; ++k) v = b | (a & shift(v));
        return v;
      }
      case Op::release: {
        std::uint64_t v = all_;
        for (std::size_t k = 0; k <= len_; ++k) v = b & (a | shift(v));
        return v;
      }
      case Op::atom:
        break;
    }
    return 0;
  }

  std::vector<std::uint64_t> eval_table(const FormulaTable& t) const {
    std::vector<std::uint64_t> v(t.entries.size());
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
      const auto& e = t.entries[i];
      if (e.op == Op::atom) {
        v[i] = atom(e.atom);
      } else {
        v[i] = eval(e.op, e.a >= 0 ? v[static_cast<std::size_t>(e.a)] : 0, e.b >= 0 ? v[static_cast<std::size_t>(e.b)] : 0);
      }
    }
    return v;
  }

  // Truth at position 0 of an arbitrary formula whose atoms are indexed by
  // `atom_bits`.
  std::uint64_t eval_formula(const Formula& f, const std::map<std::string, int>& atom_bits) const {
    if (f.op == Op::atom) return atom(atom_bits.at(f.atom.str()));
    std::uint64_t a = f.args.size() > 0 ? eval_formula(f.args[0], atom_bits) : 0;
    std::uint64_t b = f.args.size() > 1 ? eval_formula(f.args[1], atom_bits) : 0;
    return eval(f.op, a, b);
  }

  bool holds(const Formula& f, const std::map<std::string, int>& atom_bits) const {
    return eval_formula(f, atom_bits) & 1;
  }

 private:
  const Lasso& lasso_;
  std::size_t len_;
  std::uint64_t all_;
};

// Letters of a lasso over the table atoms p (bit 0), q (bit 1), re-indexed
// to the automaton's atom order.
inline Letter to_automaton_letter(Letter l, const ltl::Automaton& a) {
  Letter out = 0;
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    int k = a.atoms[i].name == "p" ? 0 : 1;
    if (l >> k & 1) out |= Letter{1} << i;
  }
  return out;
}

// Reference acceptance: breadth-first search of the product of the
// automaton with the lasso positions, then a cycle search from every
// reachable accepting node.
inline bool naive_accepts(const ltl::Automaton& a, const Lasso& l) {
  std::size_t len = l.size();
  auto next_pos = [&](std::size_t i) { return i + 1 < len ? i + 1 : l.stem.size(); };
  auto succ = [&](int q, std::size_t i) {
    std::vector<std::pair<int, std::size_t>> out;
    std::size_t j = next_pos(i);
    for (int r : a.states[static_cast<std::size_t>(q)].next) {
      if (a.admits(r, l.at(j))) out.push_back({r, j});
    }
    return out;
  };
  std::vector<std::pair<int, std::size_t>> reach, frontier;
  std::vector<std::vector<bool>> seen(a.states.size(), std::vector<bool>(len, false));
  for (int q : a.initial) {
    if (a.admits(q, l.at(0))) {
      seen[static_cast<std::size_t>(q)][0] = true;
      frontier.push_back({q, 0});
    }
  }
  while (!frontier.empty()) {
    auto x = frontier.back();
    frontier.pop_back();
    reach.push_back(x);
    for (auto y : succ(x.first, x.second)) {
      if (!seen[static_cast<std::size_t>(y.first)][y.second]) {
        seen[static_cast<std::size_t>(y.first)][y.second] = true;
        frontier.push_back(y);
      }
    }
  }
  for (auto x : reach) {
    if (!a.states[static_cast<std::size_t>(x.first)].accepting) continue;
    std::vector<std::vector<bool>> inner(a.states.size(), std::vector<bool>(len, false));
    std::vector<std::pair<int, std::size_t>> work = succ(x.first, x.second);
    while (!work.empty()) {
      auto y = work.back();
      work.pop_back();
      if (y == x) return true;
      if (inner[static_cast<std::size_t>(y.first)][y.second]) continue;
      inner[static_cast<std::size_t>(y.first)][y.second] = true;
      for (auto z : succ(y.first, y.second)) work.push_back(z);
    }
  }
  return false;
}

}  // namespace webtlr::testing
