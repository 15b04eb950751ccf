#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "webtlr/ltl.hpp"

namespace webtlr::ltl {

namespace {

class Table {
 public:
  int id(const Formula& f) {
    auto key = f.str();
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    formulas_.push_back(f);
    ids_.emplace(key, static_cast<int>(formulas_.size() - 1));
    return static_cast<int>(formulas_.size() - 1);
  }
  const Formula& at(int id) const { return formulas_[id]; }
  std::size_t size() const { return formulas_.size(); }

 private:
  std::vector<Formula> formulas_;
  std::map<std::string, int> ids_;
};

struct Node {
  std::set<int> incoming;
  std::set<int> fresh;
  std::set<int> old;
  std::set<int> next;
};

constexpr int kInit = -1;

class Tableau {
 public:
  explicit Tableau(const Formula& f) {
    Node n;
    n.incoming = {kInit};
    n.fresh = {table.id(f)};
    expand(std::move(n));
  }

  Table table;
  std::vector<Node> nodes;

 private:
  int complement(const Formula& lit) {
    if (lit.op == Op::atom) return table.id(Formula::make(Op::neg, {lit}));
    return table.id(lit.args[0]);
  }
  void add(Node& n, const Formula& f) {
    int id = table.id(f);
    if (!n.old.count(id)) n.fresh.insert(id);
  }
  void expand(Node n) {
    if (n.fresh.empty()) {
      for (auto& m : nodes) {
        if (m.old == n.old && m.next == n.next) {
          m.incoming.insert(n.incoming.begin(), n.incoming.end());
          return;
        }
      }
      int id = static_cast<int>(nodes.size());
      std::set<int> next = n.next;
      nodes.push_back(std::move(n));
      Node succ;
      succ.incoming = {id};
      succ.fresh = next;
      expand(std::move(succ));
      return;
    }
    int e = *n.fresh.begin();
    n.fresh.erase(n.fresh.begin());
    if (n.old.count(e)) return expand(std::move(n));
    Formula f = table.at(e);
    switch (f.op) {
      case Op::ff:
        return;
      case Op::tt:
        n.old.insert(e);
        return expand(std::move(n));
      case Op::atom:
      case Op::neg:
        if (n.old.count(complement(f))) return;
        n.old.insert(e);
        return expand(std::move(n));
      case Op::conj:
        n.old.insert(e);
        add(n, f.args[0]);
        add(n, f.args[1]);
        return expand(std::move(n));
      case Op::next:
        n.old.insert(e);
        n.next.insert(table.id(f.args[0]));
        return expand(std::move(n));
      case Op::disj:
      case Op::until:
      case Op::release: {
        n.old.insert(e);
        Node a = n;
        Node b = std::move(n);
        if (f.op == Op::disj) {
          add(a, f.args[0]);
          add(b, f.args[1]);
        } else if (f.op == Op::until) {
          add(a, f.args[0]);
          a.next.insert(e);
          add(b, f.args[1]);
        } else {
          add(a, f.args[1]);
          a.next.insert(e);
          add(b, f.args[0]);
          add(b, f.args[1]);
        }
        expand(std::move(a));
        return expand(std::move(b));
      }
      default:
        throw Error("to_buchi: formula is not in negation normal form");
    }
  }
};

// Tarjan's strongly connected components; returns the component index of
// every state.
std::vector<int> components(const std::vector<Automaton::State>& states) {
  int n = static_cast<int>(states.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on(n, false);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<std::pair<int, std::size_t>> work{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on[root] = true;
    while (!work.empty()) {
      auto& [v, i] = work.back();
      if (i < states[v].next.size()) {
        int w = states[v].next[i++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on[w] = true;
          work.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      int done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return comp;
}

// Keeps the states reachable from an initial state that can reach an
// accepting cycle.
void prune(Automaton& a) {
  std::size_t n = a.states.size();
  std::vector<bool> reach(n, false);
  std::deque<int> queue(a.initial.begin(), a.initial.end());
  for (int s : a.initial) reach[s] = true;
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int t : a.states[s].next) {
      if (!reach[t]) {
        reach[t] = true;
        queue.push_back(t);
      }
    }
  }
  auto comp = components(a.states);
  std::map<int, int> comp_size;
  for (int c : comp) comp_size[c]++;
  std::vector<bool> live(n, false);
  std::vector<std::vector<int>> pred(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (int t : a.states[s].next) pred[t].push_back(static_cast<int>(s));
  }
  for (std::size_t s = 0; s < n; ++s) {
    const auto& st = a.states[s];
    bool cyclic = comp_size[comp[s]] > 1 ||
                  std::find(st.next.begin(), st.next.end(), static_cast<int>(s)) != st.next.end();
    if (st.accepting && cyclic) {
      live[s] = true;
      queue.push_back(static_cast<int>(s));
    }
  }
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int p : pred[s]) {
      if (!live[p]) {
        live[p] = true;
        queue.push_back(p);
      }
    }
  }
  std::vector<int> remap(n, -1);
  std::vector<Automaton::State> kept;
  for (std::size_t s = 0; s < n; ++s) {
    if (reach[s] && live[s]) {
      remap[s] = static_cast<int>(kept.size());
      kept.push_back(a.states[s]);
    }
  }
  for (auto& st : kept) {
    std::vector<int> next;
    for (int t : st.next) {
      if (remap[t] >= 0) next.push_back(remap[t]);
    }
    st.next = std::move(next);
  }
  std::vector<int> initial;
  for (int s : a.initial) {
    if (remap[s] >= 0) initial.push_back(remap[s]);
  }
  a.states = std::move(kept);
  a.initial = std::move(initial);
}

}  // namespace

int Automaton::atom_index(const Atom& a) const {
  auto it = std::find(atoms.begin(), atoms.end(), a);
  return it == atoms.end() ? -1 : static_cast<int>(it - atoms.begin());
}

Automaton to_buchi(const Formula& f) {
  Formula g = nnf(f);
  Automaton out;
  out.atoms = atoms_of(g);
  if (out.atoms.size() > 64) throw Error("formula has more than 64 atoms");
  Tableau tab(g);
  const auto& nodes = tab.nodes;

  std::vector<Letter> pos(nodes.size(), 0), neg(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int e : nodes[i].old) {
      const Formula& lit = tab.table.at(e);
      if (lit.op == Op::atom) pos[i] |= Letter{1} << out.atom_index(lit.atom);
      if (lit.op == Op::neg) neg[i] |= Letter{1} << out.atom_index(lit.args[0].atom);
    }
  }
  std::vector<std::vector<int>> next(nodes.size());
  std::vector<int> initial;
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    for (int in : nodes[m].incoming) {
      if (in == kInit) {
        initial.push_back(static_cast<int>(m));
      } else {
        next[in].push_back(static_cast<int>(m));
      }
    }
  }
  std::vector<int> untils;
  for (std::size_t i = 0; i < tab.table.size(); ++i) {
    if (tab.table.at(static_cast<int>(i)).op == Op::until) untils.push_back(static_cast<int>(i));
  }
  // in_f[u][n]: node n belongs to the acceptance set of until u.
  std::vector<std::vector<bool>> in_f(untils.size(), std::vector<bool>(nodes.size()));
  for (std::size_t u = 0; u < untils.size(); ++u) {
    int rhs = tab.table.id(tab.table.at(untils[u]).args[1]);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      in_f[u][n] = !nodes[n].old.count(untils[u]) || nodes[n].old.count(rhs);
    }
  }
  std::size_t k = std::max<std::size_t>(untils.size(), 1);
  auto in_set = [&](std::size_t i, std::size_t n) { return untils.empty() || in_f[i][n]; };
  out.states.resize(nodes.size() * k);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    bool self = std::find(next[n].begin(), next[n].end(), static_cast<int>(n)) != next[n].end();
    bool all = true;
    for (std::size_t i = 0; i < k; ++i) all = all && in_set(i, n);
    for (std::size_t i = 0; i < k; ++i) {
      auto& st = out.states[n * k + i];
      st.pos = pos[n];
      st.neg = neg[n];
      st.accepting = i == 0 && in_set(0, n);
      st.universal = self && all && pos[n] == 0 && neg[n] == 0;
      std::size_t j = in_set(i, n) ? (i + 1) % k : i;
      for (int m : next[n]) st.next.push_back(static_cast<int>(m * k + j));
    }
  }
  for (int n : initial) out.initial.push_back(static_cast<int>(n * k));
  prune(out);
  return out;
}

namespace {

bool accepts_general(const Automaton& a, const std::vector<Letter>& stem, const std::vector<Letter>& cycle) {
  std::vector<Letter> word = stem;
  word.insert(word.end(), cycle.begin(), cycle.end());
  std::size_t len = word.size();
  auto succ_pos = [&](std::size_t i) { return i + 1 < len ? i + 1 : stem.size(); };
  using P = std::pair<int, std::size_t>;
  auto successors = [&](const P& p) {
    std::vector<P> out;
    std::size_t j = succ_pos(p.second);
    for (int q : a.states[p.first].next) {
      if (a.admits(q, word[j])) out.push_back({q, j});
    }
    return out;
  };
  std::set<P> seen;
  std::deque<P> queue;
  for (int q : a.initial) {
    if (a.admits(q, word[0])) {
      seen.insert({q, 0});
      queue.push_back({q, 0});
    }
  }
  while (!queue.empty()) {
    P p = queue.front();
    queue.pop_front();
    for (const auto& n : successors(p)) {
      if (seen.insert(n).second) queue.push_back(n);
    }
  }
  for (const auto& p : seen) {
    if (!a.states[p.first].accepting) continue;
    std::set<P> inner;
    std::deque<P> q2;
    for (const auto& n : successors(p)) {
      if (inner.insert(n).second) q2.push_back(n);
    }
    while (!q2.empty()) {
      P x = q2.front();
      q2.pop_front();
      if (x == p) return true;
      for (const auto& n : successors(x)) {
        if (inner.insert(n).second) q2.push_back(n);
      }
    }
  }
  return false;
}

}  // namespace

LassoAcceptor::LassoAcceptor(const Automaton& a) : a_(a), small_(a.states.size() <= 64) {
  if (!small_) return;
  succ_.resize(a.states.size());
  for (std::size_t q = 0; q < a.states.size(); ++q) {
    for (int t : a.states[q].next) succ_[q] |= Mask{1} << t;
  }
  for (int q : a.initial) initial_ |= Mask{1} << q;
}

LassoAcceptor::Mask LassoAcceptor::admitting(Letter l) {
  auto it = admit_.find(l);
  if (it != admit_.end()) return it->second;
  Mask m = 0;
  for (std::size_t q = 0; q < a_.states.size(); ++q) {
    if (a_.admits(static_cast<int>(q), l)) m |= Mask{1} << q;
  }
  admit_.emplace(l, m);
  return m;
}

LassoAcceptor::Mask LassoAcceptor::step(Mask from, Letter l) {
  Mask to = 0;
  for (Mask f = from; f; f &= f - 1) to |= succ_[static_cast<std::size_t>(__builtin_ctzll(f))];
  return to & admitting(l);
}

// States q such that entering the cycle in q (having read cycle[0]) admits
// an accepting run.  Node sets of the product with the cycle positions are
// kept as one state mask per position.
LassoAcceptor::Mask LassoAcceptor::good_entries(const std::vector<Letter>& cycle) {
  auto it = cycles_.find(cycle);
  if (it != cycles_.end()) return it->second;
  std::size_t c = cycle.size();
  std::vector<Mask> adm(c);
  for (std::size_t j = 0; j < c; ++j) adm[j] = admitting(cycle[j]);
  // Adds the successors of every node in r to r; false at the fixpoint.
  auto grow = [&](std::vector<Mask>& r) {
    bool changed = false;
    for (std::size_t j = 0; j < c; ++j) {
      Mask m = 0;
      for (Mask f = r[j]; f; f &= f - 1) m |= succ_[static_cast<std::size_t>(__builtin_ctzll(f))];
      std::size_t j2 = (j + 1) % c;
      m &= adm[j2];
      if (m & ~r[j2]) {
        r[j2] |= m;
        changed = true;
      }
    }
    return changed;
  };
  // Accepting nodes that lie on a cycle.
  std::vector<Mask> seeds(c, 0), reach(c);
  for (std::size_t j = 0; j < c; ++j) {
    for (Mask cand = adm[j]; cand; cand &= cand - 1) {
      std::size_t q = static_cast<std::size_t>(__builtin_ctzll(cand));
      if (!a_.states[q].accepting) continue;
      std::fill(reach.begin(), reach.end(), 0);
      std::size_t j2 = (j + 1) % c;
      reach[j2] = succ_[q] & adm[j2];
      while (!(reach[j] >> q & 1) && grow(reach)) {
      }
      if (reach[j] >> q & 1) seeds[j] |= Mask{1} << q;
    }
  }
  // Backward closure.
  std::vector<Mask> good = seeds;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t j = 0; j < c; ++j) {
      Mask target = good[(j + 1) % c];
      for (Mask cand = adm[j] & ~good[j]; cand; cand &= cand - 1) {
        std::size_t q = static_cast<std::size_t>(__builtin_ctzll(cand));
        if (succ_[q] & target) {
          good[j] |= Mask{1} << q;
          changed = true;
        }
      }
    }
  }
  cycles_.emplace(cycle, good[0]);
  return good[0];
}

bool LassoAcceptor::accepts(const std::vector<Letter>& stem, const std::vector<Letter>& cycle) {
  if (cycle.empty()) throw Error("accepts: empty cycle");
  if (!small_) return accepts_general(a_, stem, cycle);
  Mask entry;  // states after reading cycle[0]
  if (stem.empty()) {
    entry = initial_ & admitting(cycle[0]);
  } else {
    auto it = stems_.find(stem);
    Mask r;
    if (it != stems_.end()) {
      r = it->second;
    } else {
      r = initial_ & admitting(stem[0]);
      for (std::size_t i = 1; i < stem.size(); ++i) r = step(r, stem[i]);
      stems_.emplace(stem, r);
    }
    entry = step(r, cycle[0]);
  }
  return (entry & good_entries(cycle)) != 0;
}

bool accepts(const Automaton& a, const std::vector<Letter>& stem, const std::vector<Letter>& cycle) {
  return LassoAcceptor(a).accepts(stem, cycle);
}

}  // namespace webtlr::ltl
