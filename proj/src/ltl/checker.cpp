#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "webtlr/ltl.hpp"

namespace webtlr::ltl {

namespace {

using Clock = std::chrono::steady_clock;
using Key = std::uint64_t;  // graph node << 32 | (automaton state + 1)

struct OutOfBudget {
  std::string which;
};

struct Edge {
  int target = 0;
  std::size_t candidate = 0;
  Letter labels = 0;
  bool stutter = false;
};

struct Node {
  Term state;
  Letter val = 0;
  bool expanded = false;
  std::vector<Edge> out;
};

Key key_of(int node, int q) { return (static_cast<Key>(node) << 32) | static_cast<std::uint32_t>(q + 1); }
int node_of(Key k) { return static_cast<int>(k >> 32); }
int aut_of(Key k) { return static_cast<int>(k & 0xffffffffu) - 1; }

struct PEdge {
  Key target;
  int edge;  // index into the source node's out list
};

class Search {
 public:
  Search(const Theory& th, const Automaton& aut, const StateEval& eval, const Budget& budget)
      : th_(th), aut_(aut), eval_(eval), budget_(budget), deadline_(Clock::now() + budget.time_limit) {
    for (std::size_t i = 0; i < aut.atoms.size(); ++i) {
      (aut.atoms[i].kind == Atom::Kind::label ? label_atoms_ : state_atoms_).push_back(static_cast<int>(i));
    }
    // A state is committed once every continuation is accepted: it is
    // universal or can move to a universal state on any letter.
    for (const auto& q : aut.states) {
      bool c = q.universal;
      for (int r : q.next) c = c || aut.states[r].universal;
      committed_.push_back(c);
    }
  }

  const Theory& th_;
  const Automaton& aut_;
  const StateEval& eval_;
  const Budget& budget_;
  Clock::time_point deadline_;
  std::vector<int> state_atoms_, label_atoms_;
  std::vector<bool> committed_;
  std::vector<Node> nodes_;
  std::unordered_map<Term, int, TermHash> index_;
  std::unordered_map<std::string, Letter> label_bits_;
  std::size_t transitions_ = 0;
  std::size_t ticks_ = 0;

  void tick() {
    if ((++ticks_ & 255) == 0 && Clock::now() > deadline_) throw OutOfBudget{"time"};
  }

  int intern(const Term& t) {
    auto it = index_.find(t);
    if (it != index_.end()) return it->second;
    if (nodes_.size() >= budget_.max_states) throw OutOfBudget{"states"};
    Node n;
    n.state = t;
    for (int i : state_atoms_) {
      if (eval_(aut_.atoms[i], t)) n.val |= Letter{1} << i;
    }
    nodes_.push_back(std::move(n));
    int id = static_cast<int>(nodes_.size() - 1);
    index_.emplace(t, id);
    return id;
  }

  Letter labels(const std::string& label) {
    auto it = label_bits_.find(label);
    if (it != label_bits_.end()) return it->second;
    Letter bits = 0;
    for (int i : label_atoms_) {
      if (label_matches(aut_.atoms[i].name, label)) bits |= Letter{1} << i;
    }
    label_bits_.emplace(label, bits);
    return bits;
  }

  const std::vector<Edge>& edges(int n) {
    if (!nodes_[n].expanded) {
      tick();
      std::vector<Edge> out;
      for (auto& s : successors(th_, nodes_[n].state)) {
        int target = intern(s.target);
        out.push_back({target, s.candidate, labels(s.label), false});
      }
      if (out.empty()) out.push_back({n, 0, 0, true});
      transitions_ += out.size();
      nodes_[n].out = std::move(out);
      nodes_[n].expanded = true;
    }
    return nodes_[n].out;
  }

  void product_succ(Key k, std::vector<PEdge>& out) {
    out.clear();
    int n = node_of(k);
    int q = aut_of(k);
    const auto& es = edges(n);
    const auto& next = q < 0 ? aut_.initial : aut_.states[q].next;
    for (std::size_t e = 0; e < es.size(); ++e) {
      Letter a = nodes_[n].val | es[e].labels;
      for (int q2 : next) {
        if (aut_.admits(q2, a)) out.push_back({key_of(es[e].target, q2), static_cast<int>(e)});
      }
    }
  }

  bool committed(Key k) const { return aut_of(k) >= 0 && committed_[aut_of(k)]; }
  bool accepting(Key k) const { return aut_of(k) >= 0 && aut_.states[aut_of(k)].accepting; }

  // Breadth-first shortest path from `from` to a key satisfying `goal`
  // (at least one edge).  Returns the (source key, edge) list.
  template <class Goal>
  std::vector<std::pair<Key, int>> shortest(Key from, Goal goal) {
    std::unordered_map<Key, std::pair<Key, int>> parent;
    std::deque<Key> queue{from};
    std::vector<PEdge> succ;
    std::unordered_set<Key> seen{from};
    while (!queue.empty()) {
      Key k = queue.front();
      queue.pop_front();
      product_succ(k, succ);
      for (const auto& s : succ) {
        if (goal(k, s)) {
          std::vector<std::pair<Key, int>> path{{k, s.edge}};
          for (Key c = k; c != from;) {
            auto [p, e] = parent.at(c);
            path.push_back({p, e});
            c = p;
          }
          std::reverse(path.begin(), path.end());
          return path;
        }
        if (seen.insert(s.target).second) {
          parent.emplace(s.target, std::make_pair(k, s.edge));
          queue.push_back(s.target);
        }
      }
    }
    throw Error("checker: counterexample path not found");
  }
};

struct Found {
  bool safety = false;
  Key seed = 0;
};

}  // namespace

const char* status_name(Status s) {
  switch (s) {
    case Status::fulfilled:
      return "fulfilled";
    case Status::refuted:
      return "refuted";
    case Status::budget_exhausted:
      return "budget_exhausted";
  }
  return "?";
}

bool label_matches(const std::string& atom, const std::string& rule_label) {
  if (rule_label == atom) return true;
  if (rule_label.size() <= atom.size() + 1 || rule_label.compare(0, atom.size(), atom) != 0 ||
      rule_label[atom.size()] != '-') {
    return false;
  }
  return std::all_of(rule_label.begin() + static_cast<long>(atom.size()) + 1, rule_label.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

Verdict check(const Theory& th, const Term& initial, const Formula& property, const StateEval& eval,
              const Budget& budget) {
  auto start = Clock::now();
  Formula negated = Formula::make(Op::neg, {property});
  Automaton aut = to_buchi(negated);
  Search s(th, aut, eval, budget);
  Verdict v;
  std::optional<Found> found;
  bool truncated = false;
  std::unordered_set<Key> blue, red;

  auto finish_stats = [&] {
    v.stats.states = s.nodes_.size();
    v.stats.transitions = s.transitions_;
    v.stats.product_states = blue.size();
    v.stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  };

  try {
    Key root = key_of(s.intern(initial), -1);
    if (!aut.initial.empty()) {
      struct Frame {
        Key key;
        std::vector<PEdge> succ;
        std::size_t i = 0;
      };
      std::vector<Frame> stack;
      std::vector<PEdge> buf;
      blue.insert(root);
      s.product_succ(root, buf);
      stack.push_back({root, buf, 0});
      while (!stack.empty() && !found) {
        Frame& top = stack.back();
        if (top.i < top.succ.size()) {
          PEdge e = top.succ[top.i++];
          if (s.committed(e.target)) {
            found = Found{true, e.target};
            break;
          }
          if (blue.count(e.target)) continue;
          if (stack.size() >= budget.max_depth) {
            truncated = true;
            continue;
          }
          blue.insert(e.target);
          s.product_succ(e.target, buf);
          stack.push_back({e.target, buf, 0});
          v.stats.max_depth = std::max(v.stats.max_depth, stack.size());
          continue;
        }
        Key k = top.key;
        stack.pop_back();
        if (!s.accepting(k)) continue;
        // Inner search for a cycle back to the seed.
        std::vector<std::pair<Key, std::size_t>> inner;
        std::vector<std::vector<PEdge>> inner_succ;
        red.insert(k);
        s.product_succ(k, buf);
        inner.push_back({k, 0});
        inner_succ.push_back(buf);
        while (!inner.empty() && !found) {
          std::size_t& ii = inner.back().second;
          auto& succ = inner_succ.back();
          if (ii >= succ.size()) {
            inner.pop_back();
            inner_succ.pop_back();
            continue;
          }
          Key t = succ[ii++].target;
          if (t == k) {
            found = Found{false, k};
            break;
          }
          if (red.count(t)) continue;
          red.insert(t);
          s.product_succ(t, buf);
          inner.push_back({t, 0});
          inner_succ.push_back(buf);
        }
      }
    }
    if (!found) {
      finish_stats();
      if (truncated) {
        v.status = Status::budget_exhausted;
        v.exhausted = "depth";
      } else {
        v.status = Status::fulfilled;
      }
      return v;
    }

    // Shortest stem (and cycle) in the product.
    std::vector<std::pair<Key, int>> stem, cycle;
    bool include_last_edge = !s.label_atoms_.empty();
    if (found->safety) {
      stem = s.shortest(root, [&](Key, const PEdge& e) { return s.committed(e.target); });
      if (!include_last_edge) stem.pop_back();
    } else {
      Key seed = found->seed;
      stem = s.shortest(root, [&](Key, const PEdge& e) { return e.target == seed; });
      cycle = s.shortest(seed, [&](Key, const PEdge& e) { return e.target == seed; });
    }

    Trace& t = v.trace;
    t.states.push_back(initial);
    auto follow = [&](const std::vector<std::pair<Key, int>>& path) {
      for (const auto& [k, e] : path) {
        const Edge& edge = s.nodes_[node_of(k)].out[e];
        if (edge.stutter) continue;
        const Term& from = s.nodes_[node_of(k)].state;
        auto cands = applicable_steps(th, from);
        Expansion ex = apply_step(th, from, cands.at(edge.candidate));
        if (!(ex.target() == s.nodes_[edge.target].state)) throw Error("checker: expansion disagrees with the graph");
        t.steps.insert(t.steps.end(), ex.steps.begin(), ex.steps.end());
        t.states.insert(t.states.end(), ex.states.begin(), ex.states.end());
      }
    };
    follow(stem);
    v.lasso_start = t.states.size() - 1;
    follow(cycle);
    v.status = Status::refuted;
    t.metadata["property"] = property.str();
    t.metadata["verdict"] = "refuted";
    t.metadata["lasso_start"] = std::to_string(v.lasso_start);
    finish_stats();
  } catch (const OutOfBudget& e) {
    v = Verdict{};
    v.status = Status::budget_exhausted;
    v.exhausted = e.which;
    finish_stats();
    return v;
  }
  if (auto err = validate_counterexample(th, property, v, eval)) throw Error("checker: invalid counterexample: " + *err);
  return v;
}

std::pair<std::vector<Letter>, std::vector<Letter>> lasso_word(const Theory& th, const Automaton& a,
                                                               const Verdict& v, const StateEval& eval) {
  (void)th;
  const Trace& t = v.trace;
  auto bounds = group_boundaries(t);
  std::vector<Letter> letters;
  for (std::size_t b = 0; b < bounds.size(); ++b) {
    Letter l = 0;
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      const Atom& atom = a.atoms[i];
      bool holds = false;
      if (atom.kind == Atom::Kind::state) {
        holds = eval(atom, t.states[bounds[b]]);
      } else if (b + 1 < bounds.size()) {
        for (std::size_t j = bounds[b]; j < bounds[b + 1]; ++j) {
          if (t.steps[j].kind == StepKind::rule) holds = label_matches(atom.name, t.steps[j].label);
        }
      }
      if (holds) l |= Letter{1} << i;
    }
    letters.push_back(l);
  }
  auto it = std::find(bounds.begin(), bounds.end(), v.lasso_start);
  if (it == bounds.end()) throw Error("lasso start is not a state boundary");
  std::size_t k = static_cast<std::size_t>(it - bounds.begin());
  if (k + 1 == bounds.size()) {
    Letter last = letters.back();
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      if (a.atoms[i].kind == Atom::Kind::label) last &= ~(Letter{1} << i);
    }
    letters.back() = last;
    return {letters, {last}};
  }
  std::vector<Letter> stem(letters.begin(), letters.begin() + static_cast<long>(k));
  std::vector<Letter> cycle(letters.begin() + static_cast<long>(k), letters.end() - 1);
  return {stem, cycle};
}

std::optional<std::string> validate_counterexample(const Theory& th, const Formula& property, const Verdict& v,
                                                   const StateEval& eval) {
  if (v.status != Status::refuted) return "verdict is not a refutation";
  if (v.trace.states.empty()) return "empty trace";
  auto r = replay(th, v.trace);
  if (!r.ok) return "replay failed at step " + std::to_string(r.failed_step) + ": " + r.message;
  if (v.lasso_start + 1 < v.trace.states.size() && !(v.trace.states[v.lasso_start] == v.trace.states.back())) {
    return "cycle does not return to the lasso start";
  }
  Automaton a = to_buchi(Formula::make(Op::neg, {property}));
  auto [stem, cycle] = lasso_word(th, a, v, eval);
  if (!accepts(a, stem, cycle)) return "the lasso is not accepted by the negated property automaton";
  return std::nullopt;
}

AtomResolver web_resolver(const web::WebModel& model) {
  return [&model](const std::string& name, std::size_t arity) -> std::optional<Atom::Kind> {
    if (web::has_state_predicate(model, name, arity)) return Atom::Kind::state;
    if (arity == 0) {
      for (const auto& r : model.theory.rules()) {
        if (label_matches(name, r.label)) return Atom::Kind::label;
      }
    }
    return std::nullopt;
  };
}

StateEval web_eval(const web::WebModel& model) {
  return [&model](const Atom& a, const Term& state) { return web::eval_predicate(model, a.name, a.args, state); };
}

Formula parse_property(const web::WebModel& model, std::string_view text) {
  return parse_formula(text, web_resolver(model));
}

Verdict check_webapp(const web::WebModel& model, const Formula& property, const Budget& budget) {
  Verdict v = check(model.theory, model.initial, property, web_eval(model), budget);
  v.trace.theory_hash = model.source_hash;
  return v;
}

}  // namespace webtlr::ltl
