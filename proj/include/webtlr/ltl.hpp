// LTLR model checking: formulas over state predicates and rule-label atoms,
// translation to Büchi automata and a nested depth-first search of the
// product with the reachable state graph.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "webtlr/rewrite.hpp"
#include "webtlr/webapp.hpp"

namespace webtlr::ltl {

struct Atom {
  enum class Kind { state, label };
  Kind kind = Kind::state;
  std::string name;
  std::vector<std::string> args;

  std::string str() const;
  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

enum class Op { tt, ff, atom, neg, conj, disj, implies, next, always, until, release };

struct Formula {
  Op op = Op::tt;
  Atom atom;                  // Op::atom
  std::vector<Formula> args;  // operands in source order

  static Formula make(Op op, std::vector<Formula> args = {});
  static Formula of(Atom a);

  // Concrete syntax, fully parenthesized.
  std::string str() const;
  // Prefix form with the usual logical symbols, e.g. □(¬(p)).
  std::string tree() const;

  bool operator==(const Formula&) const = default;
};

// Classifies an atom by name and arity; nullopt rejects it.
using AtomResolver = std::function<std::optional<Atom::Kind>(const std::string& name, std::size_t arity)>;

// Grammar: `[] <> O ~` (prefix), `U`, `/\`, `\/`, `->` in decreasing
// precedence; U and -> associate to the right.  `<> p` is read as
// `true U p`.  Without a resolver every atom is a state atom.  Throws
// ParseError on syntax errors and Error on unknown predicates.
Formula parse_formula(std::string_view text, const AtomResolver& resolve = {});

// Negation normal form over tt, ff, atom, neg(atom), conj, disj, next,
// until, release.
Formula nnf(const Formula& f);
std::vector<Atom> atoms_of(const Formula& f);

// Bit i of a letter is the truth value of Automaton::atoms[i].
using Letter = std::uint64_t;

struct Automaton {
  struct State {
    Letter pos = 0;  // atoms that must hold on entry
    Letter neg = 0;  // atoms that must not hold on entry
    bool accepting = false;
    bool universal = false;  // every continuation from here is accepted
    std::vector<int> next;
  };
  std::vector<Atom> atoms;
  std::vector<State> states;
  std::vector<int> initial;  // states that can read the first letter

  bool admits(int s, Letter a) const { return (a & states[s].pos) == states[s].pos && (a & states[s].neg) == 0; }
  int atom_index(const Atom& a) const;
};

// Automaton whose language is the set of words satisfying `f`.  States that
// cannot reach an accepting cycle are removed.
Automaton to_buchi(const Formula& f);

// Acceptance of the lasso word stem·cycle^ω (cycle nonempty).
bool accepts(const Automaton& a, const std::vector<Letter>& stem, const std::vector<Letter>& cycle);

// Repeated acceptance queries against one automaton.  Reachable sets per
// stem and accepting entry sets per cycle are cached.
class LassoAcceptor {
 public:
  explicit LassoAcceptor(const Automaton& a);
  bool accepts(const std::vector<Letter>& stem, const std::vector<Letter>& cycle);

 private:
  using Mask = std::uint64_t;
  Mask admitting(Letter l);
  Mask step(Mask from, Letter l);
  Mask good_entries(const std::vector<Letter>& cycle);

  const Automaton& a_;
  bool small_;
  std::vector<Mask> succ_;
  Mask initial_ = 0;
  struct WordHash {
    std::size_t operator()(const std::vector<Letter>& w) const {
      std::size_t h = w.size();
      for (Letter l : w) h = h * 1099511628211ull ^ l;
      return h;
    }
  };
  std::unordered_map<Letter, Mask> admit_;
  std::unordered_map<std::vector<Letter>, Mask, WordHash> stems_;
  std::unordered_map<std::vector<Letter>, Mask, WordHash> cycles_;
};

struct Budget {
  std::size_t max_states = 2'000'000;
  std::size_t max_depth = 10'000'000;
  std::chrono::milliseconds time_limit{600'000};
};

enum class Status { fulfilled, refuted, budget_exhausted };
const char* status_name(Status s);

struct Stats {
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t product_states = 0;
  std::size_t max_depth = 0;
  double seconds = 0;
};

struct Verdict {
  Status status = Status::fulfilled;
  Trace trace;                  // refuted only, with expanded steps
  std::size_t lasso_start = 0;  // index into trace.states
  std::string exhausted;        // which budget ran out
  Stats stats;
};

// Truth of a state atom on one state.
using StateEval = std::function<bool(const Atom&, const Term&)>;

// `property` is the formula to verify; the search looks for a run of its
// negation.  Deadlocked states stutter.  Rule-label atoms hold at the source
// state of a transition with that label.  Refuted traces are validated by
// replay and by automaton acceptance before they are returned.
Verdict check(const Theory& th, const Term& initial, const Formula& property, const StateEval& eval,
              const Budget& budget = {});

// Lasso word of a refuted verdict over the automaton's atoms.
std::pair<std::vector<Letter>, std::vector<Letter>> lasso_word(const Theory& th, const Automaton& a,
                                                               const Verdict& v, const StateEval& eval);

// Replay and acceptance check of a refuted verdict; returns an error
// message on failure.
std::optional<std::string> validate_counterexample(const Theory& th, const Formula& property, const Verdict& v,
                                                   const StateEval& eval);

bool label_matches(const std::string& atom, const std::string& rule_label);

// Web application bindings: curPage, the model's pattern predicates and the
// theory's rule labels.
AtomResolver web_resolver(const web::WebModel& model);
StateEval web_eval(const web::WebModel& model);
Formula parse_property(const web::WebModel& model, std::string_view text);
Verdict check_webapp(const web::WebModel& model, const Formula& property, const Budget& budget = {});

}  // namespace webtlr::ltl
