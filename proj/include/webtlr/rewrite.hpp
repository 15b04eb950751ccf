// Labeled conditional rewrite rules, one-step successors and the expanded
// step descriptors (unflat, rule application, builtin calls, flat) that make
// up a recorded trace.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "webtlr/canonical.hpp"
#include "webtlr/match.hpp"
#include "webtlr/term.hpp"

namespace webtlr {

class BuiltinError : public Error {
 public:
  using Error::Error;
};

// Provenance of a builtin result.  Output positions are relative to the
// result root; input positions are relative to the call node, so input k
// (1-based) lives at position k.
struct DependencyEntry {
  Position output;
  std::optional<Position> copy_of;  // the output subtree is this input subtree
  std::vector<Position> derived;    // otherwise: computed from these input subtrees

  bool operator==(const DependencyEntry&) const = default;
};

struct DependencyRecord {
  std::vector<DependencyEntry> entries;

  // Input positions the output position depends on, using the deepest
  // covering entry.  An empty vector means the symbol is a rule constant;
  // nullopt means no entry covers the position.
  std::optional<std::vector<Position>> sources(const Position& output) const;

  void copy(Position output, Position input) { entries.push_back({std::move(output), std::move(input), {}}); }
  void derive(Position output, std::vector<Position> inputs) {
    entries.push_back({std::move(output), std::nullopt, std::move(inputs)});
  }

  bool operator==(const DependencyRecord&) const = default;
};

struct BuiltinResult {
  Term value;  // canonical
  DependencyRecord deps;
};

using BuiltinFn = std::function<BuiltinResult(const Signature&, std::span<const Term>)>;
using PredicateFn = std::function<bool(const Signature&, std::span<const Term>)>;

struct BoolTest {
  std::string predicate;
  std::vector<Term> args;  // over bound variables
};

// `variable := builtin(inputs)`; inputs are terms over bound variables.
struct Computation {
  std::string variable;
  std::string builtin;
  std::vector<Term> inputs;
};

using Condition = std::variant<BoolTest, Computation>;

struct Rule {
  std::string label;
  Term lhs;
  Term rhs;
  std::vector<Condition> conditions;
  bool top_only = true;

  // rhs with every computation variable replaced by its call term; set by
  // Theory::add_rule.
  Term rhs_calls;
};

class Theory {
 public:
  explicit Theory(Signature sig) : sig_(std::move(sig)) {}

  const Signature& sig() const { return sig_; }

  // Builtins are operators of the signature; the name must be a declared op.
  void add_builtin(const std::string& name, BuiltinFn fn);
  void add_predicate(const std::string& name, PredicateFn fn);
  // Validates variable scoping and builtin names.  Throws Error.
  void add_rule(Rule rule);

  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(std::string_view label) const;
  bool has_rule(std::string_view label) const;
  bool is_builtin_op(OpId op) const { return builtin_ops_.count(op) > 0; }
  const BuiltinFn& builtin(std::string_view name) const;
  const PredicateFn& predicate(std::string_view name) const;
  bool has_predicate(std::string_view name) const { return predicates_.count(std::string(name)) > 0; }

 private:
  Signature sig_;
  std::vector<Rule> rules_;
  std::map<std::string, std::size_t, std::less<>> rule_index_;
  std::map<std::string, BuiltinFn, std::less<>> builtins_;
  std::map<std::string, PredicateFn, std::less<>> predicates_;
  std::map<OpId, std::string> builtin_ops_;
};

enum class StepKind { rule, flat, unflat, builtin };

const char* step_kind_name(StepKind k);
StepKind parse_step_kind(std::string_view name);

struct RewriteStep {
  StepKind kind = StepKind::rule;
  std::string label;  // rule label, builtin name, "flat" or "unflat"
  Position redex;
  Substitution matcher;                   // rule
  PermutationRecord permutation;          // flat / unflat, positions absolute
  std::optional<DependencyRecord> deps;   // builtin

  bool operator==(const RewriteStep&) const = default;
};

// A rule instance enabled at a state.
struct Candidate {
  std::size_t rule = 0;  // index into Theory::rules()
  Position pos;
  Substitution matcher;   // lhs variables
  Substitution computed;  // computation variables
};

// Deterministic: rule order, then position order, then matcher order.
std::vector<Candidate> applicable_steps(const Theory& th, const Term& state);

// Canonical target of a candidate, without step expansion.
Term apply_fast(const Theory& th, const Term& state, const Candidate& c);

struct Expansion {
  std::vector<RewriteStep> steps;
  std::vector<Term> states;  // states[i] is the target of steps[i]

  const Term& target() const { return states.back(); }
};

// Expanded step list: [unflat] rule builtin* [flat].
Expansion apply_step(const Theory& th, const Term& state, const Candidate& c);

struct Successor {
  Term target;
  std::size_t candidate = 0;  // index into applicable_steps(state)
  std::string label;
};

std::vector<Successor> successors(const Theory& th, const Term& state);

// Re-executes one recorded step.  Throws Error when the descriptor does not
// apply to `source`.
Term replay_step(const Theory& th, const Term& source, const RewriteStep& step);

struct Trace {
  std::vector<Term> states;
  std::vector<RewriteStep> steps;
  std::string theory_hash;
  std::map<std::string, std::string> metadata;
};

struct ReplayReport {
  bool ok = true;
  std::size_t failed_step = 0;
  std::string message;
};

// Folds replay_step over the trace and compares every state exactly.
ReplayReport replay(const Theory& th, const Trace& trace);

// Indices of the states that end a step group ([unflat] rule builtin*
// [flat]), starting with 0.  These are the canonical states of the run.
std::vector<std::size_t> group_boundaries(const Trace& trace);

// Position of the rule application variable structure: the rhs (with call
// terms) symbol at a target position relative to the redex.  Returns the
// variable name and the offset below it when the position lies inside a
// variable's instance, nullopt when it lands on the rhs skeleton.
struct RhsHit {
  std::string variable;
  Position offset;
};
std::optional<RhsHit> locate_in_pattern(const Term& pattern, const Position& rel);

}  // namespace webtlr
