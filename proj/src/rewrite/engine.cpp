#include <algorithm>
#include <set>

#include "webtlr/rewrite.hpp"

namespace webtlr {

std::optional<std::vector<Position>> DependencyRecord::sources(const Position& output) const {
  const DependencyEntry* best = nullptr;
  for (const auto& e : entries) {
    if (e.output.is_prefix_of(output) && (!best || e.output.depth() > best->output.depth())) best = &e;
  }
  if (!best) return std::nullopt;
  if (best->copy_of) return std::vector<Position>{best->copy_of->concat(output.suffix_after(best->output))};
  return best->derived;
}

const char* step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::rule:
      return "RuleApp";
    case StepKind::flat:
      return "Flat";
    case StepKind::unflat:
      return "Unflat";
    case StepKind::builtin:
      return "Builtin";
  }
  return "?";
}

StepKind parse_step_kind(std::string_view name) {
  if (name == "RuleApp") return StepKind::rule;
  if (name == "Flat") return StepKind::flat;
  if (name == "Unflat") return StepKind::unflat;
  if (name == "Builtin") return StepKind::builtin;
  throw Error("unknown step kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Theory

void Theory::add_builtin(const std::string& name, BuiltinFn fn) {
  auto op = sig_.find_op(name);
  if (!op) throw Error("builtin '" + name + "' is not a declared operator");
  builtins_[name] = std::move(fn);
  builtin_ops_[*op] = name;
}

void Theory::add_predicate(const std::string& name, PredicateFn fn) { predicates_[name] = std::move(fn); }

namespace {
std::set<std::string> vars_of(const Term& t) {
  std::vector<std::string> v;
  collect_variables(t, v);
  return {v.begin(), v.end()};
}
}  // namespace

void Theory::add_rule(Rule rule) {
  if (rule.label.empty()) throw Error("rule without a label");
  if (rule_index_.count(rule.label)) throw Error("duplicate rule label '" + rule.label + "'");
  std::set<std::string> bound = vars_of(rule.lhs);
  auto require_bound = [&](const Term& t, const std::string& where) {
    for (const auto& v : vars_of(t)) {
      if (!bound.count(v)) throw Error("rule " + rule.label + ": variable " + v + " unbound in " + where);
    }
  };
  Substitution calls;
  for (const auto& c : rule.conditions) {
    if (const auto* b = std::get_if<BoolTest>(&c)) {
      if (!predicates_.count(b->predicate)) {
        throw Error("rule " + rule.label + ": unknown predicate '" + b->predicate + "'");
      }
      for (const auto& a : b->args) require_bound(a, b->predicate);
      continue;
    }
    const auto& comp = std::get<Computation>(c);
    if (!builtins_.count(comp.builtin)) throw Error("rule " + rule.label + ": unknown builtin '" + comp.builtin + "'");
    if (bound.count(comp.variable)) {
      throw Error("rule " + rule.label + ": computation rebinds " + comp.variable);
    }
    std::vector<Term> inputs;
    for (const auto& in : comp.inputs) {
      require_bound(in, comp.builtin);
      inputs.push_back(substitute(sig_, in, calls));
    }
    calls[comp.variable] = Term::make(sig_, comp.builtin, std::move(inputs));
    bound.insert(comp.variable);
  }
  require_bound(rule.rhs, "rhs");
  rule.rhs_calls = substitute(sig_, rule.rhs, calls);
  rule_index_[rule.label] = rules_.size();
  rules_.push_back(std::move(rule));
}

const Rule& Theory::rule(std::string_view label) const {
  auto it = rule_index_.find(label);
  if (it == rule_index_.end()) throw Error("unknown rule '" + std::string(label) + "'");
  return rules_[it->second];
}

bool Theory::has_rule(std::string_view label) const { return rule_index_.find(label) != rule_index_.end(); }

const BuiltinFn& Theory::builtin(std::string_view name) const {
  auto it = builtins_.find(name);
  if (it == builtins_.end()) throw Error("unknown builtin '" + std::string(name) + "'");
  return it->second;
}

const PredicateFn& Theory::predicate(std::string_view name) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) throw Error("unknown predicate '" + std::string(name) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Successors

namespace {

Substitution merged(const Substitution& a, const Substitution& b) {
  Substitution out = a;
  out.insert(b.begin(), b.end());
  return out;
}

// Evaluates the conditions in order; nullopt when one fails.
std::optional<Substitution> run_conditions(const Theory& th, const Rule& r, const Substitution& matcher) {
  const auto& sig = th.sig();
  Substitution computed;
  try {
    for (const auto& c : r.conditions) {
      Substitution all = merged(matcher, computed);
      if (const auto* b = std::get_if<BoolTest>(&c)) {
        std::vector<Term> args;
        for (const auto& a : b->args) args.push_back(flatten(sig, substitute(sig, a, all)));
        if (!th.predicate(b->predicate)(sig, args)) return std::nullopt;
        continue;
      }
      const auto& comp = std::get<Computation>(c);
      std::vector<Term> inputs;
      for (const auto& in : comp.inputs) inputs.push_back(substitute(sig, in, all));
      computed[comp.variable] = th.builtin(comp.builtin)(sig, inputs).value;
    }
  } catch (const BuiltinError&) {
    return std::nullopt;
  }
  return computed;
}

// Leftmost-innermost builtin call at or below `at`.
std::optional<Position> find_call(const Theory& th, const Term& t, const Position& at) {
  if (t.is_variable()) return std::nullopt;
  for (std::uint32_t i = 0; i < t.arity(); ++i) {
    if (auto p = find_call(th, t.arg(i), at.child(i + 1))) return p;
  }
  if (th.is_builtin_op(t.op())) return at;
  return std::nullopt;
}

}  // namespace

std::vector<Candidate> applicable_steps(const Theory& th, const Term& state) {
  std::vector<Candidate> out;
  const auto all_positions = positions(state);
  for (std::size_t ri = 0; ri < th.rules().size(); ++ri) {
    const Rule& r = th.rules()[ri];
    for (const auto& pos : all_positions) {
      if (r.top_only && !pos.is_root()) break;
      Term subject = subterm_at(state, pos);
      if (subject.sort() != r.lhs.sort()) continue;
      for (auto& m : match_modulo(th.sig(), r.lhs, subject)) {
        if (auto computed = run_conditions(th, r, m)) {
          out.push_back({ri, pos, std::move(m), std::move(*computed)});
        }
      }
    }
  }
  return out;
}

Term apply_fast(const Theory& th, const Term& state, const Candidate& c) {
  const Rule& r = th.rules()[c.rule];
  Term rhs = substitute(th.sig(), r.rhs, merged(c.matcher, c.computed));
  return replace_at(th.sig(), state, c.pos, rhs);
}

Expansion apply_step(const Theory& th, const Term& state, const Candidate& c) {
  const auto& sig = th.sig();
  const Rule& r = th.rules()[c.rule];
  Expansion out;
  Term cur = state;

  Term inst = substitute(sig, r.lhs, c.matcher);
  if (!(inst == subterm_at(state, c.pos))) {
    Term view = replace_at_raw(sig, state, c.pos, inst);
    auto tracked = flatten_tracked(sig, view);
    if (!(tracked.canonical == state)) throw Error("apply_step: unflat view does not flatten back to the state");
    out.steps.push_back({StepKind::unflat, "unflat", c.pos, {}, std::move(tracked.record), std::nullopt});
    out.states.push_back(view);
    cur = view;
  }

  cur = replace_at_raw(sig, cur, c.pos, substitute(sig, r.rhs_calls, c.matcher));
  out.steps.push_back({StepKind::rule, r.label, c.pos, c.matcher, {}, std::nullopt});
  out.states.push_back(cur);

  while (auto call = find_call(th, subterm_at(cur, c.pos), c.pos)) {
    Term node = subterm_at(cur, *call);
    const std::string& name = node.symbol();
    BuiltinResult res = th.builtin(name)(sig, node.args());
    cur = replace_at_raw(sig, cur, *call, res.value);
    out.steps.push_back({StepKind::builtin, name, *call, {}, {}, std::move(res.deps)});
    out.states.push_back(cur);
  }

  if (!(flatten(sig, cur) == cur)) {
    auto tracked = flatten_tracked(sig, cur);
    out.steps.push_back({StepKind::flat, "flat", Position{}, {}, std::move(tracked.record), std::nullopt});
    out.states.push_back(tracked.canonical);
  }
  if (!(out.target() == apply_fast(th, state, c))) {
    throw Error("apply_step: expanded steps disagree with the rule semantics for " + r.label);
  }
  return out;
}

std::vector<Successor> successors(const Theory& th, const Term& state) {
  std::vector<Successor> out;
  auto cands = applicable_steps(th, state);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    out.push_back({apply_fast(th, state, cands[i]), i, th.rules()[cands[i].rule].label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay

Term replay_step(const Theory& th, const Term& source, const RewriteStep& step) {
  const auto& sig = th.sig();
  switch (step.kind) {
    case StepKind::unflat: {
      Term target = step.permutation.rebuild_unflat(sig, source);
      if (!(flatten(sig, target) == source)) throw Error("unflat step does not invert to its source");
      return target;
    }
    case StepKind::rule: {
      const Rule& r = th.rule(step.label);
      if (!valid_position(source, step.redex)) throw Error("rule step redex " + step.redex.str() + " is invalid");
      if (!(substitute(sig, r.lhs, step.matcher) == subterm_at(source, step.redex))) {
        throw Error("rule " + r.label + " does not match at " + step.redex.str() + " under the recorded matcher");
      }
      if (!run_conditions(th, r, step.matcher)) throw Error("rule " + r.label + ": conditions fail on replay");
      return replace_at_raw(sig, source, step.redex, substitute(sig, r.rhs_calls, step.matcher));
    }
    case StepKind::builtin: {
      if (!valid_position(source, step.redex)) throw Error("builtin step position " + step.redex.str() + " is invalid");
      Term node = subterm_at(source, step.redex);
      if (node.is_variable() || node.symbol() != step.label || !th.is_builtin_op(node.op())) {
        throw Error("no call to " + step.label + " at " + step.redex.str());
      }
      BuiltinResult res = th.builtin(step.label)(sig, node.args());
      if (step.deps && !(*step.deps == res.deps)) throw Error("builtin " + step.label + ": dependency record differs");
      return replace_at_raw(sig, source, step.redex, res.value);
    }
    case StepKind::flat: {
      auto tracked = flatten_tracked(sig, source);
      if (!(tracked.record == step.permutation)) throw Error("flat step: permutation record differs");
      return tracked.canonical;
    }
  }
  throw Error("unreachable");
}

ReplayReport replay(const Theory& th, const Trace& trace) {
  if (trace.states.size() != trace.steps.size() + 1) return {false, 0, "states/steps length mismatch"};
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    try {
      Term t = replay_step(th, trace.states[i], trace.steps[i]);
      if (!(t == trace.states[i + 1])) return {false, i, "step " + std::to_string(i) + " reaches a different state"};
    } catch (const Error& e) {
      return {false, i, e.what()};
    }
  }
  return {};
}

std::vector<std::size_t> group_boundaries(const Trace& trace) {
  std::vector<std::size_t> out{0};
  for (std::size_t j = 0; j < trace.steps.size(); ++j) {
    bool last = j + 1 == trace.steps.size();
    if (trace.steps[j].kind == StepKind::unflat && !last) continue;
    if (last || trace.steps[j + 1].kind == StepKind::unflat || trace.steps[j + 1].kind == StepKind::rule) {
      out.push_back(j + 1);
    }
  }
  return out;
}

std::optional<RhsHit> locate_in_pattern(const Term& pattern, const Position& rel) {
  Term node = pattern;
  for (std::size_t i = 0; i < rel.depth(); ++i) {
    if (node.is_variable()) {
      return RhsHit{node.symbol(), Position(std::vector<std::uint32_t>(rel.path().begin() + static_cast<long>(i),
                                                                       rel.path().end()))};
    }
    if (rel[i] < 1 || rel[i] > node.arity()) throw PositionError("position " + rel.str() + " leaves the pattern");
    node = node.arg(rel[i] - 1);
  }
  if (node.is_variable()) return RhsHit{node.symbol(), Position{}};
  return std::nullopt;
}

}  // namespace webtlr
