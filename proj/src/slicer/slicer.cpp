#include "webtlr/slicer.hpp"

#include <random>
#include <set>

#include "webtlr/trace_io.hpp"

namespace webtlr {

namespace {

// Positions of `set` at or below `prefix`.
template <class F>
void for_each_below(const PositionSet& set, const Position& prefix, F f) {
  for (auto it = set.lower_bound(prefix); it != set.end() && prefix.is_prefix_of(*it); ++it) f(*it);
}

bool any_below(const PositionSet& set, const Position& prefix) {
  auto it = set.lower_bound(prefix);
  return it != set.end() && prefix.is_prefix_of(*it);
}

void add_subtree(const Term& state, const Position& at, PositionSet& out) {
  std::vector<Position> all;
  collect_positions(subterm_at(state, at), at, all);
  out.insert(all.begin(), all.end());
}

// Deepest dependency entry covering an output position.
const DependencyEntry* covering(const DependencyRecord& deps, const Position& output) {
  const DependencyEntry* best = nullptr;
  for (const auto& e : deps.entries) {
    if (e.output.is_prefix_of(output) && (!best || e.output.depth() > best->output.depth())) best = &e;
  }
  return best;
}

// Variables a rule's BoolTest conditions read, computations expanded to
// their inputs.
std::set<std::string> tested_variables(const Rule& r) {
  std::map<std::string, std::vector<std::string>> inputs;
  std::vector<std::string> work;
  for (const auto& c : r.conditions) {
    if (const auto* comp = std::get_if<Computation>(&c)) {
      auto& vs = inputs[comp->variable];
      for (const auto& in : comp->inputs) collect_variables(in, vs);
    } else {
      for (const auto& a : std::get<BoolTest>(c).args) collect_variables(a, work);
    }
  }
  std::set<std::string> out;
  while (!work.empty()) {
    std::string v = work.back();
    work.pop_back();
    if (!out.insert(v).second) continue;
    if (auto it = inputs.find(v); it != inputs.end()) work.insert(work.end(), it->second.begin(), it->second.end());
  }
  return out;
}

PositionSet rule_backward(const Theory& th, const RewriteStep& step, const Term& source, const PositionSet& target) {
  const Rule& r = th.rule(step.label);
  const Position& w = step.redex;
  PositionSet out;
  bool active = false;
  for (const auto& p : target) {
    if (!w.is_prefix_of(p)) {
      out.insert(p);
      continue;
    }
    active = true;
    auto hit = locate_in_pattern(r.rhs_calls, p.suffix_after(w));
    if (!hit) continue;
    for (const auto& occ : variable_occurrences(r.lhs, hit->variable)) out.insert(w.concat(occ).concat(hit->offset));
  }
  if (!active) return out;
  // Everything the rule needs in order to fire.
  for (const auto& q : positions(r.lhs)) {
    if (!subterm_at(r.lhs, q).is_variable()) out.insert(w.concat(q));
  }
  std::vector<std::string> lhs_vars;
  collect_variables(r.lhs, lhs_vars);
  std::set<std::string> read = tested_variables(r);
  for (const auto& v : std::set<std::string>(lhs_vars.begin(), lhs_vars.end())) {
    auto occ = variable_occurrences(r.lhs, v);
    if (occ.size() < 2 && !read.count(v)) continue;
    for (const auto& o : occ) add_subtree(source, w.concat(o), out);
  }
  return out;
}

PositionSet builtin_backward(const RewriteStep& step, const Term& source, const PositionSet& target) {
  const Position& c = step.redex;
  PositionSet out;
  bool active = false;
  const Term call = subterm_at(source, c);
  for (const auto& p : target) {
    if (!c.is_prefix_of(p)) {
      out.insert(p);
      continue;
    }
    active = true;
    Position rel = p.suffix_after(c);
    const DependencyEntry* e = step.deps ? covering(*step.deps, rel) : nullptr;
    if (!e) {
      for (std::uint32_t k = 1; k <= call.arity(); ++k) add_subtree(source, c.child(k), out);
    } else if (e->copy_of) {
      out.insert(c.concat(e->copy_of->concat(rel.suffix_after(e->output))));
    } else {
      for (const auto& in : e->derived) add_subtree(source, c.concat(in), out);
    }
  }
  if (active) out.insert(c);
  return out;
}

// Flat: the record's unflat side is the source; unflat: it is the target.
PositionSet permutation_backward(const RewriteStep& step, const PositionSet& target, bool unflat_is_source) {
  PositionSet out;
  for (const auto& e : step.permutation.entries) {
    if (!e.flat) continue;
    const Position& from = unflat_is_source ? *e.flat : e.unflat;
    const Position& to = unflat_is_source ? e.unflat : *e.flat;
    if (e.kind == PermutationEntry::Kind::node) {
      if (target.count(from)) out.insert(to);
      continue;
    }
    for_each_below(target, from, [&](const Position& p) { out.insert(to.concat(p.suffix_after(from))); });
  }
  return out;
}

}  // namespace

SlicingCriterion criterion_from_pattern(const Trace& trace, std::size_t state_index, const FilterPattern& fp) {
  if (state_index >= trace.states.size()) throw Error("state index " + std::to_string(state_index) + " out of range");
  SlicingCriterion c;
  c.state_index = state_index;
  c.positions = ancestor_closure(filter_match(fp, trace.states[state_index]).criterion);
  return c;
}

PositionSet slice_step_backward(const Theory& th, const RewriteStep& step, const Term& source, const Term& target,
                                const PositionSet& target_positions) {
  for (const auto& p : target_positions) {
    if (!valid_position(target, p)) throw PositionError("position " + p.str() + " is invalid in the step target");
  }
  PositionSet out;
  switch (step.kind) {
    case StepKind::flat:
      out = permutation_backward(step, target_positions, true);
      break;
    case StepKind::unflat:
      out = permutation_backward(step, target_positions, false);
      break;
    case StepKind::rule:
      out = rule_backward(th, step, source, target_positions);
      break;
    case StepKind::builtin:
      out = builtin_backward(step, source, target_positions);
      break;
  }
  out = ancestor_closure(out);
  for (const auto& p : out) {
    if (!valid_position(source, p)) {
      throw PositionError(std::string(step_kind_name(step.kind)) + " step " + step.label + ": position " + p.str() +
                          " is invalid in the step source");
    }
  }
  return out;
}

SliceMetrics SlicedTrace::window(const std::vector<std::size_t>& indices) const {
  SliceMetrics m;
  for (auto i : indices) {
    m.sliced += sliced_symbols(i);
    m.original += original_symbols(i);
  }
  return m;
}

SlicedTrace slice_trace(const Theory& th, const Trace& trace, const SlicingCriterion& criterion) {
  const std::size_t n = criterion.state_index;
  if (n >= trace.states.size()) throw Error("criterion state index " + std::to_string(n) + " out of range");
  for (const auto& p : criterion.positions) {
    if (!valid_position(trace.states[n], p)) throw PositionError("criterion position " + p.str() + " is invalid");
  }
  SlicedTrace out;
  out.criterion = criterion;
  out.states.resize(trace.states.size());
  for (std::size_t i = 0; i < trace.states.size(); ++i) out.states[i].original = trace.states[i];
  out.states[n].kept = ancestor_closure(criterion.positions);
  for (std::size_t i = n; i-- > 0;) {
    out.states[i].kept = slice_step_backward(th, trace.steps[i], trace.states[i], trace.states[i + 1],
                                             out.states[i + 1].kept);
  }
  std::vector<std::size_t> all(trace.states.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  out.metrics = out.window(all);
  return out;
}

// ---------------------------------------------------------------------------
// Replay of refilled slices

namespace {

struct Divergence {
  std::string message;
};

class Refiller {
 public:
  Refiller(const Signature& sig, std::mt19937_64& rng) : sig_(sig), rng_(rng) {
    for (OpId op = 0; op < static_cast<OpId>(sig.op_count()); ++op) {
      const auto& info = sig.op(op);
      if (!info.literal && info.args.empty() && info.decl.ctor) constants_[info.result].push_back(op);
    }
  }

  Term leaf(const Term& t) {
    const auto& info = sig_.op(t.op());
    if (info.literal) return Term::literal(sig_, t.sort(), token(t.symbol()));
    const auto& pool = constants_[t.sort()];
    if (pool.empty()) return t;
    return Term::make(sig_, pool[pick(pool.size())], {});
  }

  Term refill(const Term& t) {
    if (t.is_variable()) return t;
    if (t.arity() == 0) return leaf(t);
    std::vector<Term> args;
    for (const auto& a : t.args()) args.push_back(refill(a));
    return Term::make(sig_, t.op(), std::move(args));
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::string token(const std::string& old) {
    std::string fresh = "hole" + std::to_string(counter_++);
    if (!old.empty() && old.find_first_not_of("0123456789") == std::string::npos) {
      return std::to_string(pick(1000));
    }
    if (!old.empty() && old.front() == '"') return "\"" + fresh + "\"";
    if (!old.empty() && old.front() == '\'') return "'" + fresh;
    return fresh;
  }

  const Signature& sig_;
  std::mt19937_64& rng_;
  std::map<SortId, std::vector<OpId>> constants_;
  std::size_t counter_ = 0;
};

bool match_syntactic(const Term& pattern, const Term& subject, Substitution& s) {
  if (pattern.is_variable()) {
    auto [it, fresh] = s.emplace(pattern.symbol(), subject);
    return fresh ? subject.sort() == pattern.sort() : it->second == subject;
  }
  if (subject.is_variable() || pattern.op() != subject.op() || pattern.symbol() != subject.symbol() ||
      pattern.arity() != subject.arity()) {
    return false;
  }
  for (std::size_t i = 0; i < pattern.arity(); ++i) {
    if (!match_syntactic(pattern.arg(i), subject.arg(i), s)) return false;
  }
  return true;
}

// BoolTest conditions and the computations they read.
void check_conditions(const Theory& th, const Rule& r, const Substitution& matcher) {
  const auto& sig = th.sig();
  std::set<std::string> needed = tested_variables(r);
  Substitution all = matcher;
  for (const auto& c : r.conditions) {
    if (const auto* comp = std::get_if<Computation>(&c)) {
      if (!needed.count(comp->variable)) continue;
      std::vector<Term> inputs;
      for (const auto& in : comp->inputs) inputs.push_back(substitute(sig, in, all));
      all[comp->variable] = th.builtin(comp->builtin)(sig, inputs).value;
      continue;
    }
    const auto& b = std::get<BoolTest>(c);
    std::vector<Term> args;
    for (const auto& a : b.args) args.push_back(flatten(sig, substitute(sig, a, all)));
    if (!th.predicate(b.predicate)(sig, args)) throw Divergence{"condition " + b.predicate + " fails"};
  }
}

// Rebuilds `shape` with every copied subtree taken from `from`.  `copies`
// maps a position of the result to the position of its source in `from`.
// Copies into regions without relevant positions fall back to `shape`.
Term rebuild(const Signature& sig, const Term& shape, const Position& at, const Term& from,
             const std::map<Position, Position>& copies, const PositionSet& kept) {
  if (auto it = copies.find(at); it != copies.end()) {
    if (valid_position(from, it->second)) return subterm_at(from, it->second);
    if (!any_below(kept, at)) return shape;
    throw Divergence{"position " + it->second.str() + " disappeared"};
  }
  if (shape.arity() == 0) return shape;
  std::vector<Term> args;
  for (std::uint32_t i = 0; i < shape.arity(); ++i) {
    args.push_back(rebuild(sig, shape.arg(i), at.child(i + 1), from, copies, kept));
  }
  return Term::make(sig, shape.op(), std::move(args));
}

Term replay_permutation(const Signature& sig, const RewriteStep& step, const Term& cur, const Term& original_target,
                        const PositionSet& kept_target, bool unflat_is_source) {
  std::map<Position, Position> copies;
  for (const auto& e : step.permutation.entries) {
    if (!e.flat) continue;
    const Position& src = unflat_is_source ? e.unflat : *e.flat;
    const Position& dst = unflat_is_source ? *e.flat : e.unflat;
    if (e.kind == PermutationEntry::Kind::copy) copies.emplace(dst, src);
  }
  return rebuild(sig, original_target, Position{}, cur, copies, kept_target);
}

Term replay_one(const Theory& th, const RewriteStep& step, const Term& cur, const Term& original_target,
                const PositionSet& kept_target) {
  const auto& sig = th.sig();
  switch (step.kind) {
    case StepKind::flat:
      return replay_permutation(sig, step, cur, original_target, kept_target, true);
    case StepKind::unflat:
      return replay_permutation(sig, step, cur, original_target, kept_target, false);
    case StepKind::rule:
    case StepKind::builtin:
      break;
  }
  const Position& w = step.redex;
  if (!valid_position(cur, w)) throw Divergence{"redex " + w.str() + " disappeared"};
  if (!any_below(kept_target, w)) return replace_at_raw(sig, cur, w, subterm_at(original_target, w));
  if (step.kind == StepKind::rule) {
    const Rule& r = th.rule(step.label);
    Substitution s;
    if (!match_syntactic(r.lhs, subterm_at(cur, w), s)) throw Divergence{"rule " + r.label + " does not match"};
    check_conditions(th, r, s);
    return replace_at_raw(sig, cur, w, substitute(sig, r.rhs_calls, s));
  }
  Term call = subterm_at(cur, w);
  if (call.is_variable() || call.symbol() != step.label) throw Divergence{"no call to " + step.label};
  return replace_at_raw(sig, cur, w, th.builtin(step.label)(sig, call.args()).value);
}

// Symbols of `cur` and `original` agree at every position of `at`.
void agree(const Term& cur, const Term& original, const PositionSet& at, const char* what) {
  for (const auto& p : at) {
    if (!valid_position(cur, p) || subterm_at(cur, p).symbol() != subterm_at(original, p).symbol()) {
      throw Divergence{std::string(what) + " position " + p.str() + " differs"};
    }
  }
}

}  // namespace

ReplayCheckReport replay_check(const Theory& th, const Trace& trace, const SlicedTrace& sliced, std::size_t samples,
                               std::uint64_t seed) {
  const auto& sig = th.sig();
  const std::size_t n = sliced.criterion.state_index;
  ReplayCheckReport report;
  report.samples = samples;
  std::mt19937_64 rng(seed);
  Refiller refiller(sig, rng);
  const SlicedTerm& first = sliced.states.at(0);
  const Term& goal = trace.states.at(n);
  for (std::size_t k = 0; k < samples; ++k) {
    Term cur = first.original;
    for (const auto& h : first.holes()) cur = replace_at_raw(sig, cur, h, refiller.refill(subterm_at(cur, h)));
    std::size_t i = 0;
    try {
      for (; i < n; ++i) {
        const SlicedTerm& next = sliced.states[i + 1];
        cur = replay_one(th, trace.steps[i], cur, next.original, next.kept);
        agree(cur, next.original, next.kept, "kept");
      }
      agree(cur, goal, sliced.criterion.positions, "criterion");
      ++report.agreed;
    } catch (const std::exception& e) {
      if (!report.failed_sample) {
        report.failed_sample = k;
        if (i < n) report.failed_step = i;
        report.message = e.what();
      }
    } catch (const Divergence& d) {
      if (!report.failed_sample) {
        report.failed_sample = k;
        if (i < n) report.failed_step = i;
        report.message = d.message;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json sliced_trace_to_json(const SlicedTrace& sliced, const Trace& trace, const Signature& sig) {
  using nlohmann::json;
  json j = trace_to_json(trace, sig);
  json crit{{"state_index", sliced.criterion.state_index}, {"positions", json::array()}};
  for (const auto& p : sliced.criterion.positions) crit["positions"].push_back(position_to_json(p));
  j["criterion"] = std::move(crit);
  json states = json::array();
  for (const auto& s : sliced.states) {
    json kept = json::array();
    for (const auto& p : s.kept) kept.push_back(position_to_json(p));
    states.push_back({{"kept_positions", std::move(kept)},
                      {"slice", s.render(sig, "*")},
                      {"symbols", s.symbol_count()},
                      {"original_symbols", s.original.size()}});
  }
  j["slices"] = std::move(states);
  j["metrics"] = {{"sliced_symbols", sliced.metrics.sliced},
                  {"original_symbols", sliced.metrics.original},
                  {"ratio", sliced.metrics.ratio()},
                  {"reduction", sliced.metrics.reduction()}};
  return j;
}

SlicedTrace sliced_trace_from_json(const nlohmann::json& j, const Trace& trace) {
  SlicedTrace out;
  const auto& crit = j.at("criterion");
  out.criterion.state_index = crit.at("state_index").get<std::size_t>();
  for (const auto& p : crit.at("positions")) out.criterion.positions.insert(position_from_json(p));
  const auto& slices = j.at("slices");
  if (slices.size() != trace.states.size()) throw Error("sliced trace document: slice count mismatch");
  for (std::size_t i = 0; i < slices.size(); ++i) {
    SlicedTerm s{trace.states[i], {}};
    for (const auto& p : slices[i].at("kept_positions")) {
      Position pos = position_from_json(p);
      if (!valid_position(s.original, pos)) throw Error("sliced trace document: invalid kept position " + pos.str());
      s.kept.insert(pos);
    }
    out.states.push_back(std::move(s));
  }
  std::vector<std::size_t> all(out.states.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  out.metrics = out.window(all);
  return out;
}

}  // namespace webtlr
