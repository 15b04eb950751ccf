// Backward trace slicing: relevance of positions in one trace state is
// propagated back to the initial state through every expanded step, and the
// irrelevant parts of each state are replaced by holes.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "webtlr/filter.hpp"
#include "webtlr/rewrite.hpp"

namespace webtlr {

struct SlicingCriterion {
  std::size_t state_index = 0;
  PositionSet positions;  // ancestor-closed
};

// Criterion positions of `fp` matched against the indexed state.  An empty
// criterion is returned when the pattern matches nothing.
SlicingCriterion criterion_from_pattern(const Trace& trace, std::size_t state_index, const FilterPattern& fp);

// Source positions that influence `target_positions` across one step.
// Throws PositionError when a target position is invalid in `target`.
PositionSet slice_step_backward(const Theory& th, const RewriteStep& step, const Term& source, const Term& target,
                                const PositionSet& target_positions);

struct SliceMetrics {
  std::size_t sliced = 0;    // |T•|, a hole counts as one symbol
  std::size_t original = 0;  // |T|
  double ratio() const { return original ? static_cast<double>(sliced) / static_cast<double>(original) : 0.0; }
  double reduction() const { return 1.0 - ratio(); }
};

struct SlicedTrace {
  SlicingCriterion criterion;
  std::vector<SlicedTerm> states;  // one per trace state
  SliceMetrics metrics;            // over all states

  std::size_t sliced_symbols(std::size_t i) const { return states[i].symbol_count(); }
  std::size_t original_symbols(std::size_t i) const { return states[i].original.size(); }
  SliceMetrics window(const std::vector<std::size_t>& indices) const;
};

// States after the criterion's state are all holes.
SlicedTrace slice_trace(const Theory& th, const Trace& trace, const SlicingCriterion& criterion);

struct ReplayCheckReport {
  std::size_t samples = 0;
  std::size_t agreed = 0;
  bool ok() const { return agreed == samples; }
  // First divergence.
  std::optional<std::size_t> failed_sample;
  std::optional<std::size_t> failed_step;
  std::string message;
};

// Every leaf inside a hole of the sliced initial state is replaced by a
// fresh literal of its sort or another constant of its sort, and the
// recorded steps are replayed position by position up to the criterion's
// state.  A sample agrees when every relevant step replays and the symbols
// at the criterion positions equal the original ones.  Steps with no
// relevant position at or below their redex take the original result.
ReplayCheckReport replay_check(const Theory& th, const Trace& trace, const SlicedTrace& sliced, std::size_t samples,
                               std::uint64_t seed = 1);

// Trace document extended with the criterion, `kept_positions` and the
// rendered slice (holes as `*`) of every state, and the metrics.
nlohmann::json sliced_trace_to_json(const SlicedTrace& sliced, const Trace& trace, const Signature& sig);
// Reads the kept positions back; `•` and `*` holes in rendered slices are
// both accepted and ignored.
SlicedTrace sliced_trace_from_json(const nlohmann::json& j, const Trace& trace);

}  // namespace webtlr
