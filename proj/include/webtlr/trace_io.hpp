// Trace interchange document (JSON).
#pragma once

#include "json.hpp"

#include "webtlr/rewrite.hpp"

namespace webtlr {

nlohmann::json position_to_json(const Position& p);
Position position_from_json(const nlohmann::json& j);

nlohmann::json step_to_json(const RewriteStep& step, const Signature& sig);
RewriteStep step_from_json(const nlohmann::json& j, const Signature& sig);

nlohmann::json trace_to_json(const Trace& trace, const Signature& sig);
// States are parsed without canonicalization so intermediate states survive.
Trace trace_from_json(const nlohmann::json& j, const Signature& sig);

}  // namespace webtlr
