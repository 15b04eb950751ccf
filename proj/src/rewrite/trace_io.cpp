#include "webtlr/trace_io.hpp"

namespace webtlr {

using nlohmann::json;

json position_to_json(const Position& p) { return p.str(); }

Position position_from_json(const json& j) { return Position::parse(j.get<std::string>()); }

namespace {

const char* entry_kind(PermutationEntry::Kind k) {
  switch (k) {
    case PermutationEntry::Kind::copy:
      return "copy";
    case PermutationEntry::Kind::node:
      return "node";
    case PermutationEntry::Kind::identity:
      return "identity";
  }
  return "?";
}

PermutationEntry::Kind entry_kind(const std::string& s) {
  if (s == "copy") return PermutationEntry::Kind::copy;
  if (s == "node") return PermutationEntry::Kind::node;
  if (s == "identity") return PermutationEntry::Kind::identity;
  throw Error("unknown permutation entry kind '" + s + "'");
}

Term parse_raw(const std::string& text, const Signature& sig, std::optional<SortId> sort = std::nullopt) {
  ParseOptions o;
  o.canonicalize = false;
  o.expected_sort = sort;
  return parse_term(text, sig, o);
}

}  // namespace

json step_to_json(const RewriteStep& step, const Signature& sig) {
  auto sort_name_of = [&](const Term& t) { return sig.sort_name(t.sort()); };
  json j;
  j["kind"] = step_kind_name(step.kind);
  j["label"] = step.label;
  j["position"] = position_to_json(step.redex);
  if (step.kind == StepKind::rule) {
    json m = json::array();
    for (const auto& [var, value] : step.matcher) {
      m.push_back({{"var", var}, {"term", value.str()}, {"sort", sort_name_of(value)}});
    }
    j["matcher"] = std::move(m);
  }
  if (step.kind == StepKind::flat || step.kind == StepKind::unflat) {
    json entries = json::array();
    for (const auto& e : step.permutation.entries) {
      json je{{"kind", entry_kind(e.kind)}, {"unflat", position_to_json(e.unflat)}};
      if (e.flat) je["flat"] = position_to_json(*e.flat);
      if (e.kind != PermutationEntry::Kind::copy) je["op"] = e.op;
      if (e.kind == PermutationEntry::Kind::node) je["arity"] = e.arity;
      entries.push_back(std::move(je));
    }
    j["permutation"] = std::move(entries);
  }
  if (step.deps) {
    json deps = json::array();
    for (const auto& e : step.deps->entries) {
      json je{{"output", position_to_json(e.output)}};
      if (e.copy_of) {
        je["copy_of"] = position_to_json(*e.copy_of);
      } else {
        json d = json::array();
        for (const auto& p : e.derived) d.push_back(position_to_json(p));
        je["derived"] = std::move(d);
      }
      deps.push_back(std::move(je));
    }
    j["dependency"] = std::move(deps);
  }
  return j;
}

RewriteStep step_from_json(const json& j, const Signature& sig) {
  RewriteStep s;
  s.kind = parse_step_kind(j.at("kind").get<std::string>());
  s.label = j.at("label").get<std::string>();
  s.redex = position_from_json(j.at("position"));
  if (j.contains("matcher")) {
    for (const auto& b : j.at("matcher")) {
      s.matcher.emplace(b.at("var").get<std::string>(),
                        parse_raw(b.at("term").get<std::string>(), sig, sig.sort(b.at("sort").get<std::string>())));
    }
  }
  if (j.contains("permutation")) {
    for (const auto& je : j.at("permutation")) {
      PermutationEntry e;
      e.kind = entry_kind(je.at("kind").get<std::string>());
      e.unflat = position_from_json(je.at("unflat"));
      if (je.contains("flat")) e.flat = position_from_json(je.at("flat"));
      if (je.contains("op")) e.op = je.at("op").get<std::string>();
      if (je.contains("arity")) e.arity = je.at("arity").get<std::uint32_t>();
      s.permutation.entries.push_back(std::move(e));
    }
  }
  if (j.contains("dependency")) {
    DependencyRecord d;
    for (const auto& je : j.at("dependency")) {
      DependencyEntry e;
      e.output = position_from_json(je.at("output"));
      if (je.contains("copy_of")) {
        e.copy_of = position_from_json(je.at("copy_of"));
      } else {
        for (const auto& p : je.at("derived")) e.derived.push_back(position_from_json(p));
      }
      d.entries.push_back(std::move(e));
    }
    s.deps = std::move(d);
  }
  return s;
}

json trace_to_json(const Trace& trace, const Signature& sig) {
  json j;
  j["format"] = "webtlr-trace/1";
  j["theory_hash"] = trace.theory_hash;
  j["metadata"] = trace.metadata;
  json states = json::array();
  for (const auto& s : trace.states) states.push_back(s.str());
  j["states"] = std::move(states);
  json steps = json::array();
  for (const auto& s : trace.steps) steps.push_back(step_to_json(s, sig));
  j["steps"] = std::move(steps);
  return j;
}

Trace trace_from_json(const json& j, const Signature& sig) {
  if (j.value("format", "") != "webtlr-trace/1") throw Error("not a trace document (format tag missing)");
  Trace t;
  t.theory_hash = j.at("theory_hash").get<std::string>();
  t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  for (const auto& s : j.at("states")) t.states.push_back(parse_raw(s.get<std::string>(), sig));
  for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s, sig));
  if (t.states.size() != t.steps.size() + 1) throw Error("trace document: states/steps length mismatch");
  return t;
}

}  // namespace webtlr
