#include <algorithm>
#include <fstream>
#include <sstream>

#include "webtlr/service.hpp"
#include "webtlr/trace_io.hpp"

namespace webtlr::service {

using nlohmann::json;

int ServiceError::http_status() const {
  if (code_ == "not_found") return 404;
  if (code_ == "store_error" || code_ == "internal_error") return 500;
  return 400;
}

json error_document(const ServiceError& e) {
  return {{"error", {{"code", e.code()}, {"exit_status", e.exit_status()}, {"message", e.what()}}}};
}

std::string serialize(const json& j) { return j.dump(2) + "\n"; }

std::string content_id(std::string_view text) { return web::hex64(web::fnv1a(text)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ServiceError("load_error", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

// "origin:line:column: message" without the parser's own location suffix.
std::string located(const std::string& origin, const ParseError& e) {
  std::string msg = e.what();
  std::string suffix = " at " + std::to_string(e.line()) + ":" + std::to_string(e.column());
  if (msg.size() >= suffix.size() && msg.compare(msg.size() - suffix.size(), suffix.size(), suffix) == 0) {
    msg.resize(msg.size() - suffix.size());
  }
  return origin + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + msg;
}

}  // namespace

web::WebModel load_spec_text(const std::string& text, const std::string& origin) {
  try {
    return web::parse_webapp(text);
  } catch (const ParseError& e) {
    throw ServiceError("parse_error", located(origin, e));
  } catch (const Error& e) {
    throw ServiceError("load_error", origin + ": " + e.what());
  }
}

ltl::Formula load_property(const web::WebModel& m, const std::string& text) {
  try {
    return ltl::parse_property(m, text);
  } catch (const ParseError& e) {
    throw ServiceError("parse_error", located("property", e));
  } catch (const Error& e) {
    throw ServiceError("parse_error", std::string("property: ") + e.what());
  }
}

namespace {

json metrics_json(const SliceMetrics& m) {
  return {{"sliced_symbols", m.sliced},
          {"original_symbols", m.original},
          {"ratio", m.ratio()},
          {"reduction", m.reduction()}};
}

json trace_part(const json& doc) {
  json out;
  for (const char* k : {"format", "theory_hash", "metadata", "states", "steps"}) {
    if (doc.contains(k)) out[k] = doc.at(k);
  }
  return out;
}

std::string meta(const Trace& t, const std::string& key) {
  auto it = t.metadata.find(key);
  return it == t.metadata.end() ? std::string() : it->second;
}

}  // namespace

std::string request_key(const CheckRequest& req) {
  json j{{"spec", web::hex64(web::fnv1a(req.spec))},
         {"property", req.property},
         {"states", req.max_states},
         {"depth", req.max_depth}};
  return content_id(j.dump());
}

CheckOutcome run_check(const CheckRequest& req) {
  web::WebModel m = load_spec_text(req.spec, "spec");
  ltl::Formula f = load_property(m, req.property);
  ltl::Budget budget;
  budget.max_states = req.max_states;
  budget.max_depth = req.max_depth;
  ltl::Verdict v = ltl::check_webapp(m, f, budget);

  CheckOutcome out;
  json verdict{{"format", "webtlr-verdict/1"},
               {"verdict", ltl::status_name(v.status)},
               {"property", req.property},
               {"formula", f.str()},
               {"theory_hash", m.source_hash},
               {"budget", {{"states", req.max_states}, {"depth", req.max_depth}}},
               {"stats",
                {{"states", v.stats.states},
                 {"transitions", v.stats.transitions},
                 {"product_states", v.stats.product_states},
                 {"max_depth", v.stats.max_depth}}},
               {"trace_id", nullptr}};
  switch (v.status) {
    case ltl::Status::fulfilled:
      out.exit_status = exit_fulfilled;
      break;
    case ltl::Status::budget_exhausted:
      out.exit_status = exit_budget;
      verdict["exhausted"] = v.exhausted;
      break;
    case ltl::Status::refuted: {
      out.exit_status = exit_refuted;
      v.trace.metadata["property_text"] = req.property;
      v.trace.metadata["spec_source"] = req.spec;
      json doc = trace_to_json(v.trace, m.theory.sig());
      verdict["trace_id"] = content_id(serialize(doc));
      verdict["trace_states"] = v.trace.states.size();
      verdict["lasso_start"] = v.lasso_start;
      out.trace = std::move(doc);
      break;
    }
  }
  out.verdict = std::move(verdict);
  return out;
}

std::shared_ptr<const LoadedTrace> load_trace(const json& doc) {
  auto out = std::make_shared<LoadedTrace>();
  try {
    json part = trace_part(doc);
    out->id = content_id(serialize(part));
    const json& md = part.at("metadata");
    if (!md.contains("spec_source")) throw Error("trace document carries no spec source");
    auto model = std::make_shared<web::WebModel>(load_spec_text(md.at("spec_source").get<std::string>(), "spec"));
    if (model->source_hash != part.at("theory_hash").get<std::string>()) {
      throw Error("embedded spec does not match the trace's theory hash");
    }
    out->trace = trace_from_json(part, model->theory.sig());
    out->model = std::move(model);
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw ServiceError("load_error", std::string("trace: ") + e.what());
  }
  out->boundaries = group_boundaries(out->trace);
  return out;
}

std::shared_ptr<const LoadedTrace> load_trace_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ServiceError("load_error", std::string("trace: ") + e.what());
  }
  return load_trace(doc);
}

std::size_t select_state(const LoadedTrace& t, const std::string& selector) {
  const std::size_t n = t.trace.states.size();
  if (selector == "last") return n - 1;
  std::size_t idx = 0;
  if (selector.empty() || !std::all_of(selector.begin(), selector.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ServiceError("bad_request", "state selector must be an index or \"last\": " + selector);
  }
  try {
    idx = std::stoul(selector);
  } catch (const std::exception&) {
    idx = n;
  }
  if (idx >= n) {
    throw ServiceError("out_of_range", "state index " + selector + " out of range (trace has " + std::to_string(n) +
                                           " states)");
  }
  return idx;
}

SlicingCriterion slice_criterion(const LoadedTrace& t, std::size_t index, const std::string& pattern) {
  if (index >= t.trace.states.size()) throw ServiceError("out_of_range", "state index out of range");
  FilterPattern fp;
  try {
    fp = parse_filter(pattern);
  } catch (const ParseError& e) {
    throw ServiceError("pattern_error", located("pattern", e));
  } catch (const Error& e) {
    throw ServiceError("pattern_error", std::string("pattern: ") + e.what());
  }
  return criterion_from_pattern(t.trace, index, fp);
}

std::vector<std::size_t> final_window(const LoadedTrace& t, std::size_t index) {
  std::vector<std::size_t> out;
  for (auto b : t.boundaries) {
    if (b < index) out.push_back(b);
  }
  out.push_back(index);
  if (out.size() > kFinalWindow) out.erase(out.begin(), out.end() - kFinalWindow);
  return out;
}

json slice_document(const LoadedTrace& t, const std::string& selector, const std::string& pattern) {
  std::size_t index = select_state(t, selector);
  SlicingCriterion c = slice_criterion(t, index, pattern);
  return slice_document(t, pattern, slice_trace(t.model->theory, t.trace, c));
}

json slice_document(const LoadedTrace& t, const std::string& pattern, const SlicedTrace& sliced) {
  const std::size_t index = sliced.criterion.state_index;
  json j = sliced_trace_to_json(sliced, t.trace, t.model->theory.sig());
  j["selection"] = {{"trace_id", t.id}, {"state_index", index}, {"pattern", pattern}};
  j["selected_metrics"] = metrics_json(sliced.window({index}));
  auto window = final_window(t, index);
  json w = metrics_json(sliced.window(window));
  w["states"] = window;
  j["final_window"] = std::move(w);
  return j;
}

json state_document(const LoadedTrace& t, std::size_t index) {
  if (index >= t.trace.states.size()) throw ServiceError("out_of_range", "state index out of range");
  const Term& s = t.trace.states[index];
  std::function<json(const Term&, const Position&)> tree = [&](const Term& x, const Position& at) {
    json children = json::array();
    for (std::size_t i = 0; i < x.arity(); ++i) {
      children.push_back(tree(x.arg(i), at.child(static_cast<std::uint32_t>(i + 1))));
    }
    return json{{"symbol", x.symbol()}, {"position", at.str()}, {"children", std::move(children)}};
  };
  json browsers = json::array();
  for (const auto& b : t.model->scenario.browsers) {
    json page = nullptr;
    for (const auto& p : t.model->pages) {
      if (web::cur_page(s, b.id, p.name)) page = p.name;
    }
    browsers.push_back({{"id", b.id}, {"page", page}});
  }
  json step = nullptr;
  if (index > 0) {
    const auto& st = t.trace.steps[index - 1];
    step = {{"kind", step_kind_name(st.kind)}, {"label", st.label}, {"position", st.redex.str()}};
  }
  return {{"format", "webtlr-state/1"},
          {"trace_id", t.id},
          {"index", index},
          {"term", s.str()},
          {"symbols", s.size()},
          {"canonical", std::binary_search(t.boundaries.begin(), t.boundaries.end(), index)},
          {"step", std::move(step)},
          {"browsers", std::move(browsers)},
          {"tree", tree(s, Position{})}};
}

json trace_summary(const LoadedTrace& t) {
  json steps = json::array();
  for (const auto& s : t.trace.steps) steps.push_back({{"kind", step_kind_name(s.kind)}, {"label", s.label}});
  json lasso = nullptr;
  if (!meta(t.trace, "lasso_start").empty()) lasso = std::stoul(meta(t.trace, "lasso_start"));
  return {{"format", "webtlr-trace-summary/1"},
          {"trace_id", t.id},
          {"theory_hash", t.trace.theory_hash},
          {"property", meta(t.trace, "property_text")},
          {"verdict", meta(t.trace, "verdict")},
          {"lasso_start", lasso},
          {"states", t.trace.states.size()},
          {"boundaries", t.boundaries},
          {"steps", std::move(steps)}};
}

VerifyReport replay_verify(const json& doc, std::size_t samples, std::uint64_t seed) {
  auto t = load_trace(doc);
  VerifyReport out;
  ReplayReport r = replay(t->model->theory, t->trace);
  json rep{{"ok", r.ok}};
  if (!r.ok) {
    rep["failed_step"] = r.failed_step;
    rep["message"] = r.message;
  }
  out.ok = r.ok;
  json slice = nullptr;
  if (doc.contains("slices")) {
    SlicedTrace sliced;
    try {
      sliced = sliced_trace_from_json(doc, t->trace);
    } catch (const Error& e) {
      throw ServiceError("load_error", std::string("sliced trace: ") + e.what());
    }
    ReplayCheckReport c = replay_check(t->model->theory, t->trace, sliced, samples, seed);
    slice = {{"ok", c.ok()}, {"samples", c.samples}, {"agreed", c.agreed}, {"seed", seed}};
    if (!c.ok()) {
      slice["failed_sample"] = *c.failed_sample;
      if (c.failed_step) slice["failed_step"] = *c.failed_step;
      slice["message"] = c.message;
    }
    out.ok = out.ok && c.ok();
  }
  out.document = {{"format", "webtlr-replay/1"}, {"trace_id", t->id}, {"replay", rep}, {"slice", slice}};
  return out;
}

}  // namespace webtlr::service
