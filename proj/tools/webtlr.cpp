// webtlr: check, slice, render-graph, serve, replay-verify.
// Exit status: 0 fulfilled, 1 refuted, 2 budget exhausted, 3 parse/load error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "webtlr/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webtlr::service;

namespace {

struct Options {
  std::string format = "text";
  std::string spec;
  std::string property;
  std::string out;
  std::string store;
  std::size_t budget_states = webtlr::ltl::Budget{}.max_states;
  std::size_t budget_depth = webtlr::ltl::Budget{}.max_depth;
  std::string trace;
  std::string selector;
  std::string pattern;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t samples = 100;
  std::uint64_t seed = 1;
};

void add_format(CLI::App* cmd, Options& o) {
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ServiceError("store_error", "cannot write " + path.string());
  out << text;
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * x);
  return buf;
}

std::string metrics_line(const std::string& what, const json& m) {
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.3f", m.at("ratio").get<double>());
  return what + ": |T| = " + std::to_string(m.at("original_symbols").get<std::size_t>()) +
         ", |T•| = " + std::to_string(m.at("sliced_symbols").get<std::size_t>()) + ", ratio " + ratio +
         ", reduction " + percent(m.at("reduction").get<double>()) + "\n";
}

int cmd_check(const Options& o) {
  CheckRequest req;
  req.spec = read_file(o.spec);
  req.property = o.property;
  req.max_states = o.budget_states;
  req.max_depth = o.budget_depth;
  CheckOutcome r;
  try {
    if (o.store.empty()) {
      r = run_check(req);
    } else {
      TraceStore store(o.store);
      r = stored_check(store, req);
    }
  } catch (const ServiceError& e) {
    std::string msg = e.what();
    if (msg.rfind("spec:", 0) == 0) msg = o.spec + msg.substr(4);
    throw ServiceError(e.code(), msg);
  }
  std::string path;
  if (r.trace) {
    path = o.out.empty() ? fs::path(o.spec).stem().string() + ".trace.json" : o.out;
    write_text(path, serialize(*r.trace));
  }
  if (o.format == "json") {
    std::cout << serialize(r.verdict);
  } else {
    const json& v = r.verdict;
    const json& s = v.at("stats");
    std::cout << v.at("verdict").get<std::string>() << "\n";
    std::cout << "states: " << s.at("states") << ", transitions: " << s.at("transitions")
              << ", product states: " << s.at("product_states") << "\n";
    if (v.contains("exhausted")) std::cout << "budget exhausted: " << v.at("exhausted").get<std::string>() << "\n";
    if (r.trace) {
      std::cout << "counterexample: " << v.at("trace_states") << " states, lasso at " << v.at("lasso_start") << "\n";
      std::cout << "trace " << v.at("trace_id").get<std::string>() << " written to " << path << "\n";
    }
  }
  return r.exit_status;
}

int cmd_slice(const Options& o) {
  auto t = load_trace_text(read_file(o.trace));
  json doc = slice_document(*t, o.selector, o.pattern);
  std::string path = o.out;
  if (path.empty()) {
    std::string stem = fs::path(o.trace).stem().string();
    if (stem.size() > 6 && stem.ends_with(".trace")) stem.resize(stem.size() - 6);
    path = stem + ".slice.json";
  }
  write_text(path, serialize(doc));
  json summary{{"format", "webtlr-slice-summary/1"},
               {"trace_id", t->id},
               {"state_index", doc.at("selection").at("state_index")},
               {"criterion_positions", doc.at("criterion").at("positions").size()},
               {"selected", doc.at("selected_metrics")},
               {"final_window", doc.at("final_window")},
               {"all_states", doc.at("metrics")},
               {"output", path}};
  if (o.format == "json") {
    std::cout << serialize(summary);
  } else {
    std::cout << "state " << summary.at("state_index") << " of " << t->trace.states.size() << ", "
              << summary.at("criterion_positions") << " criterion positions\n";
    std::cout << metrics_line("selected state", summary.at("selected"));
    std::cout << metrics_line("final " + std::to_string(doc.at("final_window").at("states").size()) + " states",
                              summary.at("final_window"));
    std::cout << metrics_line("all states", summary.at("all_states"));
    std::cout << "slice written to " << path << "\n";
  }
  return 0;
}

int cmd_render_graph(const Options& o) {
  auto m = load_spec_text(read_file(o.spec), o.spec);
  if (o.format == "json") {
    std::cout << serialize(webtlr::web::graph_json(m));
  } else {
    std::cout << webtlr::web::render_dot(m);
  }
  return 0;
}

int cmd_serve(const Options& o) {
  TraceStore store(o.store);
  ApiServer server(store);
  std::cerr << "serving /api/v1 on " << o.host << ":" << o.port << ", store " << o.store << "\n";
  if (!server.run(o.host, o.port)) throw ServiceError("load_error", "cannot bind " + o.host + ":" + std::to_string(o.port));
  return 0;
}

int cmd_replay_verify(const Options& o) {
  json doc;
  try {
    doc = json::parse(read_file(o.trace));
  } catch (const json::exception& e) {
    throw ServiceError("load_error", o.trace + ": " + e.what());
  }
  auto r = replay_verify(doc, o.samples, o.seed);
  if (o.format == "json") {
    std::cout << serialize(r.document);
  } else {
    const json& rep = r.document.at("replay");
    std::cout << "replay: " << (rep.at("ok").get<bool>() ? "ok" : "diverged");
    if (rep.contains("message")) std::cout << " at step " << rep.at("failed_step") << ": " << rep.at("message").get<std::string>();
    std::cout << "\n";
    const json& s = r.document.at("slice");
    if (!s.is_null()) {
      std::cout << "slice: " << s.at("agreed") << "/" << s.at("samples") << " refills agree";
      if (s.contains("message")) std::cout << "; sample " << s.at("failed_sample") << ": " << s.at("message").get<std::string>();
      std::cout << "\n";
    }
  }
  return r.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model checking and backward trace slicing of web application navigation models"};
  app.require_subcommand(1);
  Options o;

  auto* check = app.add_subcommand("check", "Check an LTL property of a navigation spec");
  check->add_option("spec", o.spec, "Navigation spec file")->required();
  check->add_option("--prop", o.property, "LTL property")->required();
  check->add_option("--out", o.out, "Counterexample trace file (default <spec>.trace.json)");
  check->add_option("--store", o.store, "Trace store directory");
  check->add_option("--budget-states", o.budget_states, "Maximum number of explored states")->capture_default_str();
  check->add_option("--budget-depth", o.budget_depth, "Maximum search depth")->capture_default_str();
  add_format(check, o);

  auto* slice = app.add_subcommand("slice", "Slice a trace backwards from a filtering pattern");
  slice->add_option("trace", o.trace, "Trace file")->required();
  slice->add_option("state", o.selector, "State index or \"last\"")->required();
  slice->add_option("pattern", o.pattern, "Filtering pattern")->required();
  slice->add_option("--out", o.out, "Sliced trace file (default <trace>.slice.json)");
  add_format(slice, o);

  auto* graph = app.add_subcommand("render-graph", "Print the navigation graph");
  graph->add_option("spec", o.spec, "Navigation spec file")->required();
  add_format(graph, o);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port")->capture_default_str();
  serve->add_option("--store", o.store, "Trace store directory")->required();

  auto* verify = app.add_subcommand("replay-verify", "Replay a trace, and refill-check a sliced trace");
  verify->add_option("trace", o.trace, "Trace or sliced trace file")->required();
  verify->add_option("--samples", o.samples, "Random hole refills")->capture_default_str();
  verify->add_option("--seed", o.seed, "Refill seed")->capture_default_str();
  add_format(verify, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : exit_load;
  }

  try {
    if (*check) return cmd_check(o);
    if (*slice) return cmd_slice(o);
    if (*graph) return cmd_render_graph(o);
    if (*serve) return cmd_serve(o);
    if (*verify) return cmd_replay_verify(o);
  } catch (const ServiceError& e) {
    if (o.format == "json") std::cout << serialize(error_document(e));
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return e.exit_status();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_load;
  }
  return exit_load;
}
