// Command documents, the content-addressed trace store and the HTTP API.
// The CLI and the server build their output documents with the same
// functions and serialize them with `serialize`, so both are byte-identical.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "webtlr/ltl.hpp"
#include "webtlr/slicer.hpp"
#include "webtlr/webapp.hpp"

namespace webtlr::service {

enum ExitStatus : int { exit_fulfilled = 0, exit_refuted = 1, exit_budget = 2, exit_load = 3 };

// Machine-readable failure.  Codes: parse_error, load_error, pattern_error,
// out_of_range, bad_request, not_found, store_error, internal_error.
class ServiceError : public Error {
 public:
  ServiceError(std::string code, const std::string& what) : Error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }
  int exit_status() const { return exit_load; }
  int http_status() const;

 private:
  std::string code_;
};

nlohmann::json error_document(const ServiceError& e);

// Two-space indented JSON with a trailing newline.
std::string serialize(const nlohmann::json& j);
std::string content_id(std::string_view text);
std::string read_file(const std::filesystem::path& path);

// Parses a navigation spec; errors become parse_error or load_error with the
// line and column in the message.
web::WebModel load_spec_text(const std::string& text, const std::string& origin);
// Property syntax and predicate errors become parse_error.
ltl::Formula load_property(const web::WebModel& model, const std::string& text);

struct CheckRequest {
  std::string spec;  // source text
  std::string property;
  std::size_t max_states = ltl::Budget{}.max_states;
  std::size_t max_depth = ltl::Budget{}.max_depth;
};

// Identity of a check request: spec hash, property and budgets.
std::string request_key(const CheckRequest& req);

struct CheckOutcome {
  nlohmann::json verdict;                // verdict document
  std::optional<nlohmann::json> trace;   // trace document, refuted only
  int exit_status = exit_fulfilled;
};

// Parses the spec and the property and runs the checker.  The trace
// document carries the spec source and the property in its metadata.
CheckOutcome run_check(const CheckRequest& req);

// A stored or file trace with the model it was produced from.
struct LoadedTrace {
  std::string id;  // content id of the trace document
  Trace trace;
  std::shared_ptr<const web::WebModel> model;
  std::vector<std::size_t> boundaries;
};

// Rejects documents whose embedded spec does not hash to the trace's theory.
std::shared_ptr<const LoadedTrace> load_trace(const nlohmann::json& doc);
std::shared_ptr<const LoadedTrace> load_trace_text(const std::string& text);

// "last" or a decimal index.
std::size_t select_state(const LoadedTrace& t, const std::string& selector);

// Sliced trace document plus "selection", the selected state's metrics and
// the metrics of the final window (last 7 canonical states up to the
// selected one).
nlohmann::json slice_document(const LoadedTrace& t, const std::string& selector, const std::string& pattern);
nlohmann::json slice_document(const LoadedTrace& t, const std::string& pattern, const SlicedTrace& sliced);
SlicingCriterion slice_criterion(const LoadedTrace& t, std::size_t index, const std::string& pattern);
constexpr std::size_t kFinalWindow = 7;
std::vector<std::size_t> final_window(const LoadedTrace& t, std::size_t index);

// Rendered term, tree, browser pages and incoming step of state `index`.
nlohmann::json state_document(const LoadedTrace& t, std::size_t index);
nlohmann::json trace_summary(const LoadedTrace& t);

// Rewrite replay of the trace, and replay_check of the slice when `sliced`
// is a sliced trace document.
struct VerifyReport {
  bool ok = true;
  nlohmann::json document;
};
VerifyReport replay_verify(const nlohmann::json& doc, std::size_t samples, std::uint64_t seed);

// Directory of trace documents keyed by content id, an index of them, and
// verdict documents keyed by request key.  Entries are never rewritten;
// reads are concurrent and writes serialized.
class TraceStore {
 public:
  explicit TraceStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  std::string put_trace(const nlohmann::json& trace_doc, const std::string& verdict);
  std::optional<std::string> trace_text(const std::string& id) const;
  std::shared_ptr<const LoadedTrace> load(const std::string& id);
  std::optional<nlohmann::json> index_entry(const std::string& id) const;
  nlohmann::json index() const;

  void put_verdict(const std::string& key, const nlohmann::json& verdict);
  std::optional<nlohmann::json> verdict(const std::string& key) const;

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  nlohmann::json index_;
  std::mutex cache_mu_;
  std::map<std::string, std::shared_ptr<const LoadedTrace>> cache_;
};

// Runs a check through the store: a stored verdict for the same request is
// reused, and a refuted trace is stored.
CheckOutcome stored_check(TraceStore& store, const CheckRequest& req);

// HTTP API under /api/v1.  Checks run asynchronously; slices are cached per
// (trace id, criterion hash).
class ApiServer {
 public:
  ApiServer(TraceStore& store, std::size_t slice_cache_size = 32);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port, or -1.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread.
  bool run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace webtlr::service
