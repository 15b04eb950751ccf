#include <chrono>
#include <ctime>
#include <fstream>

#include "webtlr/service.hpp"

namespace webtlr::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ServiceError("store_error", "cannot write " + tmp.string());
    out << text;
    if (!out) throw ServiceError("store_error", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool valid_id(const std::string& id) {
  if (id.size() != 16) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

int exit_of(const std::string& verdict) {
  if (verdict == "refuted") return exit_refuted;
  if (verdict == "budget_exhausted") return exit_budget;
  return exit_fulfilled;
}

}  // namespace

TraceStore::TraceStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "traces", ec);
  fs::create_directories(dir_ / "verdicts", ec);
  if (ec) throw ServiceError("store_error", "cannot create store at " + dir_.string() + ": " + ec.message());
  fs::path probe = dir_ / ".probe";
  {
    std::ofstream out(probe);
    if (!out) throw ServiceError("store_error", "store path is not writable: " + dir_.string());
  }
  fs::remove(probe, ec);
  index_ = json::object();
  if (fs::exists(dir_ / "index.json")) {
    try {
      index_ = json::parse(read_file(dir_ / "index.json"));
    } catch (const json::exception& e) {
      throw ServiceError("store_error", std::string("corrupt store index: ") + e.what());
    }
  }
}

std::string TraceStore::put_trace(const json& trace_doc, const std::string& verdict) {
  std::string text = serialize(trace_doc);
  std::string id = content_id(text);
  std::unique_lock lock(mu_);
  fs::path path = dir_ / "traces" / (id + ".json");
  if (index_.contains(id) && fs::exists(path)) return id;
  write_atomic(path, text);
  const json& md = trace_doc.at("metadata");
  index_[id] = {{"theory_hash", trace_doc.at("theory_hash")},
                {"property", md.value("property_text", md.value("property", ""))},
                {"verdict", verdict},
                {"created_at", utc_now()}};
  write_atomic(dir_ / "index.json", serialize(index_));
  return id;
}

std::optional<std::string> TraceStore::trace_text(const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  std::shared_lock lock(mu_);
  if (!index_.contains(id)) return std::nullopt;
  return read_file(dir_ / "traces" / (id + ".json"));
}

std::shared_ptr<const LoadedTrace> TraceStore::load(const std::string& id) {
  {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
  }
  auto text = trace_text(id);
  if (!text) throw ServiceError("not_found", "unknown trace id " + id);
  auto t = load_trace_text(*text);
  if (t->id != id) throw ServiceError("store_error", "stored trace " + id + " does not match its content id");
  std::lock_guard lock(cache_mu_);
  return cache_.emplace(id, t).first->second;
}

std::optional<json> TraceStore::index_entry(const std::string& id) const {
  std::shared_lock lock(mu_);
  if (!index_.contains(id)) return std::nullopt;
  return index_.at(id);
}

json TraceStore::index() const {
  std::shared_lock lock(mu_);
  return index_;
}

void TraceStore::put_verdict(const std::string& key, const json& verdict) {
  std::unique_lock lock(mu_);
  fs::path path = dir_ / "verdicts" / (key + ".json");
  if (fs::exists(path)) return;
  write_atomic(path, serialize(verdict));
}

std::optional<json> TraceStore::verdict(const std::string& key) const {
  if (!valid_id(key)) return std::nullopt;
  std::shared_lock lock(mu_);
  fs::path path = dir_ / "verdicts" / (key + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return json::parse(read_file(path));
}

CheckOutcome stored_check(TraceStore& store, const CheckRequest& req) {
  std::string key = request_key(req);
  if (auto v = store.verdict(key)) {
    CheckOutcome out;
    out.exit_status = exit_of(v->at("verdict").get<std::string>());
    if (v->at("trace_id").is_string()) {
      auto text = store.trace_text(v->at("trace_id").get<std::string>());
      if (text) out.trace = json::parse(*text);
    }
    if (out.exit_status != exit_refuted || out.trace) {
      out.verdict = std::move(*v);
      return out;
    }
  }
  CheckOutcome out = run_check(req);
  if (out.trace) store.put_trace(*out.trace, out.verdict.at("verdict").get<std::string>());
  store.put_verdict(key, out.verdict);
  return out;
}

}  // namespace webtlr::service
