#include <list>
#include <thread>

#include "httplib.h"
#include "webtlr/service.hpp"

namespace webtlr::service {

using nlohmann::json;

namespace {

struct Job {
  std::string status = "running";  // running, done, failed
  json verdict;
  json error;
};

json job_document(const std::string& id, const Job& job) {
  json j{{"format", "webtlr-check-job/1"}, {"job_id", id}, {"status", job.status}, {"result", nullptr}};
  if (job.status == "done") j["result"] = job.verdict;
  if (job.status == "failed") j["error"] = job.error.at("error");
  return j;
}

void send(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, const ServiceError& e) { send(res, e.http_status(), serialize(error_document(e))); }

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw ServiceError("bad_request", "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ServiceError("bad_request", std::string("malformed request body: ") + e.what());
  }
}

// First present key among the spellings, as a string.
std::string field(const json& body, std::initializer_list<const char*> names, bool required = true) {
  for (const char* n : names) {
    if (!body.contains(n)) continue;
    const json& v = body.at(n);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned()) return std::to_string(v.get<std::size_t>());
    throw ServiceError("bad_request", std::string("field ") + n + " has the wrong type");
  }
  if (required) throw ServiceError("bad_request", std::string("missing field ") + *names.begin());
  return {};
}

std::string criterion_hash(const SlicingCriterion& c) {
  std::string text = std::to_string(c.state_index);
  for (const auto& p : c.positions) text += ";" + p.machine_str();
  return content_id(text);
}

}  // namespace

struct ApiServer::Impl {
  TraceStore& store;
  std::size_t cache_size;
  httplib::Server http;
  std::thread listener;

  std::mutex jobs_mu;
  std::map<std::string, Job> jobs;
  std::vector<std::thread> workers;

  // Sliced traces by (trace id, criterion hash), most recent first.  Entries
  // are shared so eviction leaves in-flight responses intact.
  std::mutex cache_mu;
  std::list<std::pair<std::string, std::shared_ptr<const SlicedTrace>>> slices;

  Impl(TraceStore& s, std::size_t n) : store(s), cache_size(n) { routes(); }

  std::shared_ptr<const SlicedTrace> cached_slice(const LoadedTrace& t, const SlicingCriterion& c) {
    std::string key = t.id + "/" + criterion_hash(c);
    {
      std::lock_guard lock(cache_mu);
      for (auto it = slices.begin(); it != slices.end(); ++it) {
        if (it->first == key) {
          slices.splice(slices.begin(), slices, it);
          return it->second;
        }
      }
    }
    auto sliced = std::make_shared<const SlicedTrace>(slice_trace(t.model->theory, t.trace, c));
    std::lock_guard lock(cache_mu);
    slices.emplace_front(key, sliced);
    while (slices.size() > cache_size) slices.pop_back();
    return sliced;
  }

  void submit(const std::string& id, CheckRequest req) {
    std::lock_guard lock(jobs_mu);
    if (jobs.count(id) && jobs[id].status != "failed") return;
    jobs[id] = Job{};
    workers.emplace_back([this, id, req = std::move(req)] {
      Job done;
      try {
        done.verdict = stored_check(store, req).verdict;
        done.status = "done";
      } catch (const ServiceError& e) {
        done.status = "failed";
        done.error = error_document(e);
      } catch (const std::exception& e) {
        done.status = "failed";
        done.error = error_document(ServiceError("internal_error", e.what()));
      }
      std::lock_guard lock(jobs_mu);
      jobs[id] = std::move(done);
    });
  }

  std::optional<Job> job(const std::string& id) {
    {
      std::lock_guard lock(jobs_mu);
      auto it = jobs.find(id);
      if (it != jobs.end()) return it->second;
    }
    if (auto v = store.verdict(id)) return Job{"done", *v, {}};
    return std::nullopt;
  }

  template <class F>
  static auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const ServiceError& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, ServiceError("internal_error", e.what()));
      }
    };
  }

  void routes() {
    http.Get("/api/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
               send(res, 200, serialize({{"status", "ok"}}));
             }));

    http.Post("/api/v1/checks", guarded([this](const httplib::Request& req, httplib::Response& res) {
                json body = parse_body(req);
                CheckRequest cr;
                cr.spec = field(body, {"spec"});
                cr.property = field(body, {"property"});
                if (body.contains("budget")) {
                  const json& b = body.at("budget");
                  cr.max_states = b.value("states", cr.max_states);
                  cr.max_depth = b.value("depth", cr.max_depth);
                }
                // Syntax errors are reported synchronously.
                load_property(load_spec_text(cr.spec, "spec"), cr.property);
                std::string id = request_key(cr);
                if (!job(id) || job(id)->status == "failed") submit(id, cr);
                auto j = job(id);
                send(res, j->status == "running" ? 202 : 200, serialize(job_document(id, *j)));
              }));

    http.Get(R"(/api/v1/checks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               std::string id = req.matches[1];
               auto j = job(id);
               if (!j) throw ServiceError("not_found", "unknown check job " + id);
               send(res, 200, serialize(job_document(id, *j)));
             }));

    http.Get("/api/v1/traces", guarded([this](const httplib::Request&, httplib::Response& res) {
               send(res, 200, serialize(store.index()));
             }));

    http.Get(R"(/api/v1/traces/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               std::string id = req.matches[1];
               auto t = store.load(id);
               json j = trace_summary(*t);
               j["created_at"] = store.index_entry(id)->value("created_at", "");
               send(res, 200, serialize(j));
             }));

    http.Get(R"(/api/v1/traces/([^/]+)/document)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               std::string id = req.matches[1];
               auto text = store.trace_text(id);
               if (!text) throw ServiceError("not_found", "unknown trace id " + id);
               send(res, 200, *text);
             }));

    http.Get(R"(/api/v1/traces/([^/]+)/states/([^/]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto t = store.load(req.matches[1]);
               send(res, 200, serialize(state_document(*t, select_state(*t, req.matches[2]))));
             }));

    http.Get(R"(/api/v1/traces/([^/]+)/graph)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto t = store.load(req.matches[1]);
               send(res, 200, serialize(web::graph_json(*t->model)));
             }));

    http.Post("/api/v1/graph", guarded([](const httplib::Request& req, httplib::Response& res) {
                json body = parse_body(req);
                send(res, 200, serialize(web::graph_json(load_spec_text(field(body, {"spec"}), "spec"))));
              }));

    http.Post("/api/v1/slices", guarded([this](const httplib::Request& req, httplib::Response& res) {
                json body = parse_body(req);
                auto t = store.load(field(body, {"trace_id", "traceId"}));
                std::string pattern = field(body, {"pattern"});
                std::size_t index = select_state(*t, field(body, {"state_index", "stateIndex"}));
                auto sliced = cached_slice(*t, slice_criterion(*t, index, pattern));
                send(res, 200, serialize(slice_document(*t, pattern, *sliced)));
              }));

    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        send_error(res, ServiceError("not_found", "no such endpoint " + req.method + " " + req.path));
      }
    });
  }

  void join_workers() {
    std::vector<std::thread> ws;
    {
      std::lock_guard lock(jobs_mu);
      ws.swap(workers);
    }
    for (auto& w : ws) w.join();
  }
};

ApiServer::ApiServer(TraceStore& store, std::size_t slice_cache_size)
    : impl_(std::make_unique<Impl>(store, slice_cache_size)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) return -1;
  impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

bool ApiServer::run(const std::string& host, int port) { return impl_->http.listen(host, port); }

void ApiServer::stop() {
  impl_->http.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  impl_->join_workers();
}

}  // namespace webtlr::service
