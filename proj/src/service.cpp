#include "dir/service.hpp"

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dir/agent.hpp"
#include "dir/error.hpp"
#include "dir/ingestion.hpp"
#include "dir/pipeline.hpp"
#include "dir/serialize.hpp"
#include "dir/tablegen.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace fs = std::filesystem;

namespace {

// Request-level failure with an explicit HTTP status and error kind.
struct HttpError {
  int status;
  std::string kind;
  std::string message;
};

int status_for(ErrorKind kind) {
  if (kind == ErrorKind::not_found) return 404;
  if (kind == ErrorKind::provider) return 502;
  return is_user_error(kind) ? 400 : 500;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  send_json(res, status, json{{"error", {{"kind", kind}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto doc = json::parse(req.body);
    if (!doc.is_object()) throw HttpError{400, "bad_request", "request body must be a JSON object"};
    return doc;
  } catch (const json::exception& e) {
    throw HttpError{400, "bad_request", std::string("malformed JSON body: ") + e.what()};
  }
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || body.at(key).is_null()) return {};
  if (!body.at(key).is_string()) throw HttpError{400, "bad_request", std::string("'") + key + "' must be a string"};
  return body.at(key).get<std::string>();
}

Store open_store(const AppConfig& c) {
  auto parent = fs::path(c.store_path).parent_path();
  if (!parent.empty() && c.store_path != ":memory:") fs::create_directories(parent);
  return Store(c.store_path, StoreOptions{c.store_max_columns, false});
}

}  // namespace

struct Service::Impl {
  explicit Impl(AppConfig c)
      : config(std::move(c)),
        store(open_store(config)),
        gateway(llm::make_transport(config.provider), config.provider),
        sessions(config.session_dir) {}

  struct Job {
    std::string status;  // pending, running, done, failed
    std::optional<std::pair<std::string, std::string>> error;
  };

  AppConfig config;
  Store store;
  llm::Gateway gateway;
  SessionStore sessions;
  httplib::Server server;

  std::mutex session_locks_mutex;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks;

  std::mutex jobs_mutex;
  std::map<std::string, Job> jobs;
  std::vector<std::thread> workers;
  // Pipelines write the store; run them one at a time.
  std::mutex pipeline_mutex;

  std::shared_ptr<std::mutex> lock_for(const std::string& session_id) {
    std::lock_guard lock(session_locks_mutex);
    auto& m = session_locks[session_id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }

  TableEntry require_table(const std::string& id) const {
    auto entry = find_table(store, id);
    if (!entry) throw HttpError{404, "unknown_table", "unknown table '" + id + "'"};
    return *entry;
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.kind, e.message);
      } catch (const Error& e) {
        send_error(res, status_for(e.kind()), std::string(to_string(e.kind())), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void run_job(std::string table_id, std::string domain_id, std::string format, std::string data,
               IngestConfig ingest) {
    {
      std::lock_guard lock(jobs_mutex);
      jobs[table_id].status = "running";
    }
    Job result{"done", std::nullopt};
    try {
      std::lock_guard pipeline_lock(pipeline_mutex);
      std::istringstream in(data);
      auto table = load_context_table(in, format == "jsonl" ? SourceFormat::jsonl : SourceFormat::csv, ingest,
                                      table_id, domain_id);
      auto options = config.pipeline_options();
      options.text_columns = ingest.declared_text_columns;
      run_pipeline(std::move(table), options, gateway, store);
    } catch (const Error& e) {
      result = Job{"failed", std::make_pair(std::string(to_string(e.kind())), std::string(e.what()))};
    } catch (const std::exception& e) {
      result = Job{"failed", std::make_pair(std::string("internal"), std::string(e.what()))};
    }
    std::lock_guard lock(jobs_mutex);
    jobs[table_id] = result;
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/tables", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      auto table_id = string_field(body, "table_id");
      if (table_id.empty() || !ColumnName::is_normalized(table_id))
        throw HttpError{400, "bad_request", "table_id must be a non-empty snake_case name"};
      auto format = string_field(body, "format");
      if (format.empty()) format = "csv";
      if (format != "csv" && format != "jsonl") throw HttpError{400, "bad_request", "format must be csv or jsonl"};
      std::string data = string_field(body, "data");
      if (data.empty()) {
        auto path = string_field(body, "source_path");
        if (path.empty()) throw HttpError{400, "bad_request", "either data or source_path is required"};
        std::ifstream f(path, std::ios::binary);
        if (!f) throw HttpError{400, "bad_request", "cannot read source_path '" + path + "'"};
        std::stringstream ss;
        ss << f.rdbuf();
        data = ss.str();
      }
      IngestConfig ingest;
      auto pk = string_field(body, "primary_key");
      ingest.primary_key = ColumnName::normalize(pk.empty() ? config.primary_key : pk);
      ingest.declared_text_columns = config.text_columns;
      if (body.contains("text_columns") && !body.at("text_columns").is_null()) {
        std::vector<ColumnName> cols;
        for (const auto& c : body.at("text_columns")) cols.push_back(ColumnName::normalize(c.get<std::string>()));
        ingest.declared_text_columns = cols;
      }
      ingest.text_detection_threshold = config.text_detection_threshold;
      ingest.min_avg_text_length = config.min_avg_text_length;
      ingest.validate();
      auto domain = string_field(body, "domain_id");
      {
        std::lock_guard lock(jobs_mutex);
        auto it = jobs.find(table_id);
        if (it != jobs.end() && (it->second.status == "pending" || it->second.status == "running"))
          throw HttpError{409, "job_in_progress", "a pipeline for '" + table_id + "' is already running"};
        jobs[table_id] = Job{"pending", std::nullopt};
        workers.emplace_back(&Impl::run_job, this, table_id, domain.empty() ? table_id : domain, format,
                             std::move(data), ingest);
      }
      send_json(res, 202,
                json{{"table_id", table_id}, {"status", "pending"}, {"status_url", "/tables/" + table_id + "/status"}});
    }));

    server.Get(R"(/tables/([^/]+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      {
        std::lock_guard lock(jobs_mutex);
        auto it = jobs.find(id);
        if (it != jobs.end()) {
          json body{{"table_id", id}, {"status", it->second.status}};
          if (it->second.error)
            body["error"] = json{{"kind", it->second.error->first}, {"message", it->second.error->second}};
          send_json(res, 200, body);
          return;
        }
      }
      require_table(id);
      send_json(res, 200, json{{"table_id", id}, {"status", "done"}});
    }));

    server.Get("/tables", guarded([this](const httplib::Request&, httplib::Response& res) {
      json tables = json::array();
      for (const auto& e : load_registry(store)) tables.push_back(table_summary(e));
      send_json(res, 200, json{{"tables", tables}});
    }));

    server.Get(R"(/tables/([^/]+)/schema)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, json(require_table(req.matches[1]).schema));
    }));

    server.Get(R"(/tables/([^/]+)/catalog)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, json(require_table(req.matches[1]).catalog));
    }));

    server.Post("/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      auto question = text::trim(string_field(body, "question"));
      if (question.empty()) throw HttpError{400, "empty_question", "question is empty"};
      auto table_id = string_field(body, "table_id");
      TableEntry entry;
      if (table_id.empty()) {
        auto tables = load_registry(store);
        if (tables.empty()) throw HttpError{404, "unknown_table", "no tables have been generated"};
        entry = require_table(route_table(question, tables).table_id);
      } else {
        entry = require_table(table_id);
      }
      auto q = text_to_sql(question, entry.schema, entry.catalog, DialogState{entry.table_id, {}}, gateway,
                           config.text2sql_options());
      json rows = nullptr;
      if (q.executable()) rows = json(execute(q, entry.schema, store));
      send_json(res, 200, json{{"table_id", entry.table_id}, {"query", q}, {"rows", rows}});
    }));

    server.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto s = sessions.create();
      send_json(res, 201, json{{"session_id", s.session_id}});
    }));

    server.Post(R"(/sessions/([^/]+)/turns)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!sessions.exists(id)) throw HttpError{404, "unknown_session", "unknown session '" + id + "'"};
      auto body = parse_body(req);
      auto utterance = text::trim(string_field(body, "utterance"));
      if (utterance.empty()) throw HttpError{400, "empty_utterance", "utterance is empty"};
      auto lock = lock_for(id);
      std::lock_guard guard(*lock);
      auto tables = load_registry(store);
      if (tables.empty()) throw HttpError{409, "no_tables", "no tables have been generated"};
      auto session = sessions.load(id);
      AgentEngine engine{store, std::move(tables), gateway, config.agent, config.text2sql_options()};
      auto turn = step(session, utterance, engine);
      sessions.append(session, turn);
      json out = turn;
      out["transcript"] = format_turn(turn);
      send_json(res, 200, out);
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!sessions.exists(id)) throw HttpError{404, "unknown_session", "unknown session '" + id + "'"};
      auto lock = lock_for(id);
      std::lock_guard guard(*lock);
      send_json(res, 200, json(sessions.load(id)));
    }));
  }
};

Service::Service(AppConfig config) : impl_(std::make_unique<Impl>(std::move(config))) { impl_->routes(); }

Service::~Service() {
  stop();
  wait_for_jobs();
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw StoreError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw StoreError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_for_jobs() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(impl_->jobs_mutex);
    workers.swap(impl_->workers);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

}  // namespace dir
