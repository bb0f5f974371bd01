#include "service_harness.hpp"

#include <chrono>
#include <sstream>
#include <stdexcept>

#include "dir/ingestion.hpp"

namespace dir::testkit {

RunningService::RunningService(AppConfig config) : service_(std::move(config)) {
  port_ = service_.bind("127.0.0.1", 0);
  thread_ = std::thread([this] { service_.listen(); });
  auto c = client();
  for (int i = 0; i < 500; ++i) {
    if (auto res = c.Get("/tables")) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  service_.stop();
  thread_.join();
  throw std::runtime_error("service did not come up");
}

RunningService::~RunningService() {
  service_.stop();
  if (thread_.joinable()) thread_.join();
  service_.wait_for_jobs();
}

httplib::Client RunningService::client() const {
  httplib::Client c("127.0.0.1", port_);
  c.set_read_timeout(120, 0);
  return c;
}

bool upload_corpus(httplib::Client& client, const Corpus& corpus, std::string* detail) {
  for (const auto& t : corpus.tables) {
    std::ostringstream csv;
    write_context_csv(csv, t);
    nlohmann::json body = {{"table_id", t.table_id}, {"format", "csv"}, {"data", csv.str()}};
    auto res = client.Post("/tables", body.dump(), "application/json");
    if (!res || res->status != 202) {
      if (detail) *detail = res ? res->body : "no response";
      return false;
    }
    auto url = nlohmann::json::parse(res->body).at("status_url").get<std::string>();
    for (;;) {
      auto st = client.Get(url.c_str());
      if (!st) {
        if (detail) *detail = "status request failed";
        return false;
      }
      auto doc = nlohmann::json::parse(st->body);
      auto status = doc.at("status").get<std::string>();
      if (status == "done") break;
      if (status == "failed") {
        if (detail) *detail = st->body;
        return false;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  return true;
}

AppConfig service_config(const std::string& dir, const std::string& lexicon_path) {
  AppConfig c;
  c.store_path = dir + "/store.sqlite";
  c.session_dir = dir + "/sessions";
  c.artifact_dir = dir + "/artifacts";
  c.provider.lexicon_path = lexicon_path;
  c.cap_policy.mandatory_keys = {ColumnName::normalize("product_type")};
  c.text_columns = std::vector<ColumnName>{ColumnName::normalize("description")};
  c.validate();
  return c;
}

}  // namespace dir::testkit
