#pragma once

#include <memory>
#include <string>

#include "dir/config.hpp"

namespace dir {

// HTTP facade over the store, the pipeline and agent sessions.
//
//   POST /tables                 {table_id, domain_id?, format?, data | source_path, primary_key?, text_columns?}
//   GET  /tables/{id}/status
//   GET  /tables
//   GET  /tables/{id}/schema
//   GET  /tables/{id}/catalog
//   POST /query                  {table_id?, question}
//   POST /sessions
//   POST /sessions/{id}/turns    {utterance}
//   GET  /sessions/{id}
//
// Errors come back as {"error": {"kind", "message"}} with 4xx for user
// errors and 5xx for internal ones.
class Service {
 public:
  explicit Service(AppConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws StoreError when
  // the address cannot be bound.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();
  // Blocks until every background pipeline job has finished.
  void wait_for_jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dir
