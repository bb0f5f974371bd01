#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/agent.hpp"
#include "dir/enumerator.hpp"
#include "dir/llm.hpp"
#include "dir/pipeline.hpp"
#include "dir/text2sql.hpp"

namespace dir {

// Settings shared by the CLI and the service. Read from one JSON file;
// relative paths resolve against the file's directory.
struct AppConfig {
  std::string store_path = "dir.sqlite";
  std::string artifact_dir = "artifacts";
  std::string session_dir = "sessions";
  llm::ProviderConfig provider;
  // Rendered-prompt budgets for the two templates.
  std::size_t discretize_budget = 4096;
  std::size_t text2sql_budget = 32000;
  CapPolicy cap_policy;
  std::size_t store_max_columns = 2048;
  // Optional template asset files; built-in templates otherwise.
  std::string discretize_template_path;
  std::string text2sql_template_path;
  AgentOptions agent;
  std::string primary_key = "product_id";
  std::optional<std::vector<ColumnName>> text_columns;
  double text_detection_threshold = 0.5;
  std::size_t min_avg_text_length = 40;
  std::size_t parallelism = 1;
  std::uint64_t seed = 7;
  std::size_t rows_per_domain = 400;
  std::string host = "127.0.0.1";
  int port = 8080;

  // Throws ConfigError.
  void validate() const;
  llm::PromptTemplate discretize_template() const;
  llm::PromptTemplate text2sql_template() const;
  PipelineOptions pipeline_options() const;
  Text2SqlOptions text2sql_options() const;
};

AppConfig parse_config(std::string_view json_text, const std::string& base_dir);
// With no path, ./dir.json is used when present, otherwise the defaults.
// An explicit path that does not exist is a ConfigError.
AppConfig load_config(const std::optional<std::string>& path);

}  // namespace dir
