#include "dir/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dir/error.hpp"

namespace dir {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || p == ":memory:" || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

void AppConfig::validate() const {
  provider.validate();
  cap_policy.validate();
  agent.validate();
  if (store_path.empty()) throw ConfigError("store_path is empty");
  if (discretize_budget == 0 || text2sql_budget == 0) throw ConfigError("budgets must be positive");
  if (store_max_columns < 2) throw ConfigError("store_max_columns must be at least 2");
  if (parallelism == 0) throw ConfigError("discretize.parallelism must be at least 1");
  if (port < 0 || port > 65535) throw ConfigError("service.port out of range");
  if (cap_policy.mandatory_keys.size() > cap_policy.max_columns)
    throw ConfigError("more mandatory keys than cap_policy.max_columns allows");
}

llm::PromptTemplate AppConfig::discretize_template() const {
  auto t = discretize_template_path.empty() ? llm::default_discretize_template()
                                            : llm::load_template_file(discretize_template_path);
  t.rendered_budget = discretize_budget;
  t.validate();
  return t;
}

llm::PromptTemplate AppConfig::text2sql_template() const {
  auto t = text2sql_template_path.empty() ? llm::default_text2sql_template()
                                          : llm::load_template_file(text2sql_template_path);
  t.rendered_budget = text2sql_budget;
  t.validate();
  return t;
}

PipelineOptions AppConfig::pipeline_options() const {
  PipelineOptions o;
  o.text_columns = text_columns;
  o.text_detection_threshold = text_detection_threshold;
  o.min_avg_text_length = min_avg_text_length;
  o.cap_policy = cap_policy;
  o.discretize_template = discretize_template();
  o.discretize.parallelism = parallelism;
  return o;
}

Text2SqlOptions AppConfig::text2sql_options() const { return Text2SqlOptions{text2sql_template()}; }

AppConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  AppConfig c;
  try {
    auto doc = json::parse(json_text);
    check_keys(doc,
               {"store_path", "artifact_dir", "session_dir", "provider", "budgets", "cap_policy", "mandatory_keys",
                "store_max_columns", "templates", "agent", "ingest", "discretize", "seed", "corpus", "service"},
               "config");
    read(doc, "store_path", c.store_path);
    read(doc, "artifact_dir", c.artifact_dir);
    read(doc, "session_dir", c.session_dir);
    read(doc, "store_max_columns", c.store_max_columns);
    read(doc, "seed", c.seed);
    if (doc.contains("provider")) {
      const auto& p = doc.at("provider");
      check_keys(p,
                 {"provider_id", "adapter", "endpoint", "model_name", "max_input_tokens", "temperature",
                  "max_retries", "backoff_ms", "timeout_seconds", "lexicon_path"},
                 "provider");
      read(p, "provider_id", c.provider.provider_id);
      read(p, "adapter", c.provider.adapter);
      read(p, "endpoint", c.provider.endpoint);
      read(p, "model_name", c.provider.model_name);
      read(p, "max_input_tokens", c.provider.max_input_tokens);
      read(p, "temperature", c.provider.temperature);
      read(p, "max_retries", c.provider.max_retries);
      read(p, "backoff_ms", c.provider.backoff_ms);
      read(p, "timeout_seconds", c.provider.timeout_seconds);
      read(p, "lexicon_path", c.provider.lexicon_path);
    }
    if (doc.contains("budgets")) {
      const auto& b = doc.at("budgets");
      check_keys(b, {"discretize_prompt_tokens", "text2sql_prompt_tokens"}, "budgets");
      read(b, "discretize_prompt_tokens", c.discretize_budget);
      read(b, "text2sql_prompt_tokens", c.text2sql_budget);
    }
    if (doc.contains("cap_policy")) {
      const auto& p = doc.at("cap_policy");
      check_keys(p, {"max_columns", "max_key_words", "min_row_support"}, "cap_policy");
      read(p, "max_columns", c.cap_policy.max_columns);
      read(p, "max_key_words", c.cap_policy.max_key_words);
      read(p, "min_row_support", c.cap_policy.min_row_support);
    }
    if (doc.contains("mandatory_keys"))
      for (const auto& k : doc.at("mandatory_keys")) c.cap_policy.mandatory_keys.push_back(ColumnName::normalize(k.get<std::string>()));
    if (doc.contains("templates")) {
      const auto& t = doc.at("templates");
      check_keys(t, {"discretize", "text2sql"}, "templates");
      read(t, "discretize", c.discretize_template_path);
      read(t, "text2sql", c.text2sql_template_path);
    }
    if (doc.contains("agent")) {
      const auto& a = doc.at("agent");
      check_keys(a, {"max_iterations", "switch_margin", "sample_rows"}, "agent");
      read(a, "max_iterations", c.agent.max_iterations);
      read(a, "switch_margin", c.agent.switch_margin);
      read(a, "sample_rows", c.agent.sample_rows);
    }
    if (doc.contains("ingest")) {
      const auto& i = doc.at("ingest");
      check_keys(i, {"primary_key", "text_columns", "text_detection_threshold", "min_avg_text_length"}, "ingest");
      read(i, "primary_key", c.primary_key);
      if (i.contains("text_columns") && !i.at("text_columns").is_null()) {
        std::vector<ColumnName> cols;
        for (const auto& k : i.at("text_columns")) cols.push_back(ColumnName::normalize(k.get<std::string>()));
        c.text_columns = cols;
      }
      read(i, "text_detection_threshold", c.text_detection_threshold);
      read(i, "min_avg_text_length", c.min_avg_text_length);
    }
    if (doc.contains("discretize")) {
      const auto& d = doc.at("discretize");
      check_keys(d, {"parallelism"}, "discretize");
      read(d, "parallelism", c.parallelism);
    }
    if (doc.contains("corpus")) {
      const auto& d = doc.at("corpus");
      check_keys(d, {"rows_per_domain"}, "corpus");
      read(d, "rows_per_domain", c.rows_per_domain);
    }
    if (doc.contains("service")) {
      const auto& s = doc.at("service");
      check_keys(s, {"host", "port"}, "service");
      read(s, "host", c.host);
      read(s, "port", c.port);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.store_path = resolve(base_dir, c.store_path);
  c.artifact_dir = resolve(base_dir, c.artifact_dir);
  c.session_dir = resolve(base_dir, c.session_dir);
  c.provider.lexicon_path = resolve(base_dir, c.provider.lexicon_path);
  c.discretize_template_path = resolve(base_dir, c.discretize_template_path);
  c.text2sql_template_path = resolve(base_dir, c.text2sql_template_path);
  c.validate();
  return c;
}

AppConfig load_config(const std::optional<std::string>& path) {
  std::string file;
  if (path) {
    file = *path;
    if (!fs::exists(file)) throw ConfigError("config file '" + file + "' not found");
  } else if (fs::exists("dir.json")) {
    file = "dir.json";
  } else {
    AppConfig c;
    c.validate();
    return c;
  }
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file '" + file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = fs::absolute(file).parent_path().string();
  return parse_config(ss.str(), base);
}

}  // namespace dir
