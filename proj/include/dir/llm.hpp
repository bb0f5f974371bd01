#pragma once

#include <atomic>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dir/model.hpp"

namespace dir::llm {

inline constexpr double kCharsPerToken = 4.0;

// ceil(chars / 4). Monotone in the text length.
std::size_t estimate_tokens(std::string_view text);

struct ProviderConfig {
  std::string provider_id = "mock";
  // "mock", "openai-chat" (messages body) or "completion" (prompt body).
  std::string adapter = "mock";
  std::string endpoint;
  std::string model_name;
  std::size_t max_input_tokens = 32000;
  double temperature = 0.0;
  int max_retries = 2;
  int backoff_ms = 100;
  int timeout_seconds = 60;
  // Lexicon file for the mock adapter.
  std::string lexicon_path;

  void validate() const;
};

// Thrown by transports for failures worth retrying (connection refused, 5xx, 429).
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string send(std::string_view prompt, const ProviderConfig& config) = 0;
};

// Budget check, then send with retries and exponential backoff.
// Throws BudgetError before any I/O, ProviderError once retries are exhausted.
std::string complete(Transport& transport, std::string_view prompt, const ProviderConfig& config);

// Shareable handle bundling a transport with its configuration.
class Gateway {
 public:
  Gateway(std::shared_ptr<Transport> transport, ProviderConfig config);

  std::string complete(std::string_view prompt) const;
  const ProviderConfig& config() const noexcept { return config_; }
  Transport& transport() const noexcept { return *transport_; }

 private:
  std::shared_ptr<Transport> transport_;
  ProviderConfig config_;
};

struct Exemplar {
  std::string input;
  std::string output;

  friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

struct PromptTemplate {
  std::string name;  // "discretize" or "text2sql"
  std::string system_preamble;
  std::vector<Exemplar> exemplars;
  std::size_t rendered_budget = 4096;
  // Layout with {{placeholder}} slots.
  std::string body;

  void validate() const;
  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

PromptTemplate default_discretize_template();
PromptTemplate default_text2sql_template();

// Template asset format: "# name:" / "# budget:" headers, then "## preamble",
// "## exemplar" (with "### input" / "### output"), and "## body" sections.
PromptTemplate parse_template(std::string_view asset);
std::string serialize_template(const PromptTemplate& tmpl);
PromptTemplate load_template_file(const std::string& path);

// Replaces every {{name}} slot; unknown slots are left as-is.
std::string fill_placeholders(std::string_view body,
                              const std::vector<std::pair<std::string, std::string>>& values);

// `missing_keys` non-empty adds the reinforcement clause used on retry.
std::string build_discretize_prompt(std::string_view text, const std::vector<ColumnName>& mandatory_keys,
                                    const PromptTemplate& tmpl,
                                    const std::vector<ColumnName>& missing_keys = {});

std::string build_text2sql_prompt(std::string_view question, const JoinedSchema& schema,
                                  const EnumerationCatalog& catalog, const DialogState& state,
                                  const PromptTemplate& tmpl);

// Marker lines shared by the prompt builders and the mock provider.
inline constexpr std::string_view kDiscretizeAnswerCue = "Pairs:";
inline constexpr std::string_view kText2SqlAnswerCue = "SQL:";
inline constexpr std::string_view kTextOpen = "Text:\n\"\"\"\n";
inline constexpr std::string_view kTextClose = "\n\"\"\"";

struct LexiconEntry {
  std::string phrase;
  ColumnName key;
  std::string value;
};

std::vector<LexiconEntry> load_lexicon(std::istream& in);
std::vector<LexiconEntry> load_lexicon_file(const std::string& path);
void save_lexicon(std::ostream& out, const std::vector<LexiconEntry>& lexicon);

// Deterministic provider for hermetic runs. Discretize prompts are answered by
// matching lexicon phrases (case-insensitive, on word boundaries) in the
// target text; text-to-SQL prompts by a rule-based compiler over the question,
// the enumerations and the dialog state found in the prompt.
class MockTransport : public Transport {
 public:
  explicit MockTransport(std::vector<LexiconEntry> lexicon = {});

  std::string send(std::string_view prompt, const ProviderConfig& config) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::vector<LexiconEntry> lexicon_;
  std::atomic<std::size_t> calls_{0};
};

std::string mock_discretize_answer(std::string_view text, const std::vector<LexiconEntry>& lexicon);
std::string mock_text2sql_answer(std::string_view prompt);

// HTTP transport for OpenAI-style chat endpoints and plain completion endpoints.
// The API key comes from DIR_<PROVIDER_ID>_API_KEY.
class HttpTransport : public Transport {
 public:
  std::string send(std::string_view prompt, const ProviderConfig& config) override;
};

std::string api_key_env_var(std::string_view provider_id);

// Builds the transport named by config.adapter.
std::shared_ptr<Transport> make_transport(const ProviderConfig& config);

}  // namespace dir::llm
