#include "dir/llm.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dir/error.hpp"
#include "dir/sql.hpp"
#include "dir/text_util.hpp"

namespace dir::llm {

std::size_t estimate_tokens(std::string_view text) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(text.size()) / kCharsPerToken));
}

void ProviderConfig::validate() const {
  if (max_input_tokens == 0) throw ConfigError("max_input_tokens must be > 0");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (backoff_ms < 0) throw ConfigError("backoff_ms must be >= 0");
  if (adapter != "mock" && adapter != "openai-chat" && adapter != "completion")
    throw ConfigError("unknown provider adapter '" + adapter + "' (expected mock, openai-chat or completion)");
}

std::string complete(Transport& transport, std::string_view prompt, const ProviderConfig& config) {
  config.validate();
  auto estimate = estimate_tokens(prompt);
  if (estimate > config.max_input_tokens) throw BudgetError(estimate, config.max_input_tokens);
  const int attempts = 1 + config.max_retries;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && config.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_ms << (attempt - 1)));
    try {
      return transport.send(prompt, config);
    } catch (const TransientError& e) {
      last_error = e.what();
    }
  }
  throw ProviderError("provider '" + config.provider_id + "' failed after " +
                          std::to_string(attempts) + " attempts: " + last_error,
                      attempts);
}

Gateway::Gateway(std::shared_ptr<Transport> transport, ProviderConfig config)
    : transport_(std::move(transport)), config_(std::move(config)) {
  if (!transport_) throw ConfigError("gateway needs a transport");
  config_.validate();
}

std::string Gateway::complete(std::string_view prompt) const {
  return llm::complete(*transport_, prompt, config_);
}

void PromptTemplate::validate() const {
  if (name != "discretize" && name != "text2sql")
    throw ConfigError("unknown template name '" + name + "'");
  if (exemplars.empty()) throw ConfigError("template '" + name + "' needs at least one exemplar");
  if (rendered_budget == 0) throw ConfigError("template '" + name + "' has a zero budget");
}

PromptTemplate default_discretize_template() {
  PromptTemplate t;
  t.name = "discretize";
  t.rendered_budget = 4096;
  t.system_preamble =
      "You turn product descriptions into structured columns.\n"
      "Read the text and list every fact it states as a [key, value] pair.\n"
      "Keys are short snake_case category names (for example color or product_size).\n"
      "Values are short lowercase phrases copied from the text.\n"
      "Answer with a single JSON array of [key, value] arrays and nothing else.";
  t.exemplars = {
      {"Lightweight 15 liter daypack in olive green with a padded shoulder strap and two mesh side "
       "pockets.",
       R"([["product_type", "backpack"], ["product_size", "15 liter"], ["color", "olive green"], ["handle_type", "strap"], ["number_of_pockets", "2"]])"},
      {"Automatic dive watch with a 42 mm steel case, black dial and rubber band. Water resistant "
       "to 200 m.",
       R"([["product_type", "watch"], ["movement", "automatic"], ["case_size", "42 mm"], ["dial_color", "black"], ["strap_material", "rubber"], ["water_resistance", "200 m"]])"},
  };
  t.body =
      "{{preamble}}\n\n"
      "{{exemplars}}"
      "{{grounding}}"
      "Text:\n\"\"\"\n{{text}}\n\"\"\"\n"
      "Pairs:";
  return t;
}

PromptTemplate default_text2sql_template() {
  PromptTemplate t;
  t.name = "text2sql";
  t.rendered_budget = 32000;
  t.system_preamble =
      "You translate shopper questions into one SQLite SELECT statement over a single view.\n"
      "Use only the listed columns. For inferred columns compare with = , <> or IN using only the\n"
      "enumerated values; numeric comparisons are allowed on number columns only.\n"
      "Keep every constraint from the dialog state unless the question changes or drops it.\n"
      "Answer with the SQL statement only.";
  t.exemplars = {
      {"Do you have a grey 22 liter backpack under $150?",
       "SELECT * FROM products__joined WHERE product_type = 'backpack' AND color = 'grey' AND "
       "product_size = '22 liter' AND price < 150"},
      {"Any leather strap watches that are not quartz?",
       "SELECT * FROM products__joined WHERE product_type = 'watch' AND strap_material = 'leather' "
       "AND movement <> 'quartz'"},
  };
  t.body =
      "{{preamble}}\n\n"
      "{{exemplars}}"
      "Table: {{table}}\n"
      "Columns:\n{{schema}}\n"
      "Enumerated values:\n{{enums}}\n"
      "{{state}}"
      "Question: {{question}}\n"
      "SQL:";
  return t;
}

namespace {

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string one_line(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
  return text::trim(out);
}

void check_budget(const std::string& prompt, const PromptTemplate& tmpl, const std::string& advice) {
  auto estimate = estimate_tokens(prompt);
  if (estimate > tmpl.rendered_budget) throw BudgetError(estimate, tmpl.rendered_budget, advice);
}

}  // namespace

PromptTemplate parse_template(std::string_view asset) {
  PromptTemplate t;
  enum class Section { none, preamble, exemplar_input, exemplar_output, body } section = Section::none;
  std::string buffer;
  Exemplar current;
  bool have_exemplar = false;

  auto flush = [&] {
    auto content = strip_trailing_newlines(buffer);
    switch (section) {
      case Section::preamble: t.system_preamble = content; break;
      case Section::exemplar_input: current.input = content; break;
      case Section::exemplar_output: current.output = content; break;
      case Section::body: t.body = content; break;
      case Section::none: break;
    }
    buffer.clear();
  };
  auto close_exemplar = [&] {
    if (have_exemplar) t.exemplars.push_back(current);
    current = {};
    have_exemplar = false;
  };

  for (const auto& line : text::split(asset, '\n')) {
    if (section == Section::none && line.rfind("# name:", 0) == 0) {
      t.name = text::trim(line.substr(7));
    } else if (section == Section::none && line.rfind("# budget:", 0) == 0) {
      t.rendered_budget = static_cast<std::size_t>(std::stoul(text::trim(line.substr(9))));
    } else if (line == "## preamble") {
      flush();
      close_exemplar();
      section = Section::preamble;
    } else if (line == "## exemplar") {
      flush();
      close_exemplar();
      have_exemplar = true;
      section = Section::none;
    } else if (line == "### input") {
      flush();
      section = Section::exemplar_input;
    } else if (line == "### output") {
      flush();
      section = Section::exemplar_output;
    } else if (line == "## body") {
      flush();
      close_exemplar();
      section = Section::body;
    } else if (section != Section::none) {
      buffer += line;
      buffer += '\n';
    }
  }
  flush();
  close_exemplar();
  t.validate();
  return t;
}

std::string serialize_template(const PromptTemplate& tmpl) {
  std::string out = "# name: " + tmpl.name + "\n# budget: " + std::to_string(tmpl.rendered_budget) +
                    "\n## preamble\n" + tmpl.system_preamble + "\n";
  for (const auto& ex : tmpl.exemplars)
    out += "## exemplar\n### input\n" + ex.input + "\n### output\n" + ex.output + "\n";
  out += "## body\n" + tmpl.body + "\n";
  return out;
}

PromptTemplate load_template_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read template '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_template(ss.str());
}

std::string fill_placeholders(std::string_view body,
                              const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < body.size()) {
    auto open = body.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(body.substr(i));
      break;
    }
    auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(body.substr(i));
      break;
    }
    out.append(body.substr(i, open - i));
    auto name = body.substr(open + 2, close - open - 2);
    auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
    if (it == values.end()) out.append(body.substr(open, close + 2 - open));
    else out.append(it->second);
    i = close + 2;
  }
  return out;
}

std::string build_discretize_prompt(std::string_view text_in, const std::vector<ColumnName>& mandatory_keys,
                                    const PromptTemplate& tmpl,
                                    const std::vector<ColumnName>& missing_keys) {
  if (tmpl.name != "discretize") throw PreconditionError("template is not a discretize template");
  tmpl.validate();
  std::string exemplars;
  for (const auto& ex : tmpl.exemplars)
    exemplars += "Text:\n\"\"\"\n" + ex.input + "\n\"\"\"\nPairs: " + ex.output + "\n\n";
  std::string grounding;
  auto names = [](const std::vector<ColumnName>& keys) {
    std::vector<std::string> out;
    for (const auto& k : keys) out.push_back(k.str());
    return text::join(out, ", ");
  };
  if (!mandatory_keys.empty())
    grounding += "Always extract these keys, inferring them from context when needed: " +
                 names(mandatory_keys) + ".\n";
  if (!missing_keys.empty())
    grounding += "Your previous answer left out required keys: " + names(missing_keys) +
                 ". Include a pair for each of them.\n";
  if (!grounding.empty()) grounding += "\n";
  auto prompt = fill_placeholders(tmpl.body, {{"preamble", tmpl.system_preamble},
                                              {"exemplars", exemplars},
                                              {"grounding", grounding},
                                              {"text", std::string(text_in)}});
  check_budget(prompt, tmpl, "shorten the collected text or the exemplars");
  return prompt;
}

std::string build_text2sql_prompt(std::string_view question, const JoinedSchema& schema,
                                  const EnumerationCatalog& catalog, const DialogState& state,
                                  const PromptTemplate& tmpl) {
  if (tmpl.name != "text2sql") throw PreconditionError("template is not a text2sql template");
  tmpl.validate();
  for (const auto& [column, constraint] : state.constraints) {
    (void)constraint;
    if (!schema.find(column.str()))
      throw PreconditionError("dialog state column '" + column.str() + "' is not in the schema");
  }

  std::string exemplars;
  for (const auto& ex : tmpl.exemplars)
    exemplars += "Question: " + one_line(ex.input) + "\nSQL: " + one_line(ex.output) + "\n\n";

  std::string schema_text;
  for (const auto& c : schema.columns) {
    schema_text += "- " + c.name.str() + " (" + std::string(to_string(c.kind));
    if (c.name == schema.primary_key) schema_text += ", primary key";
    else if (c.origin == ColumnOrigin::inference) schema_text += ", inferred";
    else if (c.free_text) schema_text += ", free text";
    schema_text += ")\n";
  }
  schema_text = strip_trailing_newlines(schema_text);

  std::string enums;
  for (const auto& [column, values] : catalog.entries) {
    if (!schema.find(column.str())) continue;
    enums += "- " + column.str() + ": " + nlohmann::json(values).dump() + "\n";
  }
  if (enums.empty()) enums = "(none)\n";
  enums = strip_trailing_newlines(enums);

  std::string state_text;
  if (!state.constraints.empty()) {
    state_text = "Dialog state:\n";
    for (const auto& [column, constraint] : state.constraints)
      state_text += "- " + sql::render(sql::Atom{column.str(), constraint.op, constraint.operands}) + "\n";
    state_text += "\n";
  }

  auto prompt = fill_placeholders(tmpl.body, {{"preamble", tmpl.system_preamble},
                                              {"exemplars", exemplars},
                                              {"table", schema.view_name},
                                              {"schema", schema_text},
                                              {"enums", enums},
                                              {"state", state_text},
                                              {"question", one_line(question)}});
  check_budget(prompt, tmpl,
               "enumerations do not fit; lower cap_policy.max_columns or max_key_words");
  return prompt;
}

std::vector<LexiconEntry> load_lexicon(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("lexicon is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("lexicon must be a JSON array");
  std::vector<LexiconEntry> out;
  for (const auto& e : doc) {
    LexiconEntry entry;
    entry.phrase = e.at("phrase").get<std::string>();
    entry.key = ColumnName::normalize(e.at("key").get<std::string>());
    entry.value = e.at("value").get<std::string>();
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<LexiconEntry> load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read lexicon '" + path + "'");
  return load_lexicon(in);
}

void save_lexicon(std::ostream& out, const std::vector<LexiconEntry>& lexicon) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : lexicon)
    doc.push_back({{"phrase", e.phrase}, {"key", e.key.str()}, {"value", e.value}});
  out << doc.dump(1) << "\n";
}

std::string api_key_env_var(std::string_view provider_id) {
  std::string out = "DIR_";
  for (char c : provider_id)
    out.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  return out + "_API_KEY";
}

std::shared_ptr<Transport> make_transport(const ProviderConfig& config) {
  if (config.adapter == "mock") {
    std::vector<LexiconEntry> lexicon;
    if (!config.lexicon_path.empty()) lexicon = load_lexicon_file(config.lexicon_path);
    return std::make_shared<MockTransport>(std::move(lexicon));
  }
  if (config.adapter == "openai-chat" || config.adapter == "completion")
    return std::make_shared<HttpTransport>();
  throw ConfigError("unknown provider adapter '" + config.adapter + "'");
}

}  // namespace dir::llm
