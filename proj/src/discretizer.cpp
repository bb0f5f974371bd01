#include "dir/discretizer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "dir/error.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace {

// Index of the bracket closing the array that opens at `open`, honoring strings.
std::size_t matching_bracket(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[') ++depth;
    else if (c == ']' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

void upsert(std::vector<KeyValueTuple>& tuples, KeyValueTuple tuple) {
  auto it = std::find_if(tuples.begin(), tuples.end(), [&](const auto& t) { return t.key == tuple.key; });
  if (it == tuples.end()) tuples.push_back(std::move(tuple));
  else it->value = std::move(tuple.value);
}

std::vector<ColumnName> missing_of(const std::vector<KeyValueTuple>& tuples,
                                   const std::vector<ColumnName>& mandatory) {
  std::vector<ColumnName> out;
  for (const auto& key : mandatory)
    if (std::none_of(tuples.begin(), tuples.end(), [&](const auto& t) { return t.key == key; }))
      out.push_back(key);
  return out;
}

}  // namespace

ParsedExtraction parse_extraction(std::string_view completion) {
  std::optional<nlohmann::json> array;
  for (auto open = completion.find('['); open != std::string_view::npos;
       open = completion.find('[', open + 1)) {
    auto close = matching_bracket(completion, open);
    if (close == std::string_view::npos) continue;
    try {
      auto doc = nlohmann::json::parse(completion.substr(open, close - open + 1));
      if (doc.is_array()) {
        array = std::move(doc);
        break;
      }
    } catch (const nlohmann::json::exception&) {
    }
  }
  if (!array) throw ExtractionParseError("completion contains no [key, value] array");

  ParsedExtraction out;
  for (std::size_t i = 0; i < array->size(); ++i) {
    const auto& entry = (*array)[i];
    auto warn = [&](const std::string& why) {
      out.warnings.push_back("entry " + std::to_string(i) + " dropped: " + why);
    };
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string()) {
      warn("not a [key, value] pair");
      continue;
    }
    std::string raw_value;
    const auto& v = entry[1];
    if (v.is_string()) raw_value = v.get<std::string>();
    else if (v.is_number()) raw_value = text::format_number(v.get<double>());
    else if (v.is_boolean()) raw_value = v.get<bool>() ? "true" : "false";
    else {
      warn("value is not a scalar");
      continue;
    }
    ColumnName key;
    try {
      key = ColumnName::normalize(entry[0].get<std::string>());
    } catch (const NameError&) {
      warn("empty key");
      continue;
    }
    bool truncated = false;
    auto value = normalize_value(raw_value, &truncated);
    if (!value) {
      warn("empty value");
      continue;
    }
    if (truncated) out.warnings.push_back("entry " + std::to_string(i) + " value truncated to " +
                                          std::to_string(kMaxValueLength) + " characters");
    upsert(out.tuples, KeyValueTuple{std::move(key), std::move(*value)});
  }
  return out;
}

RowOutcome discretize_row(std::string_view row_text, const std::vector<ColumnName>& mandatory_keys,
                          const llm::Gateway& gateway, const llm::PromptTemplate& tmpl) {
  if (text::trim(row_text).empty()) throw PreconditionError("row text is empty");
  RowOutcome outcome;
  std::vector<ColumnName> missing;
  bool parsed = false;
  try {
    ++outcome.attempts;
    auto first = parse_extraction(gateway.complete(llm::build_discretize_prompt(row_text, mandatory_keys, tmpl)));
    outcome.tuples = std::move(first.tuples);
    outcome.warnings = std::move(first.warnings);
    parsed = true;
    missing = missing_of(outcome.tuples, mandatory_keys);
    if (missing.empty()) return outcome;
  } catch (const ExtractionParseError& e) {
    outcome.warnings.push_back(std::string("first attempt: ") + e.what());
    missing = mandatory_keys;
  }

  ++outcome.attempts;
  auto reinforced = llm::build_discretize_prompt(row_text, mandatory_keys, tmpl,
                                                 missing.empty() ? mandatory_keys : missing);
  try {
    auto second = parse_extraction(gateway.complete(reinforced));
    for (auto& t : second.tuples) upsert(outcome.tuples, std::move(t));
    outcome.warnings.insert(outcome.warnings.end(), second.warnings.begin(), second.warnings.end());
  } catch (const ExtractionParseError&) {
    if (!parsed) throw;
  }
  outcome.unextracted = missing_of(outcome.tuples, mandatory_keys);
  return outcome;
}

std::string to_log_line(const FailureRecord& record) {
  return nlohmann::json{{"table_id", record.table_id}, {"pk", record.primary_key}, {"reason", record.reason}}
      .dump();
}

ExtractionSet discretize_table(const ContextTable& table, const std::vector<ColumnName>& text_cols,
                               const std::vector<ColumnName>& mandatory_keys,
                               const llm::Gateway& gateway, const llm::PromptTemplate& tmpl,
                               const DiscretizeOptions& options) {
  auto declared = table.text_columns();
  std::vector<std::size_t> indices;
  for (const auto& c : text_cols) {
    if (std::find(declared.begin(), declared.end(), c) == declared.end())
      throw PreconditionError("column '" + c.str() + "' is not a collected text column");
    indices.push_back(*table.column_index(c));
  }
  std::set<ColumnName> context_names;
  for (const auto& c : table.columns) context_names.insert(c.name);

  const std::size_t n = table.rows.size();
  std::vector<std::string> keys(n);
  std::vector<RowExtraction> results(n);
  std::vector<std::vector<std::string>> row_warnings(n);
  std::vector<std::exception_ptr> fatal(n);

  auto work = [&](std::size_t r) {
    const auto& row = table.rows[r];
    keys[r] = table.key_of(row);
    std::vector<std::string> parts;
    for (auto idx : indices)
      if (!is_null(row[idx])) parts.push_back(value_to_text(row[idx]));
    std::string joined = text::join(parts, "\n");
    auto& result = results[r];
    if (text::trim(joined).empty()) {
      result.failed = true;
      result.failure_reason = "no text to discretize";
      result.unextracted = mandatory_keys;
      return;
    }
    try {
      auto outcome = discretize_row(joined, mandatory_keys, gateway, tmpl);
      for (auto& t : outcome.tuples) {
        if (context_names.count(t.key)) {
          auto renamed = ColumnName::normalize(t.key.str() + "_inferred");
          row_warnings[r].push_back("row " + keys[r] + ": key '" + t.key.str() +
                                    "' collides with a context column, renamed to '" + renamed.str() + "'");
          t.key = renamed;
        }
        upsert(result.tuples, std::move(t));
      }
      result.unextracted = std::move(outcome.unextracted);
      for (auto& w : outcome.warnings) row_warnings[r].push_back("row " + keys[r] + ": " + w);
    } catch (const ExtractionParseError& e) {
      result.tuples.clear();
      result.failed = true;
      result.failure_reason = e.what();
      result.unextracted = mandatory_keys;
    } catch (...) {
      fatal[r] = std::current_exception();
    }
  };

  std::size_t workers = std::max<std::size_t>(1, std::min(options.parallelism, n));
  if (workers <= 1) {
    for (std::size_t r = 0; r < n; ++r) work(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < n; r = next++) work(r);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : fatal)
    if (e) std::rethrow_exception(e);

  ExtractionSet set;
  set.table_id = table.table_id;
  // Assemble in primary-key order so the result does not depend on row order.
  std::vector<std::size_t> order(n);
  for (std::size_t r = 0; r < n; ++r) order[r] = r;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
  for (auto r : order) {
    if (results[r].failed && options.on_failure)
      options.on_failure(FailureRecord{table.table_id, keys[r], results[r].failure_reason});
    set.warnings.insert(set.warnings.end(), row_warnings[r].begin(), row_warnings[r].end());
    set.per_row.emplace(keys[r], std::move(results[r]));
  }
  return set;
}

}  // namespace dir
