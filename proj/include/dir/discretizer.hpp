#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/llm.hpp"
#include "dir/model.hpp"

namespace dir {

struct ParsedExtraction {
  std::vector<KeyValueTuple> tuples;
  std::vector<std::string> warnings;
};

// Reads the first JSON array of [key, value] pairs in `completion`. Bad
// entries are dropped one by one with a warning; duplicate keys keep the last
// value. Throws ExtractionParseError when no array is present at all.
ParsedExtraction parse_extraction(std::string_view completion);

struct RowOutcome {
  std::vector<KeyValueTuple> tuples;
  std::vector<ColumnName> unextracted;
  std::vector<std::string> warnings;
  int attempts = 0;
};

// Prompt, complete, parse; retries once with a reinforcement clause when a
// mandatory key is missing or the completion has no array.
RowOutcome discretize_row(std::string_view row_text, const std::vector<ColumnName>& mandatory_keys,
                          const llm::Gateway& gateway, const llm::PromptTemplate& tmpl);

struct FailureRecord {
  std::string table_id;
  std::string primary_key;
  std::string reason;
};

std::string to_log_line(const FailureRecord& record);

struct DiscretizeOptions {
  std::size_t parallelism = 1;
  std::function<void(const FailureRecord&)> on_failure;
};

// One extraction per context row, keyed by primary key. Row failures are
// recorded in the set and never abort the table; provider errors propagate.
ExtractionSet discretize_table(const ContextTable& table, const std::vector<ColumnName>& text_cols,
                               const std::vector<ColumnName>& mandatory_keys,
                               const llm::Gateway& gateway, const llm::PromptTemplate& tmpl,
                               const DiscretizeOptions& options = {});

}  // namespace dir
