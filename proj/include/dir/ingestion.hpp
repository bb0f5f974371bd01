#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/model.hpp"

namespace dir {

struct IngestConfig {
  ColumnName primary_key;
  std::optional<std::vector<ColumnName>> declared_text_columns;
  double text_detection_threshold = 0.5;
  std::size_t min_avg_text_length = 40;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

enum class SourceFormat { csv, jsonl };

SourceFormat source_format_from_path(std::string_view path);

// RFC-4180 reader. Returns records including the header; CRLF and LF both end a record.
std::vector<std::vector<std::string>> read_csv(std::istream& in);
void write_csv_record(std::ostream& out, const std::vector<std::string>& fields);

// Parses the source, normalizes the header into column names and infers a
// kind per column. All columns come back structured; see collect_text_fields.
ContextTable load_context_table(std::istream& source, SourceFormat format,
                                const IngestConfig& config, std::string table_id = "table",
                                std::string domain_id = {});

// Columns whose text feeds the Discretize step, in schema order.
std::vector<ColumnName> collect_text_fields(const ContextTable& table, const IngestConfig& config);

// Returns a copy with `columns` flagged as free text. Throws SchemaError for
// unknown, primary-key or non-text columns.
ContextTable mark_text_columns(ContextTable table, const std::vector<ColumnName>& columns);

// Header + rows, nulls as empty cells.
void write_context_csv(std::ostream& out, const ContextTable& table);

}  // namespace dir
