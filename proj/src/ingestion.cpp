#include "dir/ingestion.hpp"

#include <algorithm>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>

#include <json.hpp>

#include "dir/error.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace {

using RawGrid = std::vector<std::vector<std::optional<std::string>>>;

bool is_boolean_text(std::string_view s) {
  auto l = text::to_lower(text::trim(s));
  return l == "true" || l == "false" || l == "yes" || l == "no";
}

bool boolean_value(std::string_view s) {
  auto l = text::to_lower(text::trim(s));
  return l == "true" || l == "yes";
}

ValueKind infer_kind(const RawGrid& rows, std::size_t col) {
  std::size_t non_null = 0;
  std::size_t numeric = 0;
  std::size_t boolean = 0;
  for (const auto& row : rows) {
    const auto& cell = row[col];
    if (!cell) continue;
    ++non_null;
    double d;
    if (text::parse_number(text::trim(*cell), d)) ++numeric;
    if (is_boolean_text(*cell)) ++boolean;
  }
  if (non_null == 0) return ValueKind::text;
  if (boolean == non_null) return ValueKind::boolean;
  if (static_cast<double>(numeric) >= 0.9 * static_cast<double>(non_null)) return ValueKind::number;
  return ValueKind::text;
}

std::optional<std::string> cell_of(const std::string& s) {
  if (text::trim(s).empty()) return std::nullopt;
  return s;
}

struct RawTable {
  std::vector<std::string> header;
  RawGrid rows;
};

RawTable read_csv_raw(std::istream& in) {
  auto records = read_csv(in);
  RawTable raw;
  if (records.empty()) throw SchemaError("source has no header row");
  raw.header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != raw.header.size())
      throw SchemaError("record " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                        " fields, header has " + std::to_string(raw.header.size()));
    std::vector<std::optional<std::string>> row;
    row.reserve(rec.size());
    for (auto& f : rec) row.push_back(cell_of(f));
    raw.rows.push_back(std::move(row));
  }
  return raw;
}

RawTable read_jsonl_raw(std::istream& in) {
  RawTable raw;
  std::vector<nlohmann::ordered_json> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!doc.is_object()) throw SchemaError("line " + std::to_string(line_no) + " is not an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (std::find(raw.header.begin(), raw.header.end(), it.key()) == raw.header.end())
        raw.header.push_back(it.key());
    }
    docs.push_back(std::move(doc));
  }
  for (const auto& doc : docs) {
    std::vector<std::optional<std::string>> row;
    for (const auto& key : raw.header) {
      auto it = doc.find(key);
      if (it == doc.end() || it->is_null()) {
        row.emplace_back(std::nullopt);
      } else if (it->is_string()) {
        row.push_back(cell_of(it->get<std::string>()));
      } else if (it->is_boolean()) {
        row.emplace_back(it->get<bool>() ? "true" : "false");
      } else if (it->is_number()) {
        row.emplace_back(text::format_number(it->get<double>()));
      } else {
        throw SchemaError("field '" + key + "' is not a flat value");
      }
    }
    raw.rows.push_back(std::move(row));
  }
  return raw;
}

}  // namespace

void IngestConfig::validate() const {
  if (!(text_detection_threshold >= 0.0 && text_detection_threshold <= 1.0))
    throw ConfigError("text_detection_threshold must be in [0,1]");
  if (min_avg_text_length < 1) throw ConfigError("min_avg_text_length must be >= 1");
}

SourceFormat source_format_from_path(std::string_view path) {
  auto lower = text::to_lower(path);
  auto ends_with = [&](std::string_view suffix) {
    return lower.size() >= suffix.size() &&
           lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".jsonl") || ends_with(".ndjson")) return SourceFormat::jsonl;
  return SourceFormat::csv;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::istreambuf_iterator<char> it(in), end;
  while (it != end) {
    char c = *it++;
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (it != end && *it == '"') {
          field.push_back('"');
          ++it;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && it != end && *it == '\n') ++it;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw SchemaError("unterminated quoted field");
  if (any) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

void write_csv_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\r\n") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << "\r\n";
}

ContextTable load_context_table(std::istream& source, SourceFormat format,
                                const IngestConfig& config, std::string table_id,
                                std::string domain_id) {
  config.validate();
  RawTable raw = format == SourceFormat::csv ? read_csv_raw(source) : read_jsonl_raw(source);

  ContextTable table;
  table.table_id = std::move(table_id);
  table.domain_id = domain_id.empty() ? table.table_id : std::move(domain_id);
  table.primary_key = config.primary_key;

  std::set<ColumnName> seen;
  for (const auto& h : raw.header) {
    auto name = ColumnName::normalize(h);
    if (!seen.insert(name).second) throw SchemaError("duplicate column '" + name.str() + "'");
    table.columns.push_back(Column{name, ValueKind::text, false});
  }
  auto pk = table.column_index(config.primary_key);
  if (!pk) throw SchemaError("primary key column '" + config.primary_key.str() + "' not in header");

  for (std::size_t c = 0; c < table.columns.size(); ++c)
    table.columns[c].kind = c == *pk ? ValueKind::text : infer_kind(raw.rows, c);

  std::set<std::string> keys;
  table.rows.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    Row row;
    row.reserve(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const auto& cell = raw.rows[r][c];
      if (!cell) {
        row.emplace_back(std::monostate{});
        continue;
      }
      switch (table.columns[c].kind) {
        case ValueKind::number: {
          double d;
          if (text::parse_number(text::trim(*cell), d)) {
            row.emplace_back(d);
          } else {
            table.warnings.push_back("row " + std::to_string(r) + ": '" + *cell +
                                     "' in numeric column '" + table.columns[c].name.str() +
                                     "' stored as null");
            row.emplace_back(std::monostate{});
          }
          break;
        }
        case ValueKind::boolean: row.emplace_back(boolean_value(*cell)); break;
        case ValueKind::text:
          row.emplace_back(c == *pk ? text::trim(*cell) : *cell);
          break;
      }
    }
    if (is_null(row[*pk])) throw IntegrityError("null primary key in row " + std::to_string(r), {""});
    auto key = std::get<std::string>(row[*pk]);
    if (!keys.insert(key).second) throw IntegrityError("duplicate primary key '" + key + "'", {key});
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<ColumnName> collect_text_fields(const ContextTable& table, const IngestConfig& config) {
  config.validate();
  if (config.declared_text_columns) {
    for (const auto& name : *config.declared_text_columns) {
      if (!table.column_index(name))
        throw SchemaError("declared text column '" + name.str() + "' not in table");
      if (name == table.primary_key)
        throw SchemaError("primary key '" + name.str() + "' cannot be a text column");
    }
    return *config.declared_text_columns;
  }
  std::vector<ColumnName> out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto& col = table.columns[c];
    if (col.name == table.primary_key || col.kind != ValueKind::text) continue;
    std::size_t non_null = 0;
    std::size_t total_length = 0;
    std::set<std::string> distinct;
    for (const auto& row : table.rows) {
      if (is_null(row[c])) continue;
      const auto& s = std::get<std::string>(row[c]);
      ++non_null;
      total_length += s.size();
      distinct.insert(s);
    }
    if (non_null == 0) continue;
    double avg = static_cast<double>(total_length) / static_cast<double>(non_null);
    double ratio = static_cast<double>(distinct.size()) / static_cast<double>(non_null);
    if (avg >= static_cast<double>(config.min_avg_text_length) &&
        ratio >= config.text_detection_threshold)
      out.push_back(col.name);
  }
  return out;
}

ContextTable mark_text_columns(ContextTable table, const std::vector<ColumnName>& columns) {
  for (const auto& name : columns) {
    auto idx = table.column_index(name);
    if (!idx) throw SchemaError("text column '" + name.str() + "' not in table");
    if (name == table.primary_key) throw SchemaError("primary key cannot be a text column");
    if (table.columns[*idx].kind != ValueKind::text)
      throw SchemaError("column '" + name.str() + "' is not text-kind");
    table.columns[*idx].free_text = true;
  }
  return table;
}

void write_context_csv(std::ostream& out, const ContextTable& table) {
  std::vector<std::string> header;
  for (const auto& c : table.columns) header.push_back(c.name.str());
  write_csv_record(out, header);
  for (const auto& row : table.rows) {
    std::vector<std::string> fields;
    for (const auto& v : row) fields.push_back(value_to_text(v));
    write_csv_record(out, fields);
  }
}

}  // namespace dir
