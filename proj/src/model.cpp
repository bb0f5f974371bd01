#include "dir/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "dir/error.hpp"
#include "dir/text_util.hpp"

namespace dir {

ColumnName ColumnName::normalize(std::string_view raw) {
  auto parts = text::words(raw);
  std::string out = text::join(parts, "_");
  if (out.size() > kMaxColumnNameLength) {
    out.resize(kMaxColumnNameLength);
    while (!out.empty() && out.back() == '_') out.pop_back();
  }
  if (out.empty()) throw NameError("column name '" + std::string(raw) + "' is empty after normalization");
  return ColumnName(std::string(raw), std::move(out));
}

bool ColumnName::is_normalized(std::string_view s) {
  if (s.empty() || s.size() > kMaxColumnNameLength) return false;
  bool prev_sep = true;
  for (char c : s) {
    if (c == '_') {
      if (prev_sep) return false;
      prev_sep = true;
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      prev_sep = false;
    } else {
      return false;
    }
  }
  return !prev_sep;
}

std::size_t ColumnName::word_count() const {
  if (normalized_.empty()) return 0;
  return static_cast<std::size_t>(std::count(normalized_.begin(), normalized_.end(), '_')) + 1;
}

std::vector<std::string> ColumnName::words() const { return text::split(normalized_, '_'); }

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::number: return "number";
    case ValueKind::text: return "text";
    case ValueKind::boolean: return "boolean";
  }
  return "text";
}

ValueKind value_kind_from_string(std::string_view s) {
  if (s == "number") return ValueKind::number;
  if (s == "text") return ValueKind::text;
  if (s == "boolean") return ValueKind::boolean;
  throw SchemaError("unknown value kind '" + std::string(s) + "'");
}

std::string value_to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return text::format_number(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else return x;
      },
      v);
}

std::optional<std::size_t> ContextTable::column_index(const ColumnName& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

std::size_t ContextTable::primary_key_index() const {
  auto idx = column_index(primary_key);
  if (!idx) throw SchemaError("primary key '" + primary_key.str() + "' is not a column");
  return *idx;
}

std::vector<Column> ContextTable::structured_columns() const {
  std::vector<Column> out;
  for (const auto& c : columns)
    if (!c.free_text && c.name != primary_key) out.push_back(c);
  return out;
}

std::vector<ColumnName> ContextTable::text_columns() const {
  std::vector<ColumnName> out;
  for (const auto& c : columns)
    if (c.free_text) out.push_back(c.name);
  return out;
}

std::string ContextTable::key_of(const Row& row) const {
  return value_to_text(row.at(primary_key_index()));
}

void check_context_table(const ContextTable& table) {
  const auto pk = table.primary_key_index();
  std::set<ColumnName> names;
  for (const auto& c : table.columns) {
    if (!names.insert(c.name).second) throw SchemaError("duplicate column '" + c.name.str() + "'");
    if (c.free_text && c.name == table.primary_key)
      throw SchemaError("primary key cannot be a free-text column");
  }
  std::set<std::string> keys;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.columns.size())
      throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                        " values for " + std::to_string(table.columns.size()) + " columns");
    if (is_null(row[pk]))
      throw IntegrityError("null primary key in row " + std::to_string(r), {""});
    auto key = value_to_text(row[pk]);
    if (!keys.insert(key).second) throw IntegrityError("duplicate primary key '" + key + "'", {key});
  }
}

std::optional<std::string> normalize_value(std::string_view raw, bool* truncated) {
  std::string v = text::to_lower(text::trim(raw));
  if (truncated) *truncated = false;
  if (v.size() > kMaxValueLength) {
    v.resize(kMaxValueLength);
    // Do not leave a dangling partial UTF-8 sequence.
    while (!v.empty() && (static_cast<unsigned char>(v.back()) & 0xC0) == 0x80) v.pop_back();
    if (!v.empty() && (static_cast<unsigned char>(v.back()) & 0x80)) v.pop_back();
    v = text::trim(v);
    if (truncated) *truncated = true;
  }
  if (v.empty()) return std::nullopt;
  return v;
}

void check_catalog(const EnumerationCatalog& catalog, std::size_t column_cap) {
  if (catalog.entries.size() > column_cap)
    throw SpecError("catalog has " + std::to_string(catalog.entries.size()) +
                    " entries, cap is " + std::to_string(column_cap));
  for (const auto& [name, values] : catalog.entries) {
    if (values.empty()) throw SpecError("empty value list for '" + name.str() + "'");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i - 1] < values[i]))
        throw SpecError("value list for '" + name.str() + "' is not sorted and distinct");
  }
  for (const auto& [from, to] : catalog.consolidation_map) {
    auto it = catalog.consolidation_map.find(to);
    if (it != catalog.consolidation_map.end() && it->second != to)
      throw SpecError("consolidation map is not idempotent at '" + from.str() + "'");
  }
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "eq";
    case CompareOp::neq: return "neq";
    case CompareOp::lt: return "lt";
    case CompareOp::lte: return "lte";
    case CompareOp::gt: return "gt";
    case CompareOp::gte: return "gte";
    case CompareOp::in: return "in";
    case CompareOp::like: return "like";
  }
  return "eq";
}

CompareOp compare_op_from_string(std::string_view s) {
  static const std::pair<std::string_view, CompareOp> table[] = {
      {"eq", CompareOp::eq},   {"neq", CompareOp::neq}, {"lt", CompareOp::lt},
      {"lte", CompareOp::lte}, {"gt", CompareOp::gt},   {"gte", CompareOp::gte},
      {"in", CompareOp::in},   {"like", CompareOp::like}};
  for (const auto& [name, op] : table)
    if (name == s) return op;
  throw SchemaError("unknown operator '" + std::string(s) + "'");
}

std::string_view to_string(ColumnOrigin origin) {
  return origin == ColumnOrigin::context ? "context" : "inference";
}

const SchemaColumn* JoinedSchema::find(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name.str() == name) return &c;
  return nullptr;
}

std::string context_table_name(std::string_view table_id) {
  return std::string(table_id) + "__context";
}

std::string inference_table_name(std::string_view table_id) {
  return std::string(table_id) + "__inference";
}

std::string joined_view_name(std::string_view table_id) {
  return std::string(table_id) + "__joined";
}

}  // namespace dir
