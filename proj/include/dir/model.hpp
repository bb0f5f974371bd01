#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dir {

inline constexpr std::size_t kMaxColumnNameLength = 64;
inline constexpr std::size_t kMaxValueLength = 128;

// A column identifier in canonical snake_case form. The raw spelling is kept
// for display; identity and ordering use the normalized form only.
class ColumnName {
 public:
  ColumnName() = default;

  // Throws NameError when nothing survives normalization.
  static ColumnName normalize(std::string_view raw);
  // True when `s` already is a normalized name.
  static bool is_normalized(std::string_view s);

  const std::string& raw() const noexcept { return raw_; }
  const std::string& str() const noexcept { return normalized_; }
  std::size_t word_count() const;
  std::vector<std::string> words() const;

  friend bool operator==(const ColumnName& a, const ColumnName& b) {
    return a.normalized_ == b.normalized_;
  }
  friend std::strong_ordering operator<=>(const ColumnName& a, const ColumnName& b) {
    return a.normalized_ <=> b.normalized_;
  }

 private:
  ColumnName(std::string raw, std::string normalized)
      : raw_(std::move(raw)), normalized_(std::move(normalized)) {}

  std::string raw_;
  std::string normalized_;
};

inline ColumnName normalize_column_name(std::string_view raw) { return ColumnName::normalize(raw); }

enum class ValueKind { number, text, boolean };

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view s);

// A cell value; monostate is SQL NULL.
using Value = std::variant<std::monostate, double, std::string, bool>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }
std::string value_to_text(const Value& v);

struct Column {
  ColumnName name;
  ValueKind kind = ValueKind::text;
  // Free-text column selected by the Collect step.
  bool free_text = false;
};

using Row = std::vector<Value>;

struct ContextTable {
  std::string table_id;
  std::string domain_id;
  ColumnName primary_key;
  // Schema order; includes the primary key column.
  std::vector<Column> columns;
  // One slot per column, in column order.
  std::vector<Row> rows;
  std::vector<std::string> warnings;

  std::optional<std::size_t> column_index(const ColumnName& name) const;
  std::size_t primary_key_index() const;
  std::vector<Column> structured_columns() const;
  std::vector<ColumnName> text_columns() const;
  std::string key_of(const Row& row) const;
};

// Checks the table invariants; throws IntegrityError or SchemaError.
void check_context_table(const ContextTable& table);

struct KeyValueTuple {
  ColumnName key;
  std::string value;

  friend bool operator==(const KeyValueTuple&, const KeyValueTuple&) = default;
};

// Lowercase, trim and cap at kMaxValueLength. Returns nullopt for empty values.
// Sets `truncated` when the cap applied.
std::optional<std::string> normalize_value(std::string_view raw, bool* truncated = nullptr);

struct RowExtraction {
  std::vector<KeyValueTuple> tuples;
  bool failed = false;
  std::string failure_reason;
  std::vector<ColumnName> unextracted;

  friend bool operator==(const RowExtraction&, const RowExtraction&) = default;
};

struct ExtractionSet {
  std::string table_id;
  std::map<std::string, RowExtraction> per_row;
  std::vector<std::string> warnings;

  friend bool operator==(const ExtractionSet&, const ExtractionSet&) = default;
};

struct DroppedColumn {
  ColumnName name;
  std::string reason;

  friend bool operator==(const DroppedColumn&, const DroppedColumn&) = default;
};

struct EnumerationCatalog {
  std::string table_id;
  // Each list is non-empty, duplicate-free and sorted.
  std::map<ColumnName, std::vector<std::string>> entries;
  // Rows carrying the key; used by the support filter.
  std::map<ColumnName, std::size_t> support;
  std::map<ColumnName, ColumnName> consolidation_map;
  std::vector<DroppedColumn> dropped;

  friend bool operator==(const EnumerationCatalog&, const EnumerationCatalog&) = default;
};

// Throws SpecError on a broken invariant.
void check_catalog(const EnumerationCatalog& catalog, std::size_t column_cap);

enum class CompareOp { eq, neq, lt, lte, gt, gte, in, like };

std::string_view to_string(CompareOp op);
CompareOp compare_op_from_string(std::string_view s);

// Query literal. Numbers are doubles; booleans render as TRUE/FALSE.
using Literal = std::variant<double, std::string, bool>;

struct Constraint {
  CompareOp op = CompareOp::eq;
  std::vector<Literal> operands;
  int turn_index = 0;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct DialogState {
  std::string active_table;
  std::map<ColumnName, Constraint> constraints;

  bool empty() const { return constraints.empty(); }
  friend bool operator==(const DialogState&, const DialogState&) = default;
};

enum class ColumnOrigin { context, inference };

std::string_view to_string(ColumnOrigin origin);

struct SchemaColumn {
  ColumnName name;
  ValueKind kind = ValueKind::text;
  ColumnOrigin origin = ColumnOrigin::context;
  bool free_text = false;

  friend bool operator==(const SchemaColumn&, const SchemaColumn&) = default;
};

// Columns of the Context-Inference join: context columns first, then inferred.
struct JoinedSchema {
  std::string table_id;
  std::string domain_id;
  std::string view_name;
  ColumnName primary_key;
  std::vector<SchemaColumn> columns;

  const SchemaColumn* find(std::string_view name) const;
  friend bool operator==(const JoinedSchema&, const JoinedSchema&) = default;
};

std::string context_table_name(std::string_view table_id);
std::string inference_table_name(std::string_view table_id);
std::string joined_view_name(std::string_view table_id);

}  // namespace dir
