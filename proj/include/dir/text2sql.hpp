#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/llm.hpp"
#include "dir/model.hpp"
#include "dir/sql.hpp"
#include "dir/store.hpp"

namespace dir {

inline constexpr double kRepairDistanceThreshold = 0.25;

enum class IssueKind { unknown_column, non_enum_value, type_mismatch, unsupported_syntax };
enum class QueryStatus { valid, repaired, rejected };

std::string_view to_string(IssueKind kind);
std::string_view to_string(QueryStatus status);
IssueKind issue_kind_from_string(std::string_view s);
QueryStatus query_status_from_string(std::string_view s);

struct Issue {
  IssueKind kind = IssueKind::unsupported_syntax;
  // "from", "projection[i]", "order_by", or a predicate path such as
  // "where.1.0" with an optional literal index "[k]".
  std::string location;
  std::string detail;
  // Nearest enumerated value for non_enum_value issues.
  std::optional<std::string> suggestion;

  friend bool operator==(const Issue&, const Issue&) = default;
};

struct RepairStep {
  std::string location;
  std::string before;
  std::string after;

  friend bool operator==(const RepairStep&, const RepairStep&) = default;
};

struct ValidationReport {
  QueryStatus status = QueryStatus::valid;
  std::vector<Issue> issues;
  std::vector<RepairStep> repairs;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct GeneratedQuery {
  std::string question;
  std::string raw_sql;
  sql::QueryAst ast;
  ValidationReport report;
  std::size_t prompt_tokens = 0;
  int attempts = 0;

  bool executable() const { return report.status != QueryStatus::rejected; }
  friend bool operator==(const GeneratedQuery&, const GeneratedQuery&) = default;
};

struct NearestValue {
  std::string value;
  double distance = 1.0;
};

// Smallest normalized edit distance; ties go to the lexicographically smaller value.
std::optional<NearestValue> nearest_value(std::string_view literal, const std::vector<std::string>& values);

ValidationReport validate_query(const sql::QueryAst& ast, const JoinedSchema& schema,
                                const EnumerationCatalog& catalog);

struct RepairResult {
  sql::QueryAst ast;
  ValidationReport report;
};

// Rewrites non-enumerated literals to their nearest enumerated value when the
// normalized edit distance is at most kRepairDistanceThreshold.
RepairResult repair_query(const sql::QueryAst& ast, const ValidationReport& report,
                          const EnumerationCatalog& catalog);

struct Text2SqlOptions {
  llm::PromptTemplate tmpl = llm::default_text2sql_template();
};

// Prompt, complete, extract, parse, validate and repair, with one retry that
// feeds the problems back to the model.
GeneratedQuery text_to_sql(std::string_view question, const JoinedSchema& schema,
                           const EnumerationCatalog& catalog, const DialogState& state,
                           const llm::Gateway& gateway, const Text2SqlOptions& options = {});

// SQL actually sent to the store: the query plus a primary-key tie-break so
// row order is total.
std::string execution_sql(const sql::QueryAst& ast, const JoinedSchema& schema);

// Runs a valid or repaired query against the joined view, read-only.
// Throws ContractError for rejected queries.
ResultSet execute(const GeneratedQuery& query, const JoinedSchema& schema, const Store& store);

// Whole view, primary-key order, kinds applied.
ResultSet read_view(const JoinedSchema& schema, const Store& store);

}  // namespace dir
