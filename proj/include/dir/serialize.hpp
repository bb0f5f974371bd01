#pragma once

// JSON forms of the domain types, shared by artifacts, the session log, the
// CLI and the HTTP service.

#include <json.hpp>

#include "dir/agent.hpp"
#include "dir/eval.hpp"
#include "dir/model.hpp"
#include "dir/sql.hpp"
#include "dir/store.hpp"
#include "dir/tablegen.hpp"
#include "dir/text2sql.hpp"

namespace nlohmann {

template <>
struct adl_serializer<dir::Value> {
  static void to_json(json& j, const dir::Value& v);
  static void from_json(const json& j, dir::Value& v);
};

template <>
struct adl_serializer<dir::Literal> {
  static void to_json(json& j, const dir::Literal& v);
  static void from_json(const json& j, dir::Literal& v);
};

}  // namespace nlohmann

namespace dir {

using json = nlohmann::json;

void to_json(json& j, const ColumnName& v);
void from_json(const json& j, ColumnName& v);
void to_json(json& j, ValueKind v);
void from_json(const json& j, ValueKind& v);
void to_json(json& j, CompareOp v);
void from_json(const json& j, CompareOp& v);

void to_json(json& j, const KeyValueTuple& v);
void from_json(const json& j, KeyValueTuple& v);
void to_json(json& j, const RowExtraction& v);
void from_json(const json& j, RowExtraction& v);
void to_json(json& j, const ExtractionSet& v);
void from_json(const json& j, ExtractionSet& v);
void to_json(json& j, const DroppedColumn& v);
void from_json(const json& j, DroppedColumn& v);
void to_json(json& j, const EnumerationCatalog& v);
void from_json(const json& j, EnumerationCatalog& v);
void to_json(json& j, const SchemaColumn& v);
void from_json(const json& j, SchemaColumn& v);
void to_json(json& j, const JoinedSchema& v);
void from_json(const json& j, JoinedSchema& v);
void to_json(json& j, const Constraint& v);
void from_json(const json& j, Constraint& v);
void to_json(json& j, const DialogState& v);
void from_json(const json& j, DialogState& v);

void to_json(json& j, const Issue& v);
void from_json(const json& j, Issue& v);
void to_json(json& j, const RepairStep& v);
void from_json(const json& j, RepairStep& v);
void to_json(json& j, const ValidationReport& v);
void from_json(const json& j, ValidationReport& v);
void to_json(json& j, const GeneratedQuery& v);
void from_json(const json& j, GeneratedQuery& v);
void to_json(json& j, const ResultSet& v);

void to_json(json& j, const Observation& v);
void from_json(const json& j, Observation& v);
void to_json(json& j, const AgentAction& v);
void from_json(const json& j, AgentAction& v);
void to_json(json& j, const AgentStep& v);
void from_json(const json& j, AgentStep& v);
void to_json(json& j, const AgentTurn& v);
void from_json(const json& j, AgentTurn& v);
void to_json(json& j, const Session& v);

void to_json(json& j, const IntentConstraint& v);
void from_json(const json& j, IntentConstraint& v);
void to_json(json& j, const QueryIntent& v);
void from_json(const json& j, QueryIntent& v);
void to_json(json& j, const QueryMetrics& v);
void to_json(json& j, const EvalReport& v);

// Table listing entry: ids, row count and column count.
json table_summary(const TableEntry& entry);

}  // namespace dir

namespace dir::sql {

void to_json(nlohmann::json& j, const Atom& v);
void from_json(const nlohmann::json& j, Atom& v);
void to_json(nlohmann::json& j, const Predicate& v);
void from_json(const nlohmann::json& j, Predicate& v);
void to_json(nlohmann::json& j, const QueryAst& v);
void from_json(const nlohmann::json& j, QueryAst& v);

}  // namespace dir::sql
