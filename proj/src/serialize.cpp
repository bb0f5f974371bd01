#include "dir/serialize.hpp"

#include "dir/error.hpp"

namespace nlohmann {

void adl_serializer<dir::Value>::to_json(json& j, const dir::Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) j = nullptr;
        else j = x;
      },
      v);
}

void adl_serializer<dir::Value>::from_json(const json& j, dir::Value& v) {
  if (j.is_null()) v = std::monostate{};
  else if (j.is_boolean()) v = j.get<bool>();
  else if (j.is_number()) v = j.get<double>();
  else if (j.is_string()) v = j.get<std::string>();
  else throw dir::SchemaError("cell values must be null, number, string or boolean");
}

void adl_serializer<dir::Literal>::to_json(json& j, const dir::Literal& v) {
  std::visit([&](const auto& x) { j = x; }, v);
}

void adl_serializer<dir::Literal>::from_json(const json& j, dir::Literal& v) {
  if (j.is_boolean()) v = j.get<bool>();
  else if (j.is_number()) v = j.get<double>();
  else if (j.is_string()) v = j.get<std::string>();
  else throw dir::SchemaError("literals must be number, string or boolean");
}

}  // namespace nlohmann

namespace dir {

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <typename V>
json keyed_object(const std::map<ColumnName, V>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k.str()] = v;
  return out;
}

template <typename V>
std::map<ColumnName, V> keyed_map(const json& j) {
  std::map<ColumnName, V> out;
  for (const auto& [k, v] : j.items()) out.emplace(ColumnName::normalize(k), v.template get<V>());
  return out;
}

ColumnOrigin origin_from_string(std::string_view s) {
  if (s == "context") return ColumnOrigin::context;
  if (s == "inference") return ColumnOrigin::inference;
  throw SchemaError("unknown column origin '" + std::string(s) + "'");
}

}  // namespace

void to_json(json& j, const ColumnName& v) { j = v.str(); }
void from_json(const json& j, ColumnName& v) { v = ColumnName::normalize(j.get<std::string>()); }
void to_json(json& j, ValueKind v) { j = std::string(to_string(v)); }
void from_json(const json& j, ValueKind& v) { v = value_kind_from_string(j.get<std::string>()); }
void to_json(json& j, CompareOp v) { j = std::string(to_string(v)); }
void from_json(const json& j, CompareOp& v) { v = compare_op_from_string(j.get<std::string>()); }

void to_json(json& j, const KeyValueTuple& v) { j = json::array({v.key.str(), v.value}); }
void from_json(const json& j, KeyValueTuple& v) {
  v.key = j.at(0).get<ColumnName>();
  v.value = j.at(1).get<std::string>();
}

void to_json(json& j, const RowExtraction& v) {
  j = json{{"tuples", v.tuples}, {"failed", v.failed}, {"unextracted", v.unextracted}};
  if (v.failed) j["failure_reason"] = v.failure_reason;
}
void from_json(const json& j, RowExtraction& v) {
  v.tuples = j.at("tuples").get<std::vector<KeyValueTuple>>();
  v.failed = j.value("failed", false);
  v.failure_reason = j.value("failure_reason", "");
  v.unextracted = j.value("unextracted", std::vector<ColumnName>{});
}

void to_json(json& j, const ExtractionSet& v) {
  json rows = json::object();
  for (const auto& [k, r] : v.per_row) rows[k] = r;
  j = json{{"table_id", v.table_id}, {"rows", rows}, {"warnings", v.warnings}};
}
void from_json(const json& j, ExtractionSet& v) {
  v.table_id = j.at("table_id").get<std::string>();
  v.per_row.clear();
  for (const auto& [k, r] : j.at("rows").items()) v.per_row.emplace(k, r.get<RowExtraction>());
  v.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(json& j, const DroppedColumn& v) { j = json{{"name", v.name}, {"reason", v.reason}}; }
void from_json(const json& j, DroppedColumn& v) {
  v.name = j.at("name").get<ColumnName>();
  v.reason = j.at("reason").get<std::string>();
}

void to_json(json& j, const EnumerationCatalog& v) {
  json cmap = json::object();
  for (const auto& [from, to] : v.consolidation_map) cmap[from.str()] = to.str();
  j = json{{"table_id", v.table_id},
           {"entries", keyed_object(v.entries)},
           {"support", keyed_object(v.support)},
           {"consolidation_map", cmap},
           {"dropped", v.dropped}};
}
void from_json(const json& j, EnumerationCatalog& v) {
  v.table_id = j.at("table_id").get<std::string>();
  v.entries = keyed_map<std::vector<std::string>>(j.at("entries"));
  v.support = keyed_map<std::size_t>(j.value("support", json::object()));
  v.consolidation_map = keyed_map<ColumnName>(j.value("consolidation_map", json::object()));
  v.dropped = j.value("dropped", std::vector<DroppedColumn>{});
}

void to_json(json& j, const SchemaColumn& v) {
  j = json{{"name", v.name}, {"kind", v.kind}, {"origin", std::string(to_string(v.origin))}, {"free_text", v.free_text}};
}
void from_json(const json& j, SchemaColumn& v) {
  v.name = j.at("name").get<ColumnName>();
  v.kind = j.at("kind").get<ValueKind>();
  v.origin = origin_from_string(j.at("origin").get<std::string>());
  v.free_text = j.value("free_text", false);
}

void to_json(json& j, const JoinedSchema& v) {
  j = json{{"table_id", v.table_id},
           {"domain_id", v.domain_id},
           {"view_name", v.view_name},
           {"primary_key", v.primary_key},
           {"columns", v.columns}};
}
void from_json(const json& j, JoinedSchema& v) {
  v.table_id = j.at("table_id").get<std::string>();
  v.domain_id = j.value("domain_id", "");
  v.view_name = j.at("view_name").get<std::string>();
  v.primary_key = j.at("primary_key").get<ColumnName>();
  v.columns = j.at("columns").get<std::vector<SchemaColumn>>();
}

void to_json(json& j, const Constraint& v) {
  j = json{{"op", v.op}, {"operands", v.operands}, {"turn_index", v.turn_index}};
}
void from_json(const json& j, Constraint& v) {
  v.op = j.at("op").get<CompareOp>();
  v.operands = j.at("operands").get<std::vector<Literal>>();
  v.turn_index = j.value("turn_index", 0);
}

void to_json(json& j, const DialogState& v) {
  j = json{{"active_table", v.active_table}, {"constraints", keyed_object(v.constraints)}};
}
void from_json(const json& j, DialogState& v) {
  v.active_table = j.value("active_table", "");
  v.constraints = keyed_map<Constraint>(j.value("constraints", json::object()));
}

void to_json(json& j, const Issue& v) {
  j = json{{"kind", std::string(to_string(v.kind))}, {"location", v.location}, {"detail", v.detail}};
  if (v.suggestion) j["suggestion"] = *v.suggestion;
}
void from_json(const json& j, Issue& v) {
  v.kind = issue_kind_from_string(j.at("kind").get<std::string>());
  v.location = j.at("location").get<std::string>();
  v.detail = j.at("detail").get<std::string>();
  v.suggestion = optional_from<std::string>(j, "suggestion");
}

void to_json(json& j, const RepairStep& v) {
  j = json{{"location", v.location}, {"before", v.before}, {"after", v.after}};
}
void from_json(const json& j, RepairStep& v) {
  v.location = j.at("location").get<std::string>();
  v.before = j.at("before").get<std::string>();
  v.after = j.at("after").get<std::string>();
}

void to_json(json& j, const ValidationReport& v) {
  j = json{{"status", std::string(to_string(v.status))}, {"issues", v.issues}, {"repairs", v.repairs}};
}
void from_json(const json& j, ValidationReport& v) {
  v.status = query_status_from_string(j.at("status").get<std::string>());
  v.issues = j.at("issues").get<std::vector<Issue>>();
  v.repairs = j.at("repairs").get<std::vector<RepairStep>>();
}

void to_json(json& j, const GeneratedQuery& v) {
  j = json{{"question", v.question},
           {"raw_sql", v.raw_sql},
           {"sql", v.raw_sql.empty() ? std::string() : sql::render(v.ast)},
           {"ast", v.ast},
           {"report", v.report},
           {"prompt_tokens", v.prompt_tokens},
           {"attempts", v.attempts}};
}
void from_json(const json& j, GeneratedQuery& v) {
  v.question = j.at("question").get<std::string>();
  v.raw_sql = j.at("raw_sql").get<std::string>();
  v.ast = j.at("ast").get<sql::QueryAst>();
  v.report = j.at("report").get<ValidationReport>();
  v.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
  v.attempts = j.value("attempts", 1);
}

void to_json(json& j, const ResultSet& v) {
  json cols = json::array();
  for (const auto& c : v.columns)
    cols.push_back(json{{"name", c.name}, {"kind", c.kind ? json(*c.kind) : json(nullptr)}});
  j = json{{"columns", cols}, {"rows", v.rows}};
}

void to_json(json& j, const Observation& v) {
  j = json{{"row_count", v.row_count}, {"columns", v.columns}, {"sample_rows", v.sample_rows}};
}
void from_json(const json& j, Observation& v) {
  v.row_count = j.at("row_count").get<std::size_t>();
  v.columns = j.at("columns").get<std::vector<std::string>>();
  v.sample_rows = j.at("sample_rows").get<std::vector<Row>>();
}

void to_json(json& j, const AgentAction& v) { j = json{{"tool", v.tool}, {"arguments", v.arguments}}; }
void from_json(const json& j, AgentAction& v) {
  v.tool = j.at("tool").get<std::string>();
  v.arguments = j.value("arguments", std::map<std::string, std::string>{});
}

void to_json(json& j, const AgentStep& v) {
  j = json{{"thought", v.thought}, {"action", v.action}, {"observation", optional_json(v.observation)}};
}
void from_json(const json& j, AgentStep& v) {
  v.thought = j.at("thought").get<std::string>();
  v.action = j.at("action").get<AgentAction>();
  v.observation = optional_from<Observation>(j, "observation");
}

void to_json(json& j, const AgentTurn& v) {
  j = json{{"turn_index", v.turn_index},
           {"utterance", v.utterance},
           {"table_id", v.table_id},
           {"thought", v.thought},
           {"action", v.action},
           {"observation", optional_json(v.observation)},
           {"response", optional_json(v.response)},
           {"query", optional_json(v.query)},
           {"state", v.state_after},
           {"trace", v.trace}};
}
void from_json(const json& j, AgentTurn& v) {
  v.turn_index = j.at("turn_index").get<int>();
  v.utterance = j.at("utterance").get<std::string>();
  v.table_id = j.value("table_id", "");
  v.thought = j.at("thought").get<std::string>();
  v.action = j.at("action").get<AgentAction>();
  v.observation = optional_from<Observation>(j, "observation");
  v.response = optional_from<std::string>(j, "response");
  v.query = optional_from<GeneratedQuery>(j, "query");
  v.state_after = j.at("state").get<DialogState>();
  v.trace = j.value("trace", std::vector<AgentStep>{});
}

void to_json(json& j, const Session& v) {
  std::vector<std::string> transcript;
  for (const auto& t : v.turns) transcript.push_back(format_turn(t));
  j = json{{"session_id", v.session_id},
           {"routing_history", v.routing_history},
           {"dialog_state", v.dialog_state},
           {"turns", v.turns},
           {"transcript", transcript}};
}

void to_json(json& j, const IntentConstraint& v) {
  j = json{{"column", v.column}, {"op", v.op}};
  if (v.op == CompareOp::in) j["values"] = v.values;
  else j["value"] = v.values.empty() ? json(nullptr) : json(v.values.front());
}
void from_json(const json& j, IntentConstraint& v) {
  v.column = j.at("column").get<std::string>();
  v.op = j.at("op").get<CompareOp>();
  if (j.contains("values")) v.values = j.at("values").get<std::vector<Literal>>();
  else v.values = {j.at("value").get<Literal>()};
}

void to_json(json& j, const QueryIntent& v) {
  j = json{{"description", v.description}, {"constraints", v.constraints}, {"kind", v.kind}, {"domain", v.domain}};
}
void from_json(const json& j, QueryIntent& v) {
  v.description = j.at("description").get<std::string>();
  v.constraints = j.at("constraints").get<std::vector<IntentConstraint>>();
  v.kind = j.value("kind", "direct");
  v.domain = j.value("domain", "");
  if (v.kind != "direct" && v.kind != "exploratory") throw SchemaError("intent kind must be direct or exploratory");
}

void to_json(json& j, const QueryMetrics& v) {
  j = json{{"description", v.description}, {"recall", v.recall}, {"precision", v.precision},
           {"returned", v.returned},       {"truth", v.truth},   {"hits", v.hits}};
}

void to_json(json& j, const EvalReport& v) {
  j = json{{"system", v.system},
           {"queries", v.per_query.size()},
           {"per_query", v.per_query},
           {"macro_recall", optional_json(v.macro_recall)},
           {"macro_precision", optional_json(v.macro_precision)}};
}

json table_summary(const TableEntry& entry) {
  std::size_t inferred = 0;
  for (const auto& c : entry.schema.columns) inferred += c.origin == ColumnOrigin::inference;
  return json{{"table_id", entry.table_id},
              {"domain_id", entry.domain_id},
              {"view_name", entry.schema.view_name},
              {"row_count", entry.row_count},
              {"columns", entry.schema.columns.size()},
              {"inferred_columns", inferred}};
}

}  // namespace dir

namespace dir::sql {

void to_json(nlohmann::json& j, const Atom& v) {
  j = nlohmann::json{{"column", v.column}, {"op", v.op}, {"operands", v.operands}};
}
void from_json(const nlohmann::json& j, Atom& v) {
  v.column = j.at("column").get<std::string>();
  v.op = j.at("op").get<CompareOp>();
  v.operands = j.at("operands").get<std::vector<Literal>>();
}

void to_json(nlohmann::json& j, const Predicate& v) {
  switch (v.kind) {
    case Predicate::Kind::atom: j = nlohmann::json{{"atom", v.atom}}; break;
    case Predicate::Kind::all_of: j = nlohmann::json{{"and", v.children}}; break;
    case Predicate::Kind::any_of: j = nlohmann::json{{"or", v.children}}; break;
    case Predicate::Kind::negate: j = nlohmann::json{{"not", v.children.at(0)}}; break;
  }
}
void from_json(const nlohmann::json& j, Predicate& v) {
  if (j.contains("atom")) v = Predicate::make_atom(j.at("atom").get<Atom>());
  else if (j.contains("and")) v = Predicate::all(j.at("and").get<std::vector<Predicate>>());
  else if (j.contains("or")) v = Predicate::any(j.at("or").get<std::vector<Predicate>>());
  else if (j.contains("not")) v = Predicate::negation(j.at("not").get<Predicate>());
  else throw SchemaError("predicate node must be atom, and, or or not");
}

void to_json(nlohmann::json& j, const QueryAst& v) {
  j = nlohmann::json{{"projection", v.projection},
                     {"source", v.source},
                     {"predicate", v.predicate ? nlohmann::json(*v.predicate) : nlohmann::json(nullptr)},
                     {"order_by", v.order_by ? nlohmann::json{{"column", v.order_by->column},
                                                              {"descending", v.order_by->descending}}
                                             : nlohmann::json(nullptr)},
                     {"limit", v.limit ? nlohmann::json(*v.limit) : nlohmann::json(nullptr)}};
}
void from_json(const nlohmann::json& j, QueryAst& v) {
  v.projection = j.at("projection").get<std::vector<std::string>>();
  v.source = j.at("source").get<std::string>();
  v.predicate.reset();
  if (j.contains("predicate") && !j.at("predicate").is_null()) v.predicate = j.at("predicate").get<Predicate>();
  v.order_by.reset();
  if (j.contains("order_by") && !j.at("order_by").is_null())
    v.order_by = OrderBy{j.at("order_by").at("column").get<std::string>(),
                         j.at("order_by").value("descending", false)};
  v.limit.reset();
  if (j.contains("limit") && !j.at("limit").is_null()) v.limit = j.at("limit").get<std::int64_t>();
}

}  // namespace dir::sql
