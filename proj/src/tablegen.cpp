#include "dir/tablegen.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "dir/error.hpp"
#include "dir/serialize.hpp"
#include "dir/sql.hpp"

namespace dir {

namespace {

constexpr const char* kMetaTable = "dir_tables";

void ensure_meta(Store& store) {
  store.exec(std::string("CREATE TABLE IF NOT EXISTS ") + kMetaTable +
             " (table_id TEXT PRIMARY KEY, domain_id TEXT NOT NULL, context_schema TEXT NOT NULL,"
             " joined_schema TEXT, catalog TEXT)");
}

std::string sql_type(ValueKind kind) {
  switch (kind) {
    case ValueKind::number: return "REAL";
    case ValueKind::boolean: return "INTEGER";
    case ValueKind::text: return "TEXT";
  }
  return "TEXT";
}

void check_width(const Store& store, std::size_t width) {
  if (width > store.configured_max_columns()) throw StoreLimitError(store.configured_max_columns(), width);
  if (width > store.max_columns()) throw StoreLimitError(store.max_columns(), width);
}

nlohmann::json context_schema_json(const ContextTable& table) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : table.columns)
    cols.push_back({{"name", c.name.str()}, {"kind", to_string(c.kind)}, {"free_text", c.free_text}});
  return {{"table_id", table.table_id},
          {"domain_id", table.domain_id},
          {"primary_key", table.primary_key.str()},
          {"columns", cols}};
}

}  // namespace

void write_context_table(const ContextTable& table, Store& store) {
  check_context_table(table);
  check_width(store, table.columns.size());
  ensure_meta(store);
  const auto name = context_table_name(table.table_id);
  std::string ddl = "CREATE TABLE " + sql::quote_identifier(name) + " (";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    const auto& c = table.columns[i];
    if (i) ddl += ", ";
    ddl += sql::quote_identifier(c.name.str()) + " " + sql_type(c.kind);
    if (c.name == table.primary_key) ddl += " PRIMARY KEY NOT NULL";
  }
  ddl += ")";

  Store::Transaction tx(store);
  store.exec("DROP VIEW IF EXISTS " + sql::quote_identifier(joined_view_name(table.table_id)));
  store.exec("DROP TABLE IF EXISTS " + sql::quote_identifier(name));
  store.exec(ddl);
  store.insert_rows(name, table.columns.size(), table.rows);
  store.query(std::string("INSERT OR REPLACE INTO ") + kMetaTable +
                  " (table_id, domain_id, context_schema, joined_schema, catalog) VALUES (?1, ?2, ?3, NULL, NULL)",
              {Value{table.table_id}, Value{table.domain_id}, Value{context_schema_json(table).dump()}});
  tx.commit();
}

ContextTable read_context_table(const Store& store, const std::string& table_id) {
  if (!store.has_table(kMetaTable)) throw NotFoundError("unknown table '" + table_id + "'");
  auto meta = store.query(std::string("SELECT context_schema FROM ") + kMetaTable + " WHERE table_id = ?1",
                          {Value{table_id}});
  if (meta.rows.empty()) throw NotFoundError("unknown table '" + table_id + "'");
  auto doc = nlohmann::json::parse(std::get<std::string>(meta.rows[0][0]));
  ContextTable table;
  table.table_id = doc.at("table_id").get<std::string>();
  table.domain_id = doc.at("domain_id").get<std::string>();
  table.primary_key = ColumnName::normalize(doc.at("primary_key").get<std::string>());
  for (const auto& c : doc.at("columns"))
    table.columns.push_back(Column{ColumnName::normalize(c.at("name").get<std::string>()),
                                   value_kind_from_string(c.at("kind").get<std::string>()),
                                   c.at("free_text").get<bool>()});
  auto rs = store.query("SELECT * FROM " + sql::quote_identifier(context_table_name(table_id)) + " ORDER BY rowid");
  for (auto& row : rs.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (table.columns[i].kind == ValueKind::boolean && std::holds_alternative<double>(row[i]))
        row[i] = std::get<double>(row[i]) != 0.0;
      else if (table.columns[i].kind == ValueKind::text && std::holds_alternative<double>(row[i]))
        row[i] = value_to_text(row[i]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string generate_inference_table(const EnumerationCatalog& catalog, const ExtractionSet& extractions,
                                     const ColumnName& primary_key, Store& store) {
  check_width(store, catalog.entries.size() + 1);
  if (catalog.entries.count(primary_key))
    throw SchemaError("catalog entry '" + primary_key.str() + "' collides with the primary key");

  const auto name = inference_table_name(catalog.table_id);
  std::vector<ColumnName> columns;
  for (const auto& [key, values] : catalog.entries) {
    (void)values;
    columns.push_back(key);
  }
  std::string ddl = "CREATE TABLE " + sql::quote_identifier(name) + " (" +
                    sql::quote_identifier(primary_key.str()) + " TEXT PRIMARY KEY NOT NULL";
  for (const auto& c : columns) ddl += ", " + sql::quote_identifier(c.str()) + " TEXT";
  ddl += ")";

  std::vector<Row> rows;
  rows.reserve(extractions.per_row.size());
  for (const auto& [pk, extraction] : extractions.per_row) {
    Row row(columns.size() + 1);
    row[0] = pk;
    for (const auto& t : extraction.tuples) {
      auto mapped = catalog.consolidation_map.find(t.key);
      const auto& key = mapped == catalog.consolidation_map.end() ? t.key : mapped->second;
      auto entry = catalog.entries.find(key);
      if (entry == catalog.entries.end()) continue;
      if (!std::binary_search(entry->second.begin(), entry->second.end(), t.value)) continue;
      auto idx = static_cast<std::size_t>(std::distance(catalog.entries.begin(), entry));
      row[idx + 1] = t.value;
    }
    rows.push_back(std::move(row));
  }

  Store::Transaction tx(store);
  store.exec("DROP VIEW IF EXISTS " + sql::quote_identifier(joined_view_name(catalog.table_id)));
  store.exec("DROP TABLE IF EXISTS " + sql::quote_identifier(name));
  store.exec(ddl);
  store.insert_rows(name, columns.size() + 1, rows);
  tx.commit();
  return name;
}

JoinedSchema materialize_joined_view(const ContextTable& context, const std::string& inference_table,
                                     Store& store) {
  const auto pk = sql::quote_identifier(context.primary_key.str());
  const auto ctx_name = sql::quote_identifier(context_table_name(context.table_id));
  const auto inf_name = sql::quote_identifier(inference_table);
  if (!store.has_table(context_table_name(context.table_id)))
    throw NotFoundError("context table for '" + context.table_id + "' is not in the store");
  if (!store.has_table(inference_table))
    throw NotFoundError("inference table '" + inference_table + "' is not in the store");

  std::vector<std::string> missing;
  auto only_left = [&](const std::string& a, const std::string& b) {
    auto rs = store.query("SELECT " + pk + " FROM " + a + " EXCEPT SELECT " + pk + " FROM " + b + " ORDER BY 1");
    for (const auto& row : rs.rows) missing.push_back(value_to_text(row[0]));
  };
  only_left(ctx_name, inf_name);
  only_left(inf_name, ctx_name);
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    throw IntegrityError("context and inference key sets differ: " + std::to_string(missing.size()) +
                             " unmatched keys",
                         missing);
  }

  JoinedSchema schema;
  schema.table_id = context.table_id;
  schema.domain_id = context.domain_id;
  schema.view_name = joined_view_name(context.table_id);
  schema.primary_key = context.primary_key;
  for (const auto& c : context.columns)
    schema.columns.push_back(SchemaColumn{c.name, c.kind, ColumnOrigin::context, c.free_text});
  auto info = store.query("SELECT name FROM pragma_table_info(?1) ORDER BY cid", {Value{inference_table}});
  std::set<ColumnName> context_names;
  for (const auto& c : context.columns) context_names.insert(c.name);
  for (std::size_t i = 1; i < info.rows.size(); ++i) {
    auto name = ColumnName::normalize(std::get<std::string>(info.rows[i][0]));
    if (context_names.count(name))
      throw SchemaError("inference column '" + name.str() + "' collides with a context column");
    schema.columns.push_back(SchemaColumn{name, ValueKind::text, ColumnOrigin::inference, false});
  }
  check_width(store, schema.columns.size());

  std::string select;
  for (const auto& c : schema.columns) {
    if (!select.empty()) select += ", ";
    select += (c.origin == ColumnOrigin::context ? "c." : "i.") + sql::quote_identifier(c.name.str());
  }
  Store::Transaction tx(store);
  store.exec("DROP VIEW IF EXISTS " + sql::quote_identifier(schema.view_name));
  store.exec("CREATE VIEW " + sql::quote_identifier(schema.view_name) + " AS SELECT " + select + " FROM " +
             ctx_name + " AS c JOIN " + inf_name + " AS i ON c." + pk + " = i." + pk);
  tx.commit();
  return schema;
}

void save_generated_meta(Store& store, const JoinedSchema& schema, const EnumerationCatalog& catalog) {
  ensure_meta(store);
  auto rs = store.query(std::string("SELECT 1 FROM ") + kMetaTable + " WHERE table_id = ?1",
                        {Value{schema.table_id}});
  if (rs.rows.empty()) throw NotFoundError("unknown table '" + schema.table_id + "'");
  store.query(std::string("UPDATE ") + kMetaTable + " SET joined_schema = ?2, catalog = ?3 WHERE table_id = ?1",
              {Value{schema.table_id}, Value{nlohmann::json(schema).dump()}, Value{nlohmann::json(catalog).dump()}});
}

std::vector<TableEntry> load_registry(const Store& store) {
  std::vector<TableEntry> out;
  if (!store.has_table(kMetaTable)) return out;
  auto rs = store.query(std::string("SELECT table_id, domain_id, joined_schema, catalog FROM ") + kMetaTable +
                        " WHERE joined_schema IS NOT NULL ORDER BY table_id");
  for (const auto& row : rs.rows) {
    TableEntry e;
    e.table_id = std::get<std::string>(row[0]);
    e.domain_id = std::get<std::string>(row[1]);
    e.schema = nlohmann::json::parse(std::get<std::string>(row[2])).get<JoinedSchema>();
    e.catalog = nlohmann::json::parse(std::get<std::string>(row[3])).get<EnumerationCatalog>();
    auto count = store.query("SELECT COUNT(*) FROM " + sql::quote_identifier(e.schema.view_name));
    e.row_count = static_cast<std::size_t>(std::get<double>(count.rows[0][0]));
    out.push_back(std::move(e));
  }
  return out;
}

std::optional<TableEntry> find_table(const Store& store, const std::string& table_id) {
  for (auto& e : load_registry(store))
    if (e.table_id == table_id) return e;
  return std::nullopt;
}

}  // namespace dir
