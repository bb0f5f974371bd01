#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dir/model.hpp"
#include "dir/store.hpp"

namespace dir {

// Creates "<table_id>__context" with typed columns and inserts the rows in
// input order, replacing any previous copy. Also records the schema in the
// store's metadata table.
void write_context_table(const ContextTable& table, Store& store);
// Reads a context table previously written with write_context_table.
ContextTable read_context_table(const Store& store, const std::string& table_id);

// Creates "<table_id>__inference": the primary key plus one text column per
// catalog entry, one row per extracted row in primary-key order. Checks the
// store's column limit before any DDL runs.
std::string generate_inference_table(const EnumerationCatalog& catalog, const ExtractionSet& extractions,
                                     const ColumnName& primary_key, Store& store);

// Creates "<table_id>__joined" over the context and inference tables.
// Throws IntegrityError when the two key sets differ.
JoinedSchema materialize_joined_view(const ContextTable& context, const std::string& inference_table,
                                     Store& store);

struct TableEntry {
  std::string table_id;
  std::string domain_id;
  JoinedSchema schema;
  EnumerationCatalog catalog;
  std::size_t row_count = 0;
};

void save_generated_meta(Store& store, const JoinedSchema& schema, const EnumerationCatalog& catalog);
// Tables with a materialized view, ordered by table id.
std::vector<TableEntry> load_registry(const Store& store);
std::optional<TableEntry> find_table(const Store& store, const std::string& table_id);

}  // namespace dir
