#pragma once

#include <optional>
#include <vector>

#include "dir/discretizer.hpp"
#include "dir/enumerator.hpp"
#include "dir/ingestion.hpp"
#include "dir/llm.hpp"
#include "dir/model.hpp"
#include "dir/store.hpp"

namespace dir {

struct PipelineOptions {
  std::optional<std::vector<ColumnName>> text_columns;
  double text_detection_threshold = 0.5;
  std::size_t min_avg_text_length = 40;
  CapPolicy cap_policy;
  llm::PromptTemplate discretize_template = llm::default_discretize_template();
  DiscretizeOptions discretize;
};

struct PipelineResult {
  ContextTable context;
  ExtractionSet extractions;
  EnumerationCatalog catalog;
  JoinedSchema schema;
};

// Collect -> write context -> discretize -> enumerate/consolidate/cap ->
// inference table -> joined view -> registry metadata.
PipelineResult run_pipeline(ContextTable table, const PipelineOptions& options, const llm::Gateway& gateway,
                            Store& store);

}  // namespace dir
