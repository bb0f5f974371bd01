#include "dir/pipeline.hpp"

#include "dir/tablegen.hpp"

namespace dir {

PipelineResult run_pipeline(ContextTable table, const PipelineOptions& options, const llm::Gateway& gateway,
                            Store& store) {
  options.cap_policy.validate();
  IngestConfig ingest;
  ingest.primary_key = table.primary_key;
  ingest.declared_text_columns = options.text_columns;
  ingest.text_detection_threshold = options.text_detection_threshold;
  ingest.min_avg_text_length = options.min_avg_text_length;
  ingest.validate();

  PipelineResult out;
  const auto text_cols = collect_text_fields(table, ingest);
  out.context = mark_text_columns(std::move(table), text_cols);
  write_context_table(out.context, store);
  out.extractions = discretize_table(out.context, text_cols, options.cap_policy.mandatory_keys, gateway,
                                     options.discretize_template, options.discretize);
  out.catalog = build_catalog(out.extractions, options.cap_policy);
  auto inference = generate_inference_table(out.catalog, out.extractions, out.context.primary_key, store);
  out.schema = materialize_joined_view(out.context, inference, store);
  save_generated_meta(store, out.schema, out.catalog);
  return out;
}

}  // namespace dir
