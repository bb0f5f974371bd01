#include "dir/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dir/agent.hpp"
#include "dir/config.hpp"
#include "dir/discretizer.hpp"
#include "dir/enumerator.hpp"
#include "dir/error.hpp"
#include "dir/eval.hpp"
#include "dir/ingestion.hpp"
#include "dir/pipeline.hpp"
#include "dir/serialize.hpp"
#include "dir/service.hpp"
#include "dir/tablegen.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::optional<std::string> config;
  std::optional<std::string> store;
  std::optional<std::uint64_t> seed;
};

AppConfig effective_config(const GlobalFlags& flags) {
  auto c = load_config(flags.config);
  if (flags.store) c.store_path = *flags.store;
  if (flags.seed) c.seed = *flags.seed;
  return c;
}

Store open_store(const AppConfig& c) {
  auto parent = fs::path(c.store_path).parent_path();
  if (!parent.empty() && c.store_path != ":memory:") fs::create_directories(parent);
  return Store(c.store_path, StoreOptions{c.store_max_columns, false});
}

llm::Gateway make_gateway(const AppConfig& c) { return llm::Gateway(llm::make_transport(c.provider), c.provider); }

std::string artifact_path(const AppConfig& c, const std::string& table, const std::string& suffix) {
  fs::create_directories(c.artifact_dir);
  return (fs::path(c.artifact_dir) / (table + suffix)).string();
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw StoreError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(what + " '" + path + "' not found; run the previous stage first");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(what + " '" + path + "' is not valid JSON: " + e.what());
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path + "'");
  return in;
}

std::string table_id_from_path(const std::string& path) {
  return normalize_column_name(fs::path(path).stem().string()).str();
}

ContextTable load_source(const std::string& path, const std::string& table_id, const std::string& domain,
                         const AppConfig& c) {
  IngestConfig ic;
  ic.primary_key = ColumnName::normalize(c.primary_key);
  ic.declared_text_columns = c.text_columns;
  ic.text_detection_threshold = c.text_detection_threshold;
  ic.min_avg_text_length = c.min_avg_text_length;
  ic.validate();
  auto in = open_input(path);
  return load_context_table(in, source_format_from_path(path), ic, table_id, domain.empty() ? table_id : domain);
}

std::vector<TableEntry> require_tables(const Store& store) {
  auto tables = load_registry(store);
  if (tables.empty()) throw NotFoundError("no generated tables in the store; run the pipeline first");
  return tables;
}

const TableEntry& require_table(const std::vector<TableEntry>& tables, const std::string& id) {
  for (const auto& t : tables)
    if (t.table_id == id) return t;
  throw NotFoundError("unknown table '" + id + "'");
}

}  // namespace

std::string format_rows(const ResultSet& rows) {
  std::string out;
  std::vector<std::string> header;
  for (const auto& c : rows.columns) header.push_back(c.name);
  out += text::join(header, "\t") + "\n";
  for (const auto& row : rows.rows) {
    std::vector<std::string> cells;
    for (const auto& v : row) cells.push_back(is_null(v) ? "NULL" : value_to_text(v));
    out += text::join(cells, "\t") + "\n";
  }
  return out;
}

std::string format_query(const GeneratedQuery& q, const std::optional<ResultSet>& rows) {
  std::string out = "SQL: " + (q.raw_sql.empty() ? std::string("(none)") : sql::render(q.ast)) + "\n";
  out += "Status: " + std::string(to_string(q.report.status)) + "\n";
  for (const auto& i : q.report.issues)
    out += "Issue: " + std::string(to_string(i.kind)) + " at " + i.location + ": " + i.detail + "\n";
  for (const auto& r : q.report.repairs)
    out += "Repair: " + r.location + ": '" + r.before + "' -> '" + r.after + "'\n";
  if (rows) {
    out += "Rows: " + std::to_string(rows->rows.size()) + "\n";
    out += format_rows(*rows);
  }
  return out;
}

int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"dir: discrete information retrieval over free-text catalogs", "dir"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON configuration file (default ./dir.json)");
  app.add_option("--store", flags.store, "SQLite store path (overrides config)");
  app.add_option("--seed", flags.seed, "Seed for corpus and suite generation (overrides config)");

  std::string source, table, domain, primary_key, text_columns;
  auto* ingest = app.add_subcommand("ingest", "Load a CSV/JSONL source into a context table");
  ingest->add_option("source", source, "CSV or JSONL file")->required();
  ingest->add_option("--table", table, "Table id (default: file stem)");
  ingest->add_option("--domain", domain, "Domain id (default: table id)");
  ingest->add_option("--primary-key", primary_key, "Primary key column (overrides config)");
  ingest->add_option("--text-columns", text_columns, "Comma-separated free-text columns (overrides detection)");

  auto* pipeline = app.add_subcommand("pipeline", "ingest, discretize, enumerate and generate in one go");
  pipeline->add_option("source", source, "CSV or JSONL file")->required();
  pipeline->add_option("--table", table, "Table id (default: file stem)");
  pipeline->add_option("--domain", domain, "Domain id (default: table id)");
  pipeline->add_option("--primary-key", primary_key, "Primary key column (overrides config)");
  pipeline->add_option("--text-columns", text_columns, "Comma-separated free-text columns");

  auto* discretize = app.add_subcommand("discretize", "Extract key-value pairs from the table's text columns");
  discretize->add_option("--table", table, "Table id")->required();

  auto* enumerate = app.add_subcommand("enumerate", "Build the enumeration catalog from extractions");
  enumerate->add_option("--table", table, "Table id")->required();

  auto* generate = app.add_subcommand("generate", "Create the inference table and the joined view");
  generate->add_option("--table", table, "Table id")->required();

  std::vector<std::string> question_words;
  bool as_json = false;
  auto* query = app.add_subcommand("query", "Compile a question to SQL and run it");
  query->add_option("--table", table, "Table id (default: routed)");
  query->add_option("question", question_words, "Natural-language question")->required();
  query->add_flag("--json", as_json, "Print the query and rows as JSON");

  std::string session_id;
  auto* chat = app.add_subcommand("chat", "Multi-turn session; one utterance per input line");
  chat->add_option("--session", session_id, "Resume an existing session");

  std::string systems = "dir,like,lexical", suite_path, truth_path, json_out;
  auto* eval = app.add_subcommand("eval", "Recall/precision of dir and the baselines over a suite");
  eval->add_option("--systems", systems, "Comma-separated: dir, like, lexical");
  eval->add_option("--suite", suite_path, "Suite file (JSONL QueryIntent records)")->required();
  eval->add_option("--truth", truth_path, "Ground-truth file (default <artifact_dir>/truth.json)");
  eval->add_option("--json", json_out, "Also write the metrics report to this file");

  std::string host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--host", host, "Bind address (overrides config)");
  serve->add_option("--port", port, "Port (overrides config)");

  std::string out_dir;
  std::size_t rows = 0;
  auto* gen_corpus = app.add_subcommand("gen-corpus", "Write the synthetic corpus, ground truth and lexicon");
  gen_corpus->add_option("--out", out_dir, "Output directory")->required();
  gen_corpus->add_option("--rows", rows, "Rows per domain (overrides config)");

  std::string suite_kind = "direct", suite_out;
  std::size_t count = 50;
  auto* gen_suite = app.add_subcommand("gen-suite", "Write a query suite anchored on the synthetic corpus");
  gen_suite->add_option("--kind", suite_kind, "direct or negation")->check(CLI::IsMember({"direct", "negation"}));
  gen_suite->add_option("--count", count, "Number of intents");
  gen_suite->add_option("--rows", rows, "Rows per domain (overrides config)");
  gen_suite->add_option("--out", suite_out, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    auto config = effective_config(flags);
    if (!primary_key.empty()) config.primary_key = primary_key;
    if (!text_columns.empty()) {
      std::vector<ColumnName> cols;
      for (const auto& c : text::split(text_columns, ',')) cols.push_back(ColumnName::normalize(text::trim(c)));
      config.text_columns = cols;
    }

    if (*ingest) {
      auto id = table.empty() ? table_id_from_path(source) : table;
      auto t = load_source(source, id, domain, config);
      IngestConfig ic;
      ic.primary_key = t.primary_key;
      ic.declared_text_columns = config.text_columns;
      ic.text_detection_threshold = config.text_detection_threshold;
      ic.min_avg_text_length = config.min_avg_text_length;
      auto cols = collect_text_fields(t, ic);
      t = mark_text_columns(std::move(t), cols);
      auto store = open_store(config);
      write_context_table(t, store);
      for (const auto& w : t.warnings) err << "warning: " << w << "\n";
      std::vector<std::string> names;
      for (const auto& c : cols) names.push_back(c.str());
      out << "Ingested " << t.table_id << ": " << t.rows.size() << " rows, " << t.columns.size()
          << " columns; text columns: " << (names.empty() ? "(none)" : text::join(names, ", ")) << "\n";
      return 0;
    }

    if (*pipeline) {
      auto id = table.empty() ? table_id_from_path(source) : table;
      auto t = load_source(source, id, domain, config);
      auto store = open_store(config);
      auto gateway = make_gateway(config);
      auto options = config.pipeline_options();
      std::ofstream failures(artifact_path(config, id, ".failures.log"));
      options.discretize.on_failure = [&](const FailureRecord& r) { failures << to_log_line(r) << "\n"; };
      auto result = run_pipeline(std::move(t), options, gateway, store);
      write_json_file(artifact_path(config, id, ".extractions.json"), result.extractions);
      write_json_file(artifact_path(config, id, ".catalog.json"), result.catalog);
      out << "Generated " << result.schema.view_name << ": " << result.context.rows.size() << " rows, "
          << result.schema.columns.size() << " columns (" << result.catalog.entries.size() << " inferred)\n";
      return 0;
    }

    if (*discretize) {
      auto store = open_store(config);
      auto t = read_context_table(store, table);
      auto gateway = make_gateway(config);
      DiscretizeOptions options;
      options.parallelism = config.parallelism;
      std::size_t failed = 0;
      std::ofstream failures(artifact_path(config, table, ".failures.log"));
      options.on_failure = [&](const FailureRecord& r) {
        ++failed;
        failures << to_log_line(r) << "\n";
      };
      auto set = discretize_table(t, t.text_columns(), config.cap_policy.mandatory_keys, gateway,
                                  config.discretize_template(), options);
      for (const auto& w : set.warnings) err << "warning: " << w << "\n";
      write_json_file(artifact_path(config, table, ".extractions.json"), set);
      out << "Discretized " << set.per_row.size() << " rows of " << table << " (" << failed << " failed)\n";
      return 0;
    }

    if (*enumerate) {
      auto set = read_json_file(artifact_path(config, table, ".extractions.json"), "extractions")
                     .get<ExtractionSet>();
      auto catalog = build_catalog(set, config.cap_policy);
      write_json_file(artifact_path(config, table, ".catalog.json"), catalog);
      out << "Catalog for " << table << ": " << catalog.entries.size() << " columns kept, "
          << catalog.dropped.size() << " dropped\n";
      for (const auto& d : catalog.dropped) out << "  dropped " << d.name.str() << " (" << d.reason << ")\n";
      return 0;
    }

    if (*generate) {
      auto set = read_json_file(artifact_path(config, table, ".extractions.json"), "extractions")
                     .get<ExtractionSet>();
      auto catalog = read_json_file(artifact_path(config, table, ".catalog.json"), "catalog")
                         .get<EnumerationCatalog>();
      auto store = open_store(config);
      auto context = read_context_table(store, table);
      auto inference = generate_inference_table(catalog, set, context.primary_key, store);
      auto schema = materialize_joined_view(context, inference, store);
      save_generated_meta(store, schema, catalog);
      out << "Generated " << schema.view_name << ": " << context.rows.size() << " rows, " << schema.columns.size()
          << " columns (" << catalog.entries.size() << " inferred)\n";
      return 0;
    }

    if (*query) {
      const auto question = text::join(question_words, " ");
      auto store = open_store(config);
      auto tables = require_tables(store);
      auto id = table.empty() ? route_table(question, tables).table_id : table;
      const auto& entry = require_table(tables, id);
      auto gateway = make_gateway(config);
      auto q = text_to_sql(question, entry.schema, entry.catalog, DialogState{entry.table_id, {}}, gateway,
                           config.text2sql_options());
      std::optional<ResultSet> rows;
      if (q.executable()) rows = execute(q, entry.schema, store);
      if (as_json) {
        out << nlohmann::json{{"table_id", entry.table_id},
                              {"query", q},
                              {"rows", rows ? nlohmann::json(*rows) : nlohmann::json(nullptr)}}
                   .dump(2)
            << "\n";
      } else {
        out << "Table: " << entry.table_id << "\n" << format_query(q, rows);
      }
      return q.executable() ? 0 : 1;
    }

    if (*chat) {
      auto store = open_store(config);
      auto gateway = make_gateway(config);
      AgentEngine engine{store, require_tables(store), gateway, config.agent,
                         config.text2sql_options()};
      SessionStore sessions(config.session_dir);
      Session session = session_id.empty() ? sessions.create() : sessions.load(session_id);
      out << "Session " << session.session_id << "\n";
      std::string line;
      while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        auto turn = step(session, line, engine);
        sessions.append(session, turn);
        out << format_turn(turn) << std::flush;
      }
      return 0;
    }

    if (*eval) {
      auto suite_in = open_input(suite_path);
      auto suite = load_suite(suite_in);
      auto truth_file = truth_path.empty() ? (fs::path(config.artifact_dir) / "truth.json").string() : truth_path;
      auto truth_in = open_input(truth_file);
      auto truth = load_ground_truth(truth_in);
      auto store = open_store(config);
      auto tables = require_tables(store);
      std::vector<ContextTable> contexts;
      for (const auto& t : tables) contexts.push_back(read_context_table(store, t.table_id));
      auto gateway = make_gateway(config);
      EvalInputs inputs{store, tables, contexts, truth, &gateway};
      std::vector<EvalReport> reports;
      for (const auto& s : text::split(systems, ','))
        reports.push_back(evaluate(eval_system_from_string(text::trim(s)), suite, inputs));
      out << format_report_table(reports);
      if (!json_out.empty()) write_json_file(json_out, nlohmann::json{{"reports", reports}});
      return 0;
    }

    if (*serve) {
      Service service(config);
      int bound = service.bind(host.empty() ? config.host : host, port < 0 ? config.port : port);
      out << "listening on http://" << (host.empty() ? config.host : host) << ":" << bound << std::endl;
      service.listen();
      return 0;
    }

    if (*gen_corpus) {
      auto spec = builtin_corpus_spec(rows ? rows : config.rows_per_domain, config.seed);
      auto corpus = generate_corpus(spec);
      fs::create_directories(out_dir);
      for (const auto& t : corpus.tables) {
        std::ofstream f(fs::path(out_dir) / (t.table_id + ".csv"), std::ios::binary);
        write_context_csv(f, t);
      }
      {
        std::ofstream f(fs::path(out_dir) / "truth.json");
        save_ground_truth(f, corpus.truth);
      }
      {
        std::ofstream f(fs::path(out_dir) / "lexicon.json");
        llm::save_lexicon(f, oracle_lexicon(spec));
      }
      out << "Wrote " << corpus.tables.size() << " tables of " << spec.rows_per_domain << " rows to " << out_dir
          << "\n";
      return 0;
    }

    if (*gen_suite) {
      auto spec = builtin_corpus_spec(rows ? rows : config.rows_per_domain, config.seed);
      auto corpus = generate_corpus(spec);
      auto suite = generate_suite(spec, corpus,
                                  suite_kind == "direct" ? SuiteKind::direct : SuiteKind::negation_paraphrase,
                                  count, config.seed);
      if (suite_out.empty()) {
        save_suite(out, suite);
      } else {
        std::ofstream f(suite_out);
        save_suite(f, suite);
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return is_user_error(e.kind()) ? 1 : 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dir
