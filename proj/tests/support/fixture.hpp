#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "dir/enumerator.hpp"
#include "dir/eval.hpp"
#include "dir/llm.hpp"
#include "dir/model.hpp"
#include "dir/pipeline.hpp"
#include "dir/store.hpp"
#include "dir/tablegen.hpp"

namespace dir::testkit {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const noexcept { return path_; }
  std::string file(const std::string& name) const;

 private:
  std::string path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Gateway over the mock transport.
llm::Gateway mock_gateway(std::vector<llm::LexiconEntry> lexicon = {});

// Built-in corpus pushed through the pipeline with the oracle lexicon.
struct CorpusFixture {
  CorpusSpec spec;
  Corpus corpus;
  Store store;
  llm::Gateway gateway;
  std::vector<PipelineResult> results;
  std::vector<TableEntry> tables;
  std::vector<ContextTable> contexts;

  const TableEntry& table(const std::string& id) const;
  EvalInputs inputs() const;
};

PipelineOptions corpus_pipeline_options();

// `store_path` empty means an in-memory store.
std::unique_ptr<CorpusFixture> build_corpus_fixture(std::size_t rows_per_domain, std::uint64_t seed,
                                                    const std::string& store_path = {});

// Small table of backpacks with a description column, rows given as
// (id, title, price, description).
ContextTable small_backpack_table(const std::vector<std::tuple<std::string, std::string, double, std::string>>& rows);

}  // namespace dir::testkit
