#include "fixture.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dir::testkit {

namespace fs = std::filesystem;

TempDir::TempDir() {
  auto pattern = (fs::temp_directory_path() / "dir-test-XXXXXX").string();
  std::vector<char> buf(pattern.begin(), pattern.end());
  buf.push_back('\0');
  if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
  path_ = buf.data();
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string TempDir::file(const std::string& name) const { return (fs::path(path_) / name).string(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path);
}

llm::Gateway mock_gateway(std::vector<llm::LexiconEntry> lexicon) {
  return llm::Gateway(std::make_shared<llm::MockTransport>(std::move(lexicon)), llm::ProviderConfig{});
}

const TableEntry& CorpusFixture::table(const std::string& id) const {
  for (const auto& t : tables)
    if (t.table_id == id) return t;
  throw std::runtime_error("no table " + id);
}

EvalInputs CorpusFixture::inputs() const { return EvalInputs{store, tables, contexts, corpus.truth, &gateway}; }

PipelineOptions corpus_pipeline_options() {
  PipelineOptions options;
  options.text_columns = std::vector<ColumnName>{ColumnName::normalize("description")};
  options.cap_policy.mandatory_keys = {ColumnName::normalize("product_type")};
  return options;
}

std::unique_ptr<CorpusFixture> build_corpus_fixture(std::size_t rows_per_domain, std::uint64_t seed,
                                                    const std::string& store_path) {
  auto spec = builtin_corpus_spec(rows_per_domain, seed);
  auto corpus = generate_corpus(spec);
  auto lexicon = oracle_lexicon(spec);
  auto fx = std::unique_ptr<CorpusFixture>(new CorpusFixture{
      spec, corpus, store_path.empty() ? Store::in_memory() : Store(store_path), mock_gateway(lexicon), {}, {}, {}});
  const auto options = corpus_pipeline_options();
  for (const auto& t : fx->corpus.tables) fx->results.push_back(run_pipeline(t, options, fx->gateway, fx->store));
  fx->tables = load_registry(fx->store);
  for (const auto& r : fx->results) fx->contexts.push_back(r.context);
  return fx;
}

ContextTable small_backpack_table(
    const std::vector<std::tuple<std::string, std::string, double, std::string>>& rows) {
  ContextTable t;
  t.table_id = "backpacks";
  t.domain_id = "backpacks";
  t.primary_key = ColumnName::normalize("product_id");
  t.columns = {{ColumnName::normalize("product_id"), ValueKind::text, false},
               {ColumnName::normalize("title"), ValueKind::text, false},
               {ColumnName::normalize("price"), ValueKind::number, false},
               {ColumnName::normalize("description"), ValueKind::text, true}};
  for (const auto& [id, title, price, description] : rows)
    t.rows.push_back(Row{Value{id}, Value{title}, Value{price}, Value{description}});
  return t;
}

}  // namespace dir::testkit
