#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dir/llm.hpp"
#include "dir/model.hpp"
#include "dir/store.hpp"
#include "dir/tablegen.hpp"

namespace dir {

struct AttributeValue {
  std::string canonical;
  // Spellings used in descriptions; the canonical form is always one of them.
  std::vector<std::string> surfaces;
};

struct Phrasing {
  // Contains "{v}".
  std::string pattern;
  // Key the extractor reports for this phrasing, when it differs from the
  // attribute name (synonymous keys such as no_of_pockets).
  std::string key;
};

struct AttributeSpec {
  std::string name;
  std::vector<AttributeValue> values;
  std::vector<Phrasing> phrasings;
  // Negation and paraphrase queries target these.
  bool has_distractors = false;
  bool paraphrased = false;
  bool queryable = true;
};

struct DomainSpec {
  std::string domain_id;
  std::string id_prefix;
  std::string title_noun;
  std::vector<AttributeSpec> attributes;
  // Sentences that mention attribute values without asserting them.
  std::vector<std::string> distractors;
  int price_min = 20;
  int price_max = 600;
};

struct CorpusSpec {
  std::vector<DomainSpec> domains;
  std::size_t rows_per_domain = 400;
  std::uint64_t seed = 7;

  // Throws SpecError.
  void validate() const;
};

// backpacks, perfumes and watches.
CorpusSpec builtin_corpus_spec(std::size_t rows_per_domain = 400, std::uint64_t seed = 7);

// table id -> primary key -> attribute -> value (structured columns included).
using GroundTruthRow = std::map<std::string, Literal>;
using GroundTruth = std::map<std::string, std::map<std::string, GroundTruthRow>>;

struct Corpus {
  std::vector<ContextTable> tables;
  GroundTruth truth;
};

Corpus generate_corpus(const CorpusSpec& spec);

// Lossless lexicon for the mock provider: every rendered phrase maps to the
// (key, canonical value) it asserts.
std::vector<llm::LexiconEntry> oracle_lexicon(const CorpusSpec& spec);

struct IntentConstraint {
  std::string column;
  CompareOp op = CompareOp::eq;
  std::vector<Literal> values;

  friend bool operator==(const IntentConstraint&, const IntentConstraint&) = default;
};

struct QueryIntent {
  std::string description;
  std::vector<IntentConstraint> constraints;
  std::string kind = "direct";  // or "exploratory"
  std::string domain;           // table id

  friend bool operator==(const QueryIntent&, const QueryIntent&) = default;
};

enum class SuiteKind { direct, negation_paraphrase };

// Intents anchored on sampled rows, so every truth set is non-empty.
std::vector<QueryIntent> generate_suite(const CorpusSpec& spec, const Corpus& corpus, SuiteKind kind,
                                        std::size_t count, std::uint64_t seed);

std::vector<QueryIntent> load_suite(std::istream& in);
void save_suite(std::ostream& out, const std::vector<QueryIntent>& suite);

void save_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth load_ground_truth(std::istream& in);

// Exhaustive filter over the ground truth; no SQL, no model.
std::set<std::string> oracle_answer(const QueryIntent& intent, const GroundTruth& truth);

enum class EvalSystem { dir, like_baseline, lexical_baseline };

std::string_view to_string(EvalSystem system);
// Accepts "dir", "like", "like_baseline", "lexical", "lexical_baseline".
EvalSystem eval_system_from_string(std::string_view s);

struct QueryMetrics {
  std::string description;
  double recall = 0;
  double precision = 0;
  std::size_t returned = 0;
  std::size_t truth = 0;
  std::size_t hits = 0;
};

struct EvalReport {
  std::string system;
  std::vector<QueryMetrics> per_query;
  // Absent for an empty suite.
  std::optional<double> macro_recall;
  std::optional<double> macro_precision;
};

double recall_of(const std::set<std::string>& returned, const std::set<std::string>& truth);
double precision_of(const std::set<std::string>& returned, const std::set<std::string>& truth);

struct EvalInputs {
  const Store& store;
  std::vector<TableEntry> tables;
  std::vector<ContextTable> contexts;
  const GroundTruth& truth;
  const llm::Gateway* gateway = nullptr;  // required for the dir system
};

// Row keys each system returns for one intent.
std::set<std::string> dir_answer(const QueryIntent& intent, const EvalInputs& inputs);
std::set<std::string> like_baseline_answer(const QueryIntent& intent, const EvalInputs& inputs);
std::set<std::string> lexical_baseline_answer(const QueryIntent& intent, const EvalInputs& inputs,
                                              std::size_t k);

EvalReport evaluate(EvalSystem system, const std::vector<QueryIntent>& suite, const EvalInputs& inputs);

std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace dir
