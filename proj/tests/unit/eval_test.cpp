#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "dir/error.hpp"
#include "dir/eval.hpp"
#include "dir/text_util.hpp"
#include "fixture.hpp"

using namespace dir;

TEST(Corpus, ThreeDomainsOfRequestedSize) {
  auto spec = builtin_corpus_spec(400, 7);
  auto corpus = generate_corpus(spec);
  ASSERT_EQ(corpus.tables.size(), 3u);
  std::size_t total = 0;
  for (const auto& t : corpus.tables) {
    total += t.rows.size();
    EXPECT_EQ(corpus.truth.at(t.table_id).size(), 400u);
  }
  EXPECT_EQ(total, 1200u);
  EXPECT_EQ(corpus.tables[0].table_id, "backpacks");
  EXPECT_EQ(corpus.tables[0].key_of(corpus.tables[0].rows[0]), "bp-0001");
}

TEST(Corpus, DescriptionsMentionEveryAttribute) {
  auto spec = builtin_corpus_spec(50, 7);
  auto corpus = generate_corpus(spec);
  auto lexicon = oracle_lexicon(spec);
  for (std::size_t d = 0; d < spec.domains.size(); ++d) {
    const auto& t = corpus.tables[d];
    const auto idx = *t.column_index(normalize_column_name("description"));
    for (const auto& row : t.rows) {
      auto text = text::to_lower(std::get<std::string>(row[idx]));
      const auto& truth = corpus.truth.at(t.table_id).at(t.key_of(row));
      for (const auto& a : spec.domains[d].attributes) {
        const auto& value = std::get<std::string>(truth.at(a.name));
        bool found = std::any_of(lexicon.begin(), lexicon.end(), [&](const llm::LexiconEntry& e) {
          return e.value == value && text.find(text::to_lower(e.phrase)) != std::string::npos;
        });
        EXPECT_TRUE(found) << t.key_of(row) << " " << a.name;
      }
    }
  }
}

TEST(Corpus, ZeroRowsAndDeterminism) {
  auto empty = generate_corpus(builtin_corpus_spec(0, 7));
  for (const auto& t : empty.tables) EXPECT_TRUE(t.rows.empty());
  auto a = generate_corpus(builtin_corpus_spec(40, 9));
  auto b = generate_corpus(builtin_corpus_spec(40, 9));
  auto c = generate_corpus(builtin_corpus_spec(40, 10));
  EXPECT_EQ(a.tables[0].rows, b.tables[0].rows);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_NE(a.tables[0].rows, c.tables[0].rows);
}

TEST(Corpus, SpecValidation) {
  auto spec = builtin_corpus_spec(10, 7);
  spec.domains[0].attributes[0].phrasings[0].pattern = "no placeholder";
  EXPECT_THROW(spec.validate(), SpecError);
}

namespace {

GroundTruth tiny_truth() {
  GroundTruth t;
  t["backpacks"]["a"] = {{"color", Literal{std::string("black")}}, {"price", Literal{100.0}}};
  t["backpacks"]["b"] = {{"color", Literal{std::string("red")}}, {"price", Literal{300.0}}};
  t["backpacks"]["c"] = {{"color", Literal{std::string("blue")}}, {"price", Literal{500.0}}};
  return t;
}

}  // namespace

TEST(OracleAnswer, ExhaustiveFilter) {
  auto truth = tiny_truth();
  QueryIntent q;
  q.domain = "backpacks";
  q.constraints = {{"color", CompareOp::neq, {Literal{std::string("black")}}}, {"price", CompareOp::lt, {Literal{400.0}}}};
  EXPECT_EQ(oracle_answer(q, truth), (std::set<std::string>{"b"}));
  q.constraints = {{"color", CompareOp::in, {Literal{std::string("black")}, Literal{std::string("blue")}}}};
  EXPECT_EQ(oracle_answer(q, truth), (std::set<std::string>{"a", "c"}));
  q.constraints = {{"material", CompareOp::eq, {Literal{std::string("nylon")}}}};
  EXPECT_TRUE(oracle_answer(q, truth).empty());
  q.constraints.clear();
  EXPECT_EQ(oracle_answer(q, truth).size(), 3u);
  q.domain = "boats";
  EXPECT_TRUE(oracle_answer(q, truth).empty());
}

TEST(Metrics, Definitions) {
  std::set<std::string> truth{"a", "b", "c", "d"}, returned{"a", "b", "x"};
  EXPECT_DOUBLE_EQ(recall_of(returned, truth), 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(precision_of(returned, truth), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(recall_of({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(precision_of({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(precision_of({}, truth), 0.0);
  EXPECT_DOUBLE_EQ(recall_of(truth, truth), 1.0);
}

TEST(Metrics, BoundedOnRandomSets) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 200; ++i) {
    std::set<std::string> a, b;
    for (int k = 0; k < 10; ++k) {
      if (rng() % 2) a.insert(std::to_string(k));
      if (rng() % 2) b.insert(std::to_string(k));
    }
    for (double v : {recall_of(a, b), precision_of(a, b)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Suite, ShapesAndDescriptions) {
  auto spec = builtin_corpus_spec(400, 7);
  auto corpus = generate_corpus(spec);
  auto direct = generate_suite(spec, corpus, SuiteKind::direct, 50, 7);
  ASSERT_EQ(direct.size(), 50u);
  for (std::size_t k = 0; k < direct.size(); ++k) {
    EXPECT_EQ(direct[k].domain, spec.domains[k % 3].domain_id);
    EXPECT_FALSE(oracle_answer(direct[k], corpus.truth).empty()) << direct[k].description;
    if (k % 10 == 9) {
      EXPECT_EQ(direct[k].kind, "exploratory");
      EXPECT_EQ(direct[k].description.rfind("I need a ", 0), 0u);
    } else {
      EXPECT_EQ(direct[k].description.rfind("Show me ", 0), 0u);
    }
  }
  auto negation = generate_suite(spec, corpus, SuiteKind::negation_paraphrase, 30, 7);
  ASSERT_EQ(negation.size(), 30u);
  for (const auto& q : negation) EXPECT_FALSE(oracle_answer(q, corpus.truth).empty()) << q.description;
  EXPECT_EQ(generate_suite(spec, corpus, SuiteKind::direct, 50, 7), direct);
}

TEST(Suite, SaveLoadRoundTrip) {
  auto spec = builtin_corpus_spec(30, 7);
  auto corpus = generate_corpus(spec);
  auto suite = generate_suite(spec, corpus, SuiteKind::negation_paraphrase, 12, 3);
  std::stringstream ss;
  save_suite(ss, suite);
  EXPECT_EQ(load_suite(ss), suite);
  std::stringstream ts;
  save_ground_truth(ts, corpus.truth);
  EXPECT_EQ(load_ground_truth(ts), corpus.truth);
}

TEST(Suite, FixtureFilesMatchGenerator) {
  auto spec = builtin_corpus_spec(400, 7);
  auto corpus = generate_corpus(spec);
  std::istringstream direct(testkit::read_file(DIR_SOURCE_DIR "/tests/fixtures/direct_suite.jsonl"));
  EXPECT_EQ(load_suite(direct), generate_suite(spec, corpus, SuiteKind::direct, 50, 7));
  std::istringstream negation(testkit::read_file(DIR_SOURCE_DIR "/tests/fixtures/negation_suite.jsonl"));
  EXPECT_EQ(load_suite(negation), generate_suite(spec, corpus, SuiteKind::negation_paraphrase, 30, 7));
}

TEST(Evaluate, EmptySuiteHasNoMacros) {
  auto fx = testkit::build_corpus_fixture(10, 7);
  auto report = evaluate(EvalSystem::like_baseline, {}, fx->inputs());
  EXPECT_TRUE(report.per_query.empty());
  EXPECT_FALSE(report.macro_recall);
  EXPECT_FALSE(report.macro_precision);
}

TEST(Evaluate, MacroIsMeanAndPermutationInvariant) {
  auto fx = testkit::build_corpus_fixture(60, 7);
  auto suite = generate_suite(fx->spec, fx->corpus, SuiteKind::negation_paraphrase, 12, 5);
  auto report = evaluate(EvalSystem::lexical_baseline, suite, fx->inputs());
  double r = 0, p = 0;
  for (const auto& m : report.per_query) {
    r += m.recall;
    p += m.precision;
    EXPECT_DOUBLE_EQ(m.recall, m.truth ? static_cast<double>(m.hits) / m.truth : 1.0);
  }
  EXPECT_DOUBLE_EQ(*report.macro_recall, r / 12);
  EXPECT_DOUBLE_EQ(*report.macro_precision, p / 12);
  std::reverse(suite.begin(), suite.end());
  auto reversed = evaluate(EvalSystem::lexical_baseline, suite, fx->inputs());
  EXPECT_NEAR(*reversed.macro_recall, *report.macro_recall, 1e-12);
  EXPECT_NEAR(*reversed.macro_precision, *report.macro_precision, 1e-12);
}

TEST(Evaluate, DirNeedsGateway) {
  auto fx = testkit::build_corpus_fixture(10, 7);
  auto inputs = fx->inputs();
  inputs.gateway = nullptr;
  QueryIntent q;
  q.domain = "backpacks";
  q.description = "I need a backpack";
  EXPECT_THROW(dir_answer(q, inputs), PreconditionError);
  EXPECT_THROW(eval_system_from_string("bm25"), ConfigError);
  EXPECT_EQ(eval_system_from_string("like"), EvalSystem::like_baseline);
}
