#include <gtest/gtest.h>

#include <algorithm>

#include "dir/discretizer.hpp"
#include "dir/error.hpp"
#include "fixture.hpp"

using namespace dir;

namespace {

ColumnName col(const char* s) { return normalize_column_name(s); }

std::vector<llm::LexiconEntry> small_lexicon() {
  return {{"15 liter", col("product_size"), "15 liter"},
          {"22 liter", col("product_size"), "22 liter"},
          {"strap", col("handle_type"), "strap"},
          {"backpack", col("product_type"), "backpack"},
          {"black", col("color"), "black"}};
}

class ReplyTransport : public llm::Transport {
 public:
  explicit ReplyTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string send(std::string_view prompt, const llm::ProviderConfig&) override {
    prompts.emplace_back(prompt);
    return replies_.at(std::min(prompts.size(), replies_.size()) - 1);
  }
  std::vector<std::string> prompts;

 private:
  std::vector<std::string> replies_;
};

}  // namespace

TEST(ParseExtraction, WorkedExamplePairs) {
  auto p = parse_extraction(R"([["product_size","15 liter"],["handle_type","strap"]])");
  EXPECT_EQ(p.tuples, (std::vector<KeyValueTuple>{{col("product_size"), "15 liter"}, {col("handle_type"), "strap"}}));
  EXPECT_TRUE(p.warnings.empty());
}

TEST(ParseExtraction, EmptyArray) { EXPECT_TRUE(parse_extraction("[]").tuples.empty()); }

TEST(ParseExtraction, LastWriteWinsPerKey) {
  auto p = parse_extraction(R"([["color","Black"],["color","navy"]])");
  EXPECT_EQ(p.tuples, (std::vector<KeyValueTuple>{{col("color"), "navy"}}));
}

TEST(ParseExtraction, NormalizesKeysAndValues) {
  auto p = parse_extraction(R"(Sure! [["Product Size", "  15 Liter "], ["Pockets", 3]] hope that helps)");
  EXPECT_EQ(p.tuples, (std::vector<KeyValueTuple>{{col("product_size"), "15 liter"}, {col("pockets"), "3"}}));
}

TEST(ParseExtraction, DropsMalformedEntriesOneByOne) {
  auto p = parse_extraction(R"([["a","1"], "loose", ["b"], ["c", {"x":1}], ["!!", "2"], ["d", "  "], ["e","5"]])");
  EXPECT_EQ(p.tuples, (std::vector<KeyValueTuple>{{col("a"), "1"}, {col("e"), "5"}}));
  EXPECT_EQ(p.warnings.size(), 5u);
}

TEST(ParseExtraction, NoArrayIsExtractionParseError) {
  EXPECT_THROW(parse_extraction("I could not find anything."), ExtractionParseError);
  EXPECT_THROW(parse_extraction("[unclosed"), ExtractionParseError);
}

TEST(DiscretizeRow, LexiconMockFindsSize) {
  auto g = testkit::mock_gateway(small_lexicon());
  auto out = discretize_row("Durable backpack with 15 liter capacity and a padded strap.", {col("product_type")}, g,
                            llm::default_discretize_template());
  EXPECT_NE(std::find(out.tuples.begin(), out.tuples.end(), KeyValueTuple{col("product_size"), "15 liter"}),
            out.tuples.end());
  EXPECT_TRUE(out.unextracted.empty());
  EXPECT_EQ(out.attempts, 1);
}

TEST(DiscretizeRow, EmptyTextViolatesPrecondition) {
  auto g = testkit::mock_gateway(small_lexicon());
  EXPECT_THROW(discretize_row("   ", {}, g, llm::default_discretize_template()), PreconditionError);
}

TEST(DiscretizeRow, MissingMandatoryKeyRetriedThenRecorded) {
  auto transport = std::make_shared<llm::MockTransport>(std::vector<llm::LexiconEntry>{});
  llm::Gateway g(transport, llm::ProviderConfig{});
  auto out = discretize_row("A sturdy thing with no category cue.", {col("product_type")}, g,
                            llm::default_discretize_template());
  EXPECT_EQ(out.attempts, 2);
  EXPECT_EQ(transport->calls(), 2u);
  EXPECT_EQ(out.unextracted, std::vector<ColumnName>{col("product_type")});
}

TEST(DiscretizeRow, RetryCarriesReinforcementAndMerges) {
  auto transport = std::make_shared<ReplyTransport>(
      std::vector<std::string>{R"([["color","black"]])", R"([["product_type","backpack"]])"});
  llm::Gateway g(transport, llm::ProviderConfig{});
  auto out = discretize_row("text", {col("product_type")}, g, llm::default_discretize_template());
  ASSERT_EQ(transport->prompts.size(), 2u);
  EXPECT_EQ(transport->prompts[0].find("left out required keys"), std::string::npos);
  EXPECT_NE(transport->prompts[1].find("left out required keys: product_type"), std::string::npos);
  EXPECT_EQ(out.tuples,
            (std::vector<KeyValueTuple>{{col("color"), "black"}, {col("product_type"), "backpack"}}));
  EXPECT_TRUE(out.unextracted.empty());
}

TEST(DiscretizeRow, UnparseableTwiceThrows) {
  auto transport = std::make_shared<ReplyTransport>(std::vector<std::string>{"nope"});
  llm::Gateway g(transport, llm::ProviderConfig{});
  EXPECT_THROW(discretize_row("text", {}, g, llm::default_discretize_template()), ExtractionParseError);
}

namespace {

ContextTable three_rows() {
  return testkit::small_backpack_table({{"p1", "Trail", 120, "A backpack with 15 liter space and a strap."},
                                        {"p2", "City", 80, "Black backpack, 22 liter."},
                                        {"p3", "Tote", 60, "A roomy bag."}});
}

}  // namespace

TEST(DiscretizeTable, OneEntryPerRow) {
  auto g = testkit::mock_gateway(small_lexicon());
  auto set = discretize_table(three_rows(), {col("description")}, {col("product_type")}, g,
                              llm::default_discretize_template());
  ASSERT_EQ(set.per_row.size(), 3u);
  EXPECT_EQ(set.per_row.at("p1").tuples,
            (std::vector<KeyValueTuple>{{col("product_type"), "backpack"},
                                        {col("product_size"), "15 liter"},
                                        {col("handle_type"), "strap"}}));
  EXPECT_EQ(set.per_row.at("p3").unextracted, std::vector<ColumnName>{col("product_type")});
  EXPECT_FALSE(set.per_row.at("p3").failed);
}

TEST(DiscretizeTable, EmptyTable) {
  auto g = testkit::mock_gateway(small_lexicon());
  auto set = discretize_table(testkit::small_backpack_table({}), {col("description")}, {}, g,
                              llm::default_discretize_template());
  EXPECT_TRUE(set.per_row.empty());
}

TEST(DiscretizeTable, RowOrderAndParallelismDoNotMatter) {
  auto g = testkit::mock_gateway(small_lexicon());
  auto t = three_rows();
  auto forward = discretize_table(t, {col("description")}, {col("product_type")}, g, llm::default_discretize_template());
  std::reverse(t.rows.begin(), t.rows.end());
  auto reversed = discretize_table(t, {col("description")}, {col("product_type")}, g, llm::default_discretize_template());
  DiscretizeOptions parallel;
  parallel.parallelism = 3;
  auto threaded =
      discretize_table(t, {col("description")}, {col("product_type")}, g, llm::default_discretize_template(), parallel);
  EXPECT_EQ(forward, reversed);
  EXPECT_EQ(forward, threaded);
}

TEST(DiscretizeTable, FailedRowsAreIsolatedAndLogged) {
  auto transport = std::make_shared<ReplyTransport>(std::vector<std::string>{"not an array"});
  llm::Gateway g(transport, llm::ProviderConfig{});
  std::vector<FailureRecord> failures;
  DiscretizeOptions options;
  options.on_failure = [&](const FailureRecord& r) { failures.push_back(r); };
  auto set = discretize_table(three_rows(), {col("description")}, {}, g, llm::default_discretize_template(), options);
  ASSERT_EQ(set.per_row.size(), 3u);
  for (const auto& [k, row] : set.per_row) {
    EXPECT_TRUE(row.failed) << k;
    EXPECT_TRUE(row.tuples.empty());
  }
  ASSERT_EQ(failures.size(), 3u);
  EXPECT_EQ(failures[0].primary_key, "p1");
  EXPECT_NE(to_log_line(failures[0]).find("\"pk\":\"p1\""), std::string::npos);
}

TEST(DiscretizeTable, ContextNameCollisionIsSuffixed) {
  auto g = testkit::mock_gateway({{"cheap", col("price"), "low"}});
  auto t = testkit::small_backpack_table({{"p1", "A", 10, "A cheap bag."}});
  auto set = discretize_table(t, {col("description")}, {}, g, llm::default_discretize_template());
  EXPECT_EQ(set.per_row.at("p1").tuples, (std::vector<KeyValueTuple>{{col("price_inferred"), "low"}}));
  ASSERT_EQ(set.warnings.size(), 1u);
  EXPECT_NE(set.warnings[0].find("price_inferred"), std::string::npos);
}

TEST(DiscretizeTable, TextColumnsMustBeCollected) {
  auto g = testkit::mock_gateway(small_lexicon());
  EXPECT_THROW(discretize_table(three_rows(), {col("title")}, {}, g, llm::default_discretize_template()),
               PreconditionError);
}
