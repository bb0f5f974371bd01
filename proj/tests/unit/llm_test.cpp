#include <gtest/gtest.h>

#include <sstream>

#include "dir/error.hpp"
#include "dir/llm.hpp"
#include "fixture.hpp"

using namespace dir;
using namespace dir::llm;

namespace {

class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(int failures) : failures_(failures) {}
  std::string send(std::string_view, const ProviderConfig&) override {
    ++calls;
    if (calls <= failures_) throw TransientError("connection reset");
    return "ok";
  }
  int calls = 0;

 private:
  int failures_;
};

JoinedSchema backpack_schema() {
  JoinedSchema s;
  s.table_id = "backpacks";
  s.view_name = "backpacks__joined";
  s.primary_key = normalize_column_name("product_id");
  s.columns = {{normalize_column_name("product_id"), ValueKind::text, ColumnOrigin::context, false},
               {normalize_column_name("price"), ValueKind::number, ColumnOrigin::context, false},
               {normalize_column_name("product_size"), ValueKind::text, ColumnOrigin::inference, false}};
  return s;
}

EnumerationCatalog size_catalog() {
  EnumerationCatalog c;
  c.table_id = "backpacks";
  c.entries[normalize_column_name("product_size")] = {"15 liter", "22 liter"};
  return c;
}

}  // namespace

TEST(TokenEstimate, FourCharsPerTokenRoundedUp) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("abcd"), 1u);
  EXPECT_EQ(estimate_tokens("abcde"), 2u);
  EXPECT_EQ(estimate_tokens(std::string(20000, 'x')), 5000u);
}

TEST(TokenEstimate, MonotoneUnderAppend) {
  std::string s;
  std::size_t last = 0;
  for (int i = 0; i < 100; ++i) {
    s += static_cast<char>('a' + i % 26);
    auto e = estimate_tokens(s);
    EXPECT_GE(e, last);
    last = e;
  }
}

TEST(Complete, OverBudgetPromptIsRejectedBeforeSending) {
  ScriptedTransport t(0);
  ProviderConfig c;
  c.max_input_tokens = 4096;
  try {
    complete(t, std::string(20000, 'x'), c);
    FAIL() << "expected BudgetError";
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.estimate(), 5000u);
    EXPECT_EQ(e.limit(), 4096u);
  }
  EXPECT_EQ(t.calls, 0);
}

TEST(Complete, RetriesTransientFailures) {
  ScriptedTransport t(2);
  ProviderConfig c;
  c.max_retries = 2;
  c.backoff_ms = 0;
  EXPECT_EQ(complete(t, "hi", c), "ok");
  EXPECT_EQ(t.calls, 3);
}

TEST(Complete, ProviderErrorAfterRetriesExhausted) {
  ScriptedTransport t(10);
  ProviderConfig c;
  c.max_retries = 2;
  c.backoff_ms = 0;
  try {
    complete(t, "hi", c);
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(t.calls, 3);
}

TEST(Complete, UnreachableEndpointIsProviderError) {
  ProviderConfig c;
  c.provider_id = "local";
  c.adapter = "openai-chat";
  c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  c.model_name = "m";
  c.max_retries = 1;
  c.backoff_ms = 0;
  c.timeout_seconds = 2;
  Gateway g(make_transport(c), c);
  try {
    g.complete("hello");
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(MockProvider, SamePromptSameAnswer) {
  auto g = testkit::mock_gateway({{"15 liter", normalize_column_name("product_size"), "15 liter"}});
  auto prompt = build_discretize_prompt("A 15 liter pack.", {}, default_discretize_template());
  auto a = g.complete(prompt);
  EXPECT_EQ(a, g.complete(prompt));
  EXPECT_EQ(a, R"([["product_size","15 liter"]])");
}

TEST(MockProvider, UnknownPromptShapeIsProviderError) {
  MockTransport t;
  EXPECT_THROW(t.send("no cue here", ProviderConfig{}), ProviderError);
}

TEST(DiscretizePrompt, ContainsMandatoryKeysAndTextVerbatim) {
  const std::string text = "Roomy 22 liter backpack with a strap; \"weatherproof\" zips.";
  auto p = build_discretize_prompt(text, {normalize_column_name("product_type")}, default_discretize_template());
  EXPECT_NE(p.find("product_type"), std::string::npos);
  EXPECT_NE(p.find(text), std::string::npos);
  EXPECT_NE(p.find("Always extract these keys"), std::string::npos);
  EXPECT_EQ(p.substr(p.size() - std::string(kDiscretizeAnswerCue).size()), kDiscretizeAnswerCue);
}

TEST(DiscretizePrompt, NoGroundingClauseWithoutMandatoryKeys) {
  auto p = build_discretize_prompt("text", {}, default_discretize_template());
  EXPECT_EQ(p.find("Always extract these keys"), std::string::npos);
}

TEST(DiscretizePrompt, ExemplarsAppearInOrder) {
  auto t = default_discretize_template();
  t.exemplars = {{"first input", "[[\"a\",\"1\"]]"}, {"second input", "[[\"b\",\"2\"]]"}};
  auto p = build_discretize_prompt("target", {}, t);
  auto a_in = p.find("first input"), a_out = p.find("[[\"a\",\"1\"]]");
  auto b_in = p.find("second input"), b_out = p.find("[[\"b\",\"2\"]]");
  ASSERT_NE(a_in, std::string::npos);
  ASSERT_NE(b_out, std::string::npos);
  EXPECT_LT(a_in, a_out);
  EXPECT_LT(a_out, b_in);
  EXPECT_LT(b_in, b_out);
  EXPECT_LT(b_out, p.find("target"));
}

TEST(DiscretizePrompt, PureFunctionOfInputs) {
  auto keys = std::vector<ColumnName>{normalize_column_name("product_type")};
  EXPECT_EQ(build_discretize_prompt("x y z", keys, default_discretize_template()),
            build_discretize_prompt("x y z", keys, default_discretize_template()));
}

TEST(DiscretizePrompt, OverBudgetIsBudgetError) {
  auto t = default_discretize_template();
  t.rendered_budget = 300;
  EXPECT_THROW(build_discretize_prompt(std::string(2000, 'x'), {}, t), BudgetError);
}

TEST(Text2SqlPrompt, ListsEnumeratedValues) {
  auto p = build_text2sql_prompt("any 15 liter?", backpack_schema(), size_catalog(), DialogState{},
                                 default_text2sql_template());
  EXPECT_NE(p.find("product_size"), std::string::npos);
  EXPECT_NE(p.find("15 liter"), std::string::npos);
  EXPECT_NE(p.find("22 liter"), std::string::npos);
  EXPECT_NE(p.find("backpacks__joined"), std::string::npos);
  EXPECT_NE(p.find("price (number)"), std::string::npos);
  EXPECT_NE(p.find("any 15 liter?"), std::string::npos);
}

TEST(Text2SqlPrompt, StateSectionOnlyWhenStateHasConstraints) {
  const auto schema = backpack_schema();
  const auto catalog = size_catalog();
  auto empty = build_text2sql_prompt("q", schema, catalog, DialogState{}, default_text2sql_template());
  EXPECT_EQ(empty.find("Dialog state:"), std::string::npos);
  DialogState s;
  s.active_table = "backpacks";
  s.constraints[normalize_column_name("price")] = Constraint{CompareOp::lt, {Literal{400.0}}, 1};
  auto with = build_text2sql_prompt("q", schema, catalog, s, default_text2sql_template());
  EXPECT_NE(with.find("Dialog state:\n- price < 400"), std::string::npos);
}

TEST(Text2SqlPrompt, StateColumnMustExist) {
  DialogState s;
  s.constraints[normalize_column_name("wingspan")] = Constraint{CompareOp::eq, {Literal{std::string("2m")}}, 1};
  EXPECT_THROW(build_text2sql_prompt("q", backpack_schema(), size_catalog(), s, default_text2sql_template()),
               PreconditionError);
}

TEST(Text2SqlPrompt, HugeCatalogUnderTightBudgetIsBudgetError) {
  auto schema = backpack_schema();
  EnumerationCatalog c;
  std::vector<std::string> values;
  for (int i = 0; i < 5000; ++i) values.push_back("size " + std::to_string(100000 + i));
  std::sort(values.begin(), values.end());
  c.entries[normalize_column_name("product_size")] = values;
  auto t = default_text2sql_template();
  t.rendered_budget = 4096;
  try {
    build_text2sql_prompt("q", schema, c, DialogState{}, t);
    FAIL() << "expected BudgetError";
  } catch (const BudgetError& e) {
    // 5000 values of 11 characters plus quotes and separator alone exceed 4096 * 4 characters.
    EXPECT_GT(e.estimate(), 5000u * 14u / 4u);
    EXPECT_EQ(e.limit(), 4096u);
    EXPECT_NE(std::string(e.what()).find("max_columns"), std::string::npos);
  }
}

TEST(Templates, SerializeParseRoundTrip) {
  for (const auto& t : {default_discretize_template(), default_text2sql_template()})
    EXPECT_EQ(parse_template(serialize_template(t)), t);
}

TEST(Templates, ShippedAssetsMatchBuiltIns) {
  EXPECT_EQ(testkit::read_file(DIR_SOURCE_DIR "/assets/prompts/discretize.txt"),
            serialize_template(default_discretize_template()));
  EXPECT_EQ(testkit::read_file(DIR_SOURCE_DIR "/assets/prompts/text2sql.txt"),
            serialize_template(default_text2sql_template()));
  EXPECT_EQ(load_template_file(DIR_SOURCE_DIR "/assets/prompts/text2sql.txt"), default_text2sql_template());
}

TEST(Templates, NeedAtLeastOneExemplar) {
  auto t = default_discretize_template();
  t.exemplars.clear();
  EXPECT_THROW(t.validate(), ConfigError);
  EXPECT_THROW(build_discretize_prompt("x", {}, t), ConfigError);
}

TEST(Templates, FillPlaceholdersLeavesUnknownSlots) {
  EXPECT_EQ(fill_placeholders("{{a}}-{{b}}", {{"a", "1"}}), "1-{{b}}");
}

TEST(Lexicon, SaveLoadRoundTrip) {
  std::vector<LexiconEntry> lex = {{"15 liter", normalize_column_name("product_size"), "15 liter"},
                                   {"strap", normalize_column_name("handle_type"), "strap"}};
  std::stringstream ss;
  save_lexicon(ss, lex);
  auto back = load_lexicon(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].phrase, "strap");
  EXPECT_EQ(back[1].key.str(), "handle_type");
  EXPECT_EQ(back[1].value, "strap");
}

TEST(ApiKeys, EnvironmentVariableName) { EXPECT_EQ(api_key_env_var("openai"), "DIR_OPENAI_API_KEY"); }
