#include <gtest/gtest.h>

#include "dir/serialize.hpp"

using namespace dir;

namespace {

template <typename T>
T round_trip(const T& v) {
  return json::parse(json(v).dump()).get<T>();
}

}  // namespace

TEST(Serialize, CatalogAndExtractions) {
  EnumerationCatalog c;
  c.table_id = "backpacks";
  c.entries[normalize_column_name("number_of_pockets")] = {"2", "3"};
  c.support[normalize_column_name("number_of_pockets")] = 2;
  c.consolidation_map[normalize_column_name("no_of_pockets")] = normalize_column_name("number_of_pockets");
  c.dropped = {{normalize_column_name("product_weight_grams"), "name_complexity"}};
  EXPECT_EQ(round_trip(c), c);
  EXPECT_EQ(json(c).at("entries").at("number_of_pockets"), json::array({"2", "3"}));

  ExtractionSet s;
  s.table_id = "backpacks";
  s.per_row["p1"].tuples = {{normalize_column_name("product_size"), "15 liter"}};
  s.per_row["p2"].failed = true;
  s.per_row["p2"].failure_reason = "no text to discretize";
  s.per_row["p3"].unextracted = {normalize_column_name("product_type")};
  EXPECT_EQ(round_trip(s), s);
}

TEST(Serialize, QueryAstAndReport) {
  auto ast = sql::parse_sql(
      "SELECT title FROM backpacks__joined WHERE NOT color IN ('black', 'red') AND (price < 40.5 OR in_stock = TRUE) "
      "ORDER BY price DESC LIMIT 3");
  EXPECT_EQ(round_trip(ast), ast);
  GeneratedQuery q;
  q.question = "q";
  q.raw_sql = sql::render(ast);
  q.ast = ast;
  q.report.status = QueryStatus::repaired;
  q.report.issues = {{IssueKind::non_enum_value, "where.0.0[0]", "not enumerated", std::string("black")}};
  q.report.repairs = {{"where.0.0[0]", "blak", "black"}};
  q.prompt_tokens = 120;
  q.attempts = 1;
  EXPECT_EQ(round_trip(q), q);
}

TEST(Serialize, ValuesKeepTheirKind) {
  for (const auto& v : {Value{}, Value{2.5}, Value{std::string("x")}, Value{true}}) EXPECT_EQ(round_trip(v), v);
  for (const auto& l : {Literal{400.0}, Literal{std::string("15 liter")}, Literal{false}}) EXPECT_EQ(round_trip(l), l);
}

TEST(Serialize, AgentTurn) {
  AgentTurn t;
  t.turn_index = 2;
  t.utterance = "non-black ones";
  t.table_id = "backpacks";
  t.thought = "Routed.";
  t.action = {"query_table", {{"table", "backpacks"}, {"sql", "SELECT * FROM backpacks__joined"}}};
  t.observation = Observation{3, {"product_id"}, {Row{Value{std::string("bp-0001")}}}};
  t.response = "Found 3 matching items in backpacks.";
  t.state_after.active_table = "backpacks";
  t.state_after.constraints[normalize_column_name("color")] = {CompareOp::neq, {Literal{std::string("black")}}, 2};
  t.trace = {{t.thought, t.action, t.observation}};
  EXPECT_EQ(round_trip(t), t);
}

TEST(Serialize, SuiteIntent) {
  QueryIntent q;
  q.description = "Show me non-black items under $400";
  q.constraints = {{"color", CompareOp::neq, {Literal{std::string("black")}}}, {"price", CompareOp::lt, {Literal{400.0}}}};
  q.domain = "backpacks";
  EXPECT_EQ(round_trip(q), q);
}
