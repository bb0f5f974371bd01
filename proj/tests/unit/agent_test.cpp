#include <gtest/gtest.h>

#include <algorithm>

#include "dir/agent.hpp"
#include "dir/error.hpp"
#include "fixture.hpp"
#include "oracle.hpp"

using namespace dir;

namespace {

class AgentFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { fx_ = testkit::build_corpus_fixture(120, 7).release(); }
  static void TearDownTestSuite() {
    delete fx_;
    fx_ = nullptr;
  }
  static AgentEngine engine(const llm::Gateway& g, AgentOptions o = {}) {
    return AgentEngine{fx_->store, fx_->tables, g, o, {}};
  }
  static std::set<std::string> full_result(const AgentTurn& t) {
    const auto& entry = fx_->table(t.table_id);
    return testkit::key_set(execute(*t.query, entry.schema, fx_->store), entry.schema.primary_key.str());
  }
  static testkit::CorpusFixture* fx_;
};

testkit::CorpusFixture* AgentFixture::fx_ = nullptr;

GeneratedQuery query_of(const std::string& sql) {
  GeneratedQuery q;
  q.ast = sql::parse_sql(sql);
  q.raw_sql = sql;
  return q;
}

Constraint eq(const std::string& v, int turn) { return Constraint{CompareOp::eq, {Literal{v}}, turn}; }

}  // namespace

TEST_F(AgentFixture, RoutesByVocabularyOverlap) {
  EXPECT_EQ(route_table("I need a backpack", fx_->tables).table_id, "backpacks");
  EXPECT_EQ(route_table("a floral perfume", fx_->tables).table_id, "perfumes");
  EXPECT_EQ(route_table("automatic watches with a steel band", fx_->tables).table_id, "watches");
  EXPECT_THROW(route_table("hello there", fx_->tables), RoutingError);
  EXPECT_GT(route_score("black backpacks", fx_->table("backpacks")), route_score("black backpacks", fx_->table("perfumes")));
}

TEST_F(AgentFixture, CurrentTableIsSticky) {
  auto d = route_table("black ones", fx_->tables, std::string("backpacks"));
  EXPECT_EQ(d.table_id, "backpacks");
  EXPECT_FALSE(d.switched);
  EXPECT_EQ(route_table("hello there", fx_->tables, std::string("backpacks")).table_id, "backpacks");
  auto moved = route_table("a floral perfume", fx_->tables, std::string("backpacks"));
  EXPECT_EQ(moved.table_id, "perfumes");
  EXPECT_TRUE(moved.switched);
}

TEST(DialogStateUpdate, PromotesTopLevelConjuncts) {
  DialogState s{"backpacks", {}};
  auto next = update_dialog_state(
      s, query_of("SELECT * FROM backpacks__joined WHERE product_type = 'backpack' AND price < 200"), 1);
  ASSERT_EQ(next.constraints.size(), 2u);
  EXPECT_EQ(next.constraints.at(normalize_column_name("product_type")), eq("backpack", 1));
  EXPECT_EQ(next.constraints.at(normalize_column_name("price")), (Constraint{CompareOp::lt, {Literal{200.0}}, 1}));
}

TEST(DialogStateUpdate, DisjunctionsAreNotPromoted) {
  auto next = update_dialog_state(
      DialogState{"t", {}}, query_of("SELECT * FROM t__joined WHERE color = 'red' OR color = 'blue'"), 1);
  EXPECT_TRUE(next.empty());
}

TEST(DialogStateUpdate, OverrideRelaxAndCarry) {
  DialogState s{"backpacks", {{normalize_column_name("color"), eq("black", 1)},
                              {normalize_column_name("product_type"), eq("backpack", 1)}}};
  auto next = update_dialog_state(
      s,
      query_of("SELECT * FROM backpacks__joined WHERE product_type = 'backpack' AND color LIKE '%' AND material = "
               "'nylon'"),
      3);
  EXPECT_EQ(next.constraints.count(normalize_column_name("color")), 0u);
  EXPECT_EQ(next.constraints.at(normalize_column_name("product_type")).turn_index, 1);
  EXPECT_EQ(next.constraints.at(normalize_column_name("material")), eq("nylon", 3));
  auto changed = update_dialog_state(next, query_of("SELECT * FROM backpacks__joined WHERE product_type = 'daypack'"), 4);
  EXPECT_EQ(changed.constraints.at(normalize_column_name("product_type")), eq("daypack", 4));
}

TEST(DialogStateUpdate, RejectedQueryIsContractError) {
  auto q = query_of("SELECT * FROM t__joined");
  q.report.status = QueryStatus::rejected;
  EXPECT_THROW(update_dialog_state(DialogState{}, q, 1), ContractError);
}

TEST_F(AgentFixture, ExploratoryThenFollowUpNarrows) {
  auto g = fx_->gateway;
  auto e = engine(g);
  Session s;
  auto first = step(s, "I need a backpack", e);
  EXPECT_EQ(first.table_id, "backpacks");
  EXPECT_EQ(first.action.tool, "query_table");
  EXPECT_EQ(first.state_after.constraints.at(normalize_column_name("product_type")), eq("backpack", 1));
  auto second = step(s, "non-black ones under $300", e);
  EXPECT_EQ(second.turn_index, 2);
  EXPECT_EQ(second.state_after.constraints.at(normalize_column_name("product_type")).turn_index, 1);
  EXPECT_EQ(second.state_after.constraints.count(normalize_column_name("color")), 1u);
  auto a = full_result(first), b = full_result(second);
  EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  EXPECT_LT(b.size(), a.size());
  EXPECT_EQ(s.dialog_state, second.state_after);
  EXPECT_EQ(s.routing_history, (std::vector<std::string>{"backpacks", "backpacks"}));
}

TEST_F(AgentFixture, RejectedQueryAsksForClarificationAndKeepsState) {
  auto e = engine(fx_->gateway);
  Session s;
  step(s, "I need a backpack", e);
  const auto before = s.dialog_state;
  auto t = step(s, "color is fuchsia", e);
  EXPECT_EQ(t.action.tool, "respond");
  ASSERT_TRUE(t.response);
  EXPECT_FALSE(t.query);
  EXPECT_EQ(t.state_after, before);
  EXPECT_EQ(s.dialog_state, before);
}

TEST_F(AgentFixture, UnroutableQuestionIsClarified) {
  auto e = engine(fx_->gateway);
  Session s;
  auto t = step(s, "hello there", e);
  EXPECT_EQ(t.action.tool, "respond");
  EXPECT_EQ(t.table_id, "");
  EXPECT_TRUE(t.state_after.empty());
  EXPECT_THROW(step(s, "   ", e), PreconditionError);
}

namespace {

class UnknownColumnTransport : public llm::Transport {
 public:
  std::string send(std::string_view, const llm::ProviderConfig&) override {
    ++calls;
    return "```sql\nSELECT * FROM backpacks__joined WHERE wingspan = 2\n```";
  }
  int calls = 0;
};

}  // namespace

TEST_F(AgentFixture, ToolBudgetStopsRerouting) {
  auto t = std::make_shared<UnknownColumnTransport>();
  llm::Gateway g(t, llm::ProviderConfig{});
  AgentOptions o;
  o.max_iterations = 1;
  Session s;
  try {
    step(s, "black backpack or watch", engine(g, o));
    FAIL() << "expected AgentBudgetError";
  } catch (const AgentBudgetError& e) {
    EXPECT_EQ(e.partial_trace().size(), 1u);
  }
  EXPECT_TRUE(s.turns.empty());

  Session wide;
  auto turn = step(wide, "black backpack or watch", engine(g));
  EXPECT_EQ(turn.action.tool, "respond");
  EXPECT_EQ(turn.trace.size(), 3u);
}

TEST(AgentOptions, Validation) {
  AgentOptions o;
  EXPECT_NO_THROW(o.validate());
  o.max_iterations = 0;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST_F(AgentFixture, ReplayReproducesSessionState) {
  auto e = engine(fx_->gateway);
  Session s;
  for (const char* u : {"I need a backpack", "black ones", "any color", "under $250", "a floral perfume",
                        "color is fuchsia", "cheapest"})
    step(s, u, e);
  EXPECT_EQ(replay_dialog_state(s.turns), s.dialog_state);
  EXPECT_EQ(s.dialog_state.active_table, "perfumes");
}

TEST_F(AgentFixture, FormatTurnLayout) {
  auto e = engine(fx_->gateway);
  Session s;
  auto out = format_turn(step(s, "I need a backpack", e));
  EXPECT_EQ(out.rfind("[1] > I need a backpack\nThought: ", 0), 0u);
  EXPECT_NE(out.find("\nAction: query_table(sql=SELECT"), std::string::npos);
  EXPECT_NE(out.find("\nObservation: "), std::string::npos);
  EXPECT_NE(out.find("\nState: product_type = 'backpack'\n"), std::string::npos);
}

TEST_F(AgentFixture, SessionStoreRoundTrip) {
  testkit::TempDir dir;
  SessionStore store(dir.path());
  auto a = store.create();
  auto b = store.create();
  EXPECT_EQ(a.session_id, "s000001");
  EXPECT_EQ(b.session_id, "s000002");
  auto e = engine(fx_->gateway);
  for (const char* u : {"I need a backpack", "non-black ones", "color is fuchsia"}) store.append(a, step(a, u, e));
  auto back = store.load("s000001");
  EXPECT_EQ(back, a);
  EXPECT_TRUE(store.load("s000002").turns.empty());
  EXPECT_THROW(store.load("s000009"), NotFoundError);
  EXPECT_THROW(store.load("../etc"), NotFoundError);
  EXPECT_EQ(SessionStore(dir.path()).create().session_id, "s000003");
}
