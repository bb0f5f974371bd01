#include <gtest/gtest.h>

#include <random>

#include "dir/error.hpp"
#include "dir/sql.hpp"
#include "sql_gen.hpp"

using namespace dir;
using namespace dir::sql;

namespace {

Atom atom(std::string c, CompareOp op, std::vector<Literal> operands) { return Atom{std::move(c), op, std::move(operands)}; }

bool rejected_as_unsupported(const std::string& sql) {
  try {
    parse_sql(sql);
  } catch (const ParseError& e) {
    return e.unsupported();
  }
  return false;
}

}  // namespace

TEST(ParseSql, WorkedQuery) {
  auto ast = parse_sql(
      "select product_id, title from backpacks__joined where color <> 'black' and product_size = '15 liter' "
      "and price < 400 order by price desc limit 5;");
  EXPECT_EQ(ast.projection, (std::vector<std::string>{"product_id", "title"}));
  EXPECT_EQ(ast.source, "backpacks__joined");
  ASSERT_TRUE(ast.predicate);
  EXPECT_EQ(top_level_atoms(*ast.predicate),
            (std::vector<Atom>{atom("color", CompareOp::neq, {std::string("black")}),
                               atom("product_size", CompareOp::eq, {std::string("15 liter")}),
                               atom("price", CompareOp::lt, {400.0})}));
  EXPECT_EQ(ast.order_by, (OrderBy{"price", true}));
  EXPECT_EQ(ast.limit, 5);
  EXPECT_EQ(render(ast),
            "SELECT product_id, title FROM backpacks__joined WHERE color <> 'black' AND product_size = '15 liter' "
            "AND price < 400 ORDER BY price DESC LIMIT 5");
}

TEST(ParseSql, StarAndIdentifierCase) {
  auto ast = parse_sql("SELECT * FROM Backpacks__Joined WHERE In_Stock = TRUE");
  EXPECT_TRUE(ast.projection.empty());
  EXPECT_EQ(ast.source, "backpacks__joined");
  EXPECT_EQ(ast.predicate->atom, atom("in_stock", CompareOp::eq, {true}));
}

TEST(ParseSql, NotInAndNotLikeAreNegations) {
  auto p = parse_condition("color NOT IN ('black', 'navy') AND title NOT LIKE '%pro%'");
  ASSERT_EQ(p.kind, Predicate::Kind::all_of);
  EXPECT_EQ(p.children[0],
            Predicate::negation(Predicate::make_atom(
                atom("color", CompareOp::in, {std::string("black"), std::string("navy")}))));
  EXPECT_EQ(p.children[1].kind, Predicate::Kind::negate);
  EXPECT_EQ(render(p), "NOT color IN ('black', 'navy') AND NOT title LIKE '%pro%'");
}

TEST(ParseSql, OperatorAliasesAndPrecedence) {
  auto p = parse_condition("a != 1 OR b = 2 AND c == 3");
  ASSERT_EQ(p.kind, Predicate::Kind::any_of);
  EXPECT_EQ(p.children[0].atom.op, CompareOp::neq);
  EXPECT_EQ(p.children[1].kind, Predicate::Kind::all_of);
  EXPECT_EQ(render(p), "a <> 1 OR (b = 2 AND c = 3)");
}

TEST(ParseSql, QuotedStringsAndIdentifiers) {
  auto ast = parse_sql("SELECT \"order\" FROM t WHERE note = 'it''s'");
  EXPECT_EQ(ast.projection, std::vector<std::string>{"order"});
  EXPECT_EQ(std::get<std::string>(ast.predicate->atom.operands[0]), "it's");
  EXPECT_EQ(render(ast), "SELECT \"order\" FROM t WHERE note = 'it''s'");
}

TEST(ParseSql, MutationsAreRejected) {
  for (const char* sql :
       {"DROP TABLE backpacks__context", "INSERT INTO t VALUES (1)", "UPDATE t SET a = 1", "DELETE FROM t",
        "CREATE TABLE x (a)", "ALTER TABLE t ADD b", "ATTACH 'x.db' AS x", "DETACH x", "PRAGMA writable_schema=1",
        "REPLACE INTO t VALUES (1)", "WITH x AS (SELECT 1) SELECT * FROM x", "VACUUM", "BEGIN", "COMMIT",
        "ROLLBACK", "EXPLAIN SELECT * FROM t", "REINDEX", "ANALYZE", "SELECT * FROM t; DROP TABLE t",
        "select * from t; delete from t"})
    EXPECT_TRUE(rejected_as_unsupported(sql)) << sql;
}

TEST(ParseSql, OutsideSubsetIsUnsupported) {
  for (const char* sql :
       {"SELECT * FROM a JOIN b", "SELECT * FROM a, b", "SELECT * FROM (SELECT * FROM t)",
        "SELECT count(a) FROM t", "SELECT * FROM t WHERE a IS NULL", "SELECT * FROM t WHERE a BETWEEN 1 AND 2",
        "SELECT DISTINCT a FROM t", "SELECT * FROM t ORDER BY a, b", "SELECT * FROM t WHERE a = b",
        "SELECT * FROM t WHERE a IN (SELECT b FROM u)", "SELECT * FROM t LIMIT 1 OFFSET 2"})
    EXPECT_TRUE(rejected_as_unsupported(sql)) << sql;
}

TEST(ParseSql, MalformedIsParseError) {
  for (const char* sql : {"", "SELECT", "SELECT * FROM", "SELECT * FROM t WHERE", "SELECT * FROM t WHERE a =",
                          "SELECT * FROM t LIMIT 0", "SELECT * FROM t WHERE a = 'open", "SELECT * FROM t WHERE (a = 1"})
    EXPECT_THROW(parse_sql(sql), ParseError) << sql;
}

TEST(RenderParse, RoundTripOnGeneratedCorpus) {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 100; ++i) {
    auto ast = testkit::random_query(rng, "backpacks__joined");
    auto text = render(ast);
    EXPECT_EQ(parse_sql(text), ast) << text;
    EXPECT_EQ(render(parse_sql(text)), text);
  }
}

TEST(ExtractSql, FencedBlockAndProse) {
  EXPECT_EQ(extract_sql_statement("Here you go:\n```sql\nSELECT * FROM t WHERE a = 1\n```\nThanks"),
            "SELECT * FROM t WHERE a = 1");
  auto bare = extract_sql_statement("The query is SELECT a FROM t; enjoy");
  ASSERT_TRUE(bare);
  EXPECT_EQ(parse_sql(*bare), parse_sql("SELECT a FROM t"));
  EXPECT_FALSE(extract_sql_statement("I cannot answer that."));
}

TEST(Atoms, TopLevelSkipsDisjunctionsAndNegations) {
  auto p = parse_condition("a = 1 AND (b = 2 OR c = 3) AND NOT d = 4 AND (e = 5 AND f = 6)");
  auto top = top_level_atoms(p);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].column, "a");
  EXPECT_EQ(top[1].column, "e");
  EXPECT_EQ(top[2].column, "f");
  EXPECT_EQ(all_atoms(p).size(), 6u);
}

TEST(Atoms, Relaxation) {
  auto r = relaxation_atom("color");
  EXPECT_TRUE(is_relaxation(r));
  EXPECT_EQ(render(r), "color LIKE '%'");
  EXPECT_TRUE(is_relaxation(parse_condition("color LIKE '%'").atom));
  EXPECT_FALSE(is_relaxation(parse_condition("color LIKE '%a'").atom));
}
