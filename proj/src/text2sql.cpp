#include "dir/text2sql.hpp"

#include <algorithm>
#include <functional>

#include "dir/error.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace {

using sql::Atom;
using sql::Predicate;

void visit_atoms(const Predicate& p, const std::string& path,
                 const std::function<void(const Atom&, const std::string&)>& fn) {
  if (p.kind == Predicate::Kind::atom) {
    fn(p.atom, path);
    return;
  }
  for (std::size_t i = 0; i < p.children.size(); ++i)
    visit_atoms(p.children[i], path + "." + std::to_string(i), fn);
}

Atom* atom_at(Predicate& p, std::string_view path) {
  // path: "where" followed by ".i" segments
  if (!path.starts_with("where")) return nullptr;
  path.remove_prefix(5);
  Predicate* cur = &p;
  while (!path.empty()) {
    if (path.front() != '.') return nullptr;
    path.remove_prefix(1);
    auto dot = path.find('.');
    auto seg = path.substr(0, dot);
    std::size_t idx = static_cast<std::size_t>(std::stoul(std::string(seg)));
    if (idx >= cur->children.size()) return nullptr;
    cur = &cur->children[idx];
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot);
  }
  return cur->kind == Predicate::Kind::atom ? &cur->atom : nullptr;
}

const std::vector<std::string>* enum_values(const EnumerationCatalog& catalog, const std::string& column) {
  for (const auto& [name, values] : catalog.entries)
    if (name.str() == column) return &values;
  return nullptr;
}

std::string literal_text(const Literal& l) { return sql::render_literal(l); }

bool is_ordering(CompareOp op) {
  return op == CompareOp::lt || op == CompareOp::lte || op == CompareOp::gt || op == CompareOp::gte;
}

void check_atom(const Atom& atom, const std::string& where, const JoinedSchema& schema,
                const EnumerationCatalog& catalog, std::vector<Issue>& issues) {
  const auto* column = schema.find(atom.column);
  if (!column) {
    issues.push_back({IssueKind::unknown_column, where, "unknown column '" + atom.column + "'", std::nullopt});
    return;
  }
  auto mismatch = [&](const std::string& detail) {
    issues.push_back({IssueKind::type_mismatch, where, detail, std::nullopt});
  };
  const std::string op(to_string(atom.op));
  if (column->origin == ColumnOrigin::inference) {
    if (is_ordering(atom.op)) {
      mismatch("inferred column '" + atom.column + "' supports only eq, neq, in and like");
      return;
    }
    if (atom.op == CompareOp::like) {
      if (!std::holds_alternative<std::string>(atom.operands.at(0))) mismatch("LIKE needs a string pattern");
      return;
    }
    const auto* values = enum_values(catalog, atom.column);
    for (std::size_t k = 0; k < atom.operands.size(); ++k) {
      const auto& lit = atom.operands[k];
      auto loc = where + "[" + std::to_string(k) + "]";
      if (!std::holds_alternative<std::string>(lit)) {
        issues.push_back({IssueKind::type_mismatch, loc,
                          "inferred column '" + atom.column + "' holds text, got " + literal_text(lit),
                          std::nullopt});
        continue;
      }
      const auto& s = std::get<std::string>(lit);
      if (values && std::binary_search(values->begin(), values->end(), s)) continue;
      Issue issue{IssueKind::non_enum_value, loc,
                  "'" + s + "' is not an enumerated value of " + atom.column, std::nullopt};
      if (values) {
        if (auto nearest = nearest_value(s, *values)) {
          issue.suggestion = nearest->value;
          issue.detail += "; nearest: '" + nearest->value + "' (distance " +
                          text::format_number(nearest->distance) + ")";
        }
      }
      issues.push_back(std::move(issue));
    }
    return;
  }
  switch (column->kind) {
    case ValueKind::number:
      if (atom.op == CompareOp::like) {
        mismatch("LIKE on numeric column '" + atom.column + "'");
        return;
      }
      for (const auto& lit : atom.operands)
        if (!std::holds_alternative<double>(lit)) {
          mismatch("numeric column '" + atom.column + "' compared with " + literal_text(lit));
          return;
        }
      return;
    case ValueKind::boolean:
      if (atom.op != CompareOp::eq && atom.op != CompareOp::neq) {
        mismatch("boolean column '" + atom.column + "' supports only eq and neq");
        return;
      }
      if (!std::holds_alternative<bool>(atom.operands.at(0)))
        mismatch("boolean column '" + atom.column + "' compared with " + literal_text(atom.operands[0]));
      return;
    case ValueKind::text:
      if (is_ordering(atom.op)) {
        mismatch("ordering comparison on text column '" + atom.column + "'");
        return;
      }
      for (const auto& lit : atom.operands)
        if (!std::holds_alternative<std::string>(lit)) {
          mismatch("text column '" + atom.column + "' compared with " + literal_text(lit));
          return;
        }
      return;
  }
}

Value typed(const Value& v, ValueKind kind) {
  if (kind == ValueKind::boolean && std::holds_alternative<double>(v)) return std::get<double>(v) != 0.0;
  if (kind == ValueKind::text && std::holds_alternative<double>(v)) return value_to_text(v);
  return v;
}

ResultSet apply_kinds(ResultSet rs, const JoinedSchema& schema) {
  for (auto& c : rs.columns)
    if (const auto* col = schema.find(c.name)) c.kind = col->kind;
  for (auto& row : rs.rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      if (rs.columns[i].kind) row[i] = typed(row[i], *rs.columns[i].kind);
  return rs;
}

std::string feedback(const std::string& sql_text, const std::vector<std::string>& problems) {
  std::string out = "\n\nThe previous answer was:\n" + sql_text + "\nIt was rejected because:\n";
  for (const auto& p : problems) out += "* " + p + "\n";
  out += "Write a corrected query using only the listed columns and enumerated values.\n";
  out += llm::kText2SqlAnswerCue;
  return out;
}

}  // namespace

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::unknown_column: return "unknown_column";
    case IssueKind::non_enum_value: return "non_enum_value";
    case IssueKind::type_mismatch: return "type_mismatch";
    case IssueKind::unsupported_syntax: return "unsupported_syntax";
  }
  return "unsupported_syntax";
}

std::string_view to_string(QueryStatus status) {
  switch (status) {
    case QueryStatus::valid: return "valid";
    case QueryStatus::repaired: return "repaired";
    case QueryStatus::rejected: return "rejected";
  }
  return "rejected";
}

IssueKind issue_kind_from_string(std::string_view s) {
  for (auto k : {IssueKind::unknown_column, IssueKind::non_enum_value, IssueKind::type_mismatch,
                 IssueKind::unsupported_syntax})
    if (to_string(k) == s) return k;
  throw SchemaError("unknown issue kind '" + std::string(s) + "'");
}

QueryStatus query_status_from_string(std::string_view s) {
  for (auto k : {QueryStatus::valid, QueryStatus::repaired, QueryStatus::rejected})
    if (to_string(k) == s) return k;
  throw SchemaError("unknown query status '" + std::string(s) + "'");
}

std::optional<NearestValue> nearest_value(std::string_view literal, const std::vector<std::string>& values) {
  std::optional<NearestValue> best;
  for (const auto& v : values) {
    double d = text::normalized_edit_distance(literal, v);
    if (!best || d < best->distance || (d == best->distance && v < best->value)) best = NearestValue{v, d};
  }
  return best;
}

ValidationReport validate_query(const sql::QueryAst& ast, const JoinedSchema& schema,
                                const EnumerationCatalog& catalog) {
  ValidationReport report;
  if (ast.source != schema.view_name)
    report.issues.push_back({IssueKind::unsupported_syntax, "from",
                             "queries must read from '" + schema.view_name + "', not '" + ast.source + "'",
                             std::nullopt});
  for (std::size_t i = 0; i < ast.projection.size(); ++i)
    if (!schema.find(ast.projection[i]))
      report.issues.push_back({IssueKind::unknown_column, "projection[" + std::to_string(i) + "]",
                               "unknown column '" + ast.projection[i] + "'", std::nullopt});
  if (ast.order_by && !schema.find(ast.order_by->column))
    report.issues.push_back(
        {IssueKind::unknown_column, "order_by", "unknown column '" + ast.order_by->column + "'", std::nullopt});
  if (ast.predicate)
    visit_atoms(*ast.predicate, "where", [&](const Atom& atom, const std::string& where) {
      check_atom(atom, where, schema, catalog, report.issues);
    });
  report.status = report.issues.empty() ? QueryStatus::valid : QueryStatus::rejected;
  return report;
}

RepairResult repair_query(const sql::QueryAst& ast, const ValidationReport& report,
                          const EnumerationCatalog& catalog) {
  RepairResult result{ast, report};
  if (report.issues.empty()) return result;
  std::vector<Issue> remaining;
  for (const auto& issue : report.issues) {
    bool fixed = false;
    if (issue.kind == IssueKind::non_enum_value && result.ast.predicate) {
      auto bracket = issue.location.find('[');
      Atom* atom = atom_at(*result.ast.predicate, std::string_view(issue.location).substr(0, bracket));
      if (atom && bracket != std::string::npos) {
        auto k = static_cast<std::size_t>(std::stoul(issue.location.substr(bracket + 1)));
        const auto* values = enum_values(catalog, atom->column);
        if (values && k < atom->operands.size() && std::holds_alternative<std::string>(atom->operands[k])) {
          const auto before = std::get<std::string>(atom->operands[k]);
          auto nearest = nearest_value(before, *values);
          if (nearest && nearest->distance <= kRepairDistanceThreshold) {
            atom->operands[k] = nearest->value;
            result.report.repairs.push_back({issue.location, before, nearest->value});
            fixed = true;
          }
        }
      }
    }
    if (!fixed) remaining.push_back(issue);
  }
  result.report.issues = std::move(remaining);
  result.report.status = result.report.issues.empty()
                             ? (result.report.repairs.empty() ? QueryStatus::valid : QueryStatus::repaired)
                             : QueryStatus::rejected;
  return result;
}

GeneratedQuery text_to_sql(std::string_view question, const JoinedSchema& schema,
                           const EnumerationCatalog& catalog, const DialogState& state,
                           const llm::Gateway& gateway, const Text2SqlOptions& options) {
  if (text::trim(question).empty()) throw PreconditionError("question is empty");
  const auto base_prompt = llm::build_text2sql_prompt(question, schema, catalog, state, options.tmpl);

  GeneratedQuery q;
  q.question = std::string(question);
  std::string prompt = base_prompt;
  std::string last_completion;
  std::optional<ParseError> last_parse_error;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    q.attempts = attempt;
    q.prompt_tokens = llm::estimate_tokens(prompt);
    last_completion = gateway.complete(prompt);
    auto statement = sql::extract_sql_statement(last_completion);
    if (!statement) {
      prompt = base_prompt + feedback(text::trim(last_completion), {"the answer contains no SELECT statement"});
      continue;
    }
    try {
      q.raw_sql = *statement;
      q.ast = sql::parse_sql(*statement);
      last_parse_error.reset();
    } catch (const ParseError& e) {
      last_parse_error = e;
      prompt = base_prompt + feedback(*statement, {e.what()});
      continue;
    }
    auto report = validate_query(q.ast, schema, catalog);
    auto repaired = repair_query(q.ast, report, catalog);
    q.ast = std::move(repaired.ast);
    q.report = std::move(repaired.report);
    if (q.report.status != QueryStatus::rejected) return q;
    std::vector<std::string> problems;
    for (const auto& issue : q.report.issues) problems.push_back(issue.location + ": " + issue.detail);
    if (attempt == 1) prompt = base_prompt + feedback(*statement, problems);
    else return q;
  }
  if (q.raw_sql.empty() || last_parse_error)
    throw SemanticParseError(last_parse_error ? std::string("unparseable SQL: ") + last_parse_error->what()
                                              : "completion contains no SQL statement",
                             last_completion);
  return q;
}

std::string execution_sql(const sql::QueryAst& ast, const JoinedSchema& schema) {
  std::string out = "SELECT ";
  if (ast.projection.empty()) {
    out += '*';
  } else {
    for (std::size_t i = 0; i < ast.projection.size(); ++i) {
      if (i) out += ", ";
      out += sql::quote_identifier(ast.projection[i]);
    }
  }
  out += " FROM " + sql::quote_identifier(schema.view_name);
  if (ast.predicate) out += " WHERE " + sql::render(*ast.predicate);
  out += " ORDER BY ";
  if (ast.order_by)
    out += sql::quote_identifier(ast.order_by->column) + (ast.order_by->descending ? " DESC, " : " ASC, ");
  out += sql::quote_identifier(schema.primary_key.str()) + " ASC";
  if (ast.limit) out += " LIMIT " + std::to_string(*ast.limit);
  return out;
}

ResultSet execute(const GeneratedQuery& query, const JoinedSchema& schema, const Store& store) {
  if (!query.executable()) throw ContractError("refusing to execute a rejected query");
  if (query.ast.source != schema.view_name)
    throw ContractError("query reads from '" + query.ast.source + "', expected '" + schema.view_name + "'");
  return apply_kinds(store.query_read_only(execution_sql(query.ast, schema)), schema);
}

ResultSet read_view(const JoinedSchema& schema, const Store& store) {
  return apply_kinds(store.query_read_only("SELECT * FROM " + sql::quote_identifier(schema.view_name) +
                                           " ORDER BY " + sql::quote_identifier(schema.primary_key.str())),
                     schema);
}

}  // namespace dir
