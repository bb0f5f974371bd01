#include "dir/agent.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "dir/serialize.hpp"
#include "dir/sql.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace fs = std::filesystem;

namespace {

std::set<std::string> vocabulary(const TableEntry& table) {
  std::set<std::string> vocab;
  auto add = [&](std::string_view s) {
    for (const auto& w : text::words(s)) {
      vocab.insert(w);
      vocab.insert(text::singular(w));
    }
  };
  add(table.table_id);
  add(table.domain_id);
  for (const auto& c : table.schema.columns) add(c.name.str());
  for (const auto& [name, values] : table.catalog.entries)
    for (const auto& v : values) add(v);
  return vocab;
}

std::string describe_scores(const std::map<std::string, double>& scores) {
  std::vector<std::string> parts;
  for (const auto& [id, s] : scores) parts.push_back(id + "=" + text::format_number(s));
  return text::join(parts, ", ");
}

std::string cell_text(const Value& v) { return is_null(v) ? "null" : value_to_text(v); }

std::string item_label(const ResultSet& rs, const Row& row, const JoinedSchema& schema) {
  std::string label;
  if (auto pk = rs.column_index(schema.primary_key.str())) label = cell_text(row[*pk]);
  if (auto title = rs.column_index("title"); title && !is_null(row[*title])) {
    auto t = cell_text(row[*title]);
    label = label.empty() ? t : label + " (" + t + ")";
  }
  return label;
}

std::string clarify_issues(const ValidationReport& report) {
  std::vector<std::string> parts;
  for (const auto& issue : report.issues) {
    auto part = issue.detail;
    if (issue.kind == IssueKind::non_enum_value) {
      auto semi = part.find(';');
      if (semi != std::string::npos) part = part.substr(0, semi);
      if (issue.suggestion) part += "; did you mean '" + *issue.suggestion + "'?";
    }
    parts.push_back(part);
  }
  return "I could not match that request to the catalog (" + text::join(parts, "; ") +
         "). Could you rephrase it?";
}

const char* kRoutingClarification =
    "I could not tell which catalog to search. Could you name the kind of product you are looking for?";

}  // namespace

double route_score(std::string_view question, const TableEntry& table) {
  const auto vocab = vocabulary(table);
  std::set<std::string> hits;
  for (const auto& w : text::content_words(question))
    if (vocab.count(w) || vocab.count(text::singular(w))) hits.insert(w);
  return static_cast<double>(hits.size());
}

RouteDecision route_table(std::string_view question, const std::vector<TableEntry>& tables,
                          const std::optional<std::string>& current, double switch_margin) {
  if (tables.empty()) throw PreconditionError("no tables are registered");
  RouteDecision d;
  for (const auto& t : tables) d.scores[t.table_id] = route_score(question, t);
  std::string best;
  double best_score = -1;
  for (const auto& [id, s] : d.scores)  // map order gives the lexicographic tie-break
    if (s > best_score) {
      best = id;
      best_score = s;
    }
  if (current && d.scores.count(*current)) {
    double cur = d.scores[*current];
    if (best != *current && best_score > 0 && best_score > switch_margin * cur) {
      d.table_id = best;
      d.switched = true;
    } else {
      d.table_id = *current;
    }
    return d;
  }
  if (best_score <= 0) throw RoutingError("no registered table matches the question");
  d.table_id = best;
  return d;
}

DialogState update_dialog_state(const DialogState& state, const GeneratedQuery& q, int turn_index) {
  if (!q.executable()) throw ContractError("rejected queries cannot update the dialog state");
  DialogState next = state;
  if (!q.ast.predicate) return next;
  for (const auto& atom : sql::top_level_atoms(*q.ast.predicate)) {
    auto column = ColumnName::normalize(atom.column);
    if (sql::is_relaxation(atom)) {
      next.constraints.erase(column);
      continue;
    }
    Constraint c{atom.op, atom.operands, turn_index};
    auto it = next.constraints.find(column);
    // A carried-over constraint keeps the turn that introduced it.
    if (it != next.constraints.end() && it->second.op == c.op && it->second.operands == c.operands) continue;
    next.constraints[column] = std::move(c);
  }
  return next;
}

DialogState replay_dialog_state(const std::vector<AgentTurn>& turns) {
  DialogState state;
  for (const auto& turn : turns) {
    if (!turn.query) continue;
    if (turn.table_id != state.active_table) state = DialogState{turn.table_id, {}};
    state = update_dialog_state(state, *turn.query, turn.turn_index);
  }
  return state;
}

void AgentOptions::validate() const {
  if (max_iterations < 1) throw ConfigError("agent.max_iterations must be at least 1");
  if (!(switch_margin >= 1.0)) throw ConfigError("agent.switch_margin must be at least 1");
}

std::string render_state(const DialogState& state) {
  if (state.constraints.empty()) return "(empty)";
  std::vector<std::string> parts;
  for (const auto& [column, c] : state.constraints) parts.push_back(sql::render(sql::Atom{column.str(), c.op, c.operands}));
  return text::join(parts, "; ");
}

AgentTurn step(Session& session, std::string_view utterance, const AgentEngine& engine) {
  const auto question = text::trim(utterance);
  if (question.empty()) throw PreconditionError("utterance is empty");
  AgentTurn turn;
  turn.turn_index = session.turns.empty() ? 1 : session.turns.back().turn_index + 1;
  turn.utterance = question;
  turn.state_after = session.dialog_state;

  auto finish = [&]() -> AgentTurn {
    session.turns.push_back(turn);
    session.routing_history.push_back(turn.table_id);
    session.dialog_state = turn.state_after;
    return turn;
  };
  auto respond = [&](std::string thought, std::string response) {
    turn.thought = std::move(thought);
    turn.action = AgentAction{"respond", {}};
    turn.response = std::move(response);
    turn.trace.push_back(AgentStep{turn.thought, turn.action, std::nullopt});
  };

  std::optional<std::string> current;
  if (!session.dialog_state.active_table.empty()) current = session.dialog_state.active_table;
  RouteDecision route;
  try {
    route = route_table(question, engine.tables, current, engine.options.switch_margin);
  } catch (const RoutingError&) {
    std::map<std::string, double> zero;
    for (const auto& t : engine.tables) zero[t.table_id] = 0;
    respond("No table shares a term with the question (" + describe_scores(zero) + "); asking for clarification.",
            kRoutingClarification);
    return finish();
  }

  // Routed table first, then the other tables that overlap, best first.
  std::vector<std::string> candidates{route.table_id};
  {
    std::vector<std::pair<double, std::string>> others;
    for (const auto& [id, s] : route.scores)
      if (id != route.table_id && s > 0) others.emplace_back(-s, id);
    std::sort(others.begin(), others.end());
    for (const auto& [s, id] : others) candidates.push_back(id);
  }

  int calls = 0;
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const auto& table_id = candidates[ci];
    const auto entry = std::find_if(engine.tables.begin(), engine.tables.end(),
                                    [&](const TableEntry& t) { return t.table_id == table_id; });
    if (calls >= engine.options.max_iterations)
      throw AgentBudgetError("tool-call budget of " + std::to_string(engine.options.max_iterations) +
                                 " exhausted for one utterance",
                             turn.trace);
    ++calls;
    const DialogState base = table_id == session.dialog_state.active_table ? session.dialog_state
                                                                           : DialogState{table_id, {}};
    std::string thought = ci == 0 ? "Routed to " + table_id + " (" + describe_scores(route.scores) + ")" +
                                        (route.switched ? ", switching tables and starting a fresh state" : "") +
                                        "."
                                  : "Re-routed to " + table_id + " after an unknown column.";
    GeneratedQuery q;
    try {
      q = text_to_sql(question, entry->schema, entry->catalog, base, engine.gateway, engine.text2sql);
    } catch (const SemanticParseError& e) {
      turn.trace.push_back(AgentStep{thought + " The model produced no parseable SQL.",
                                     AgentAction{"query_table", {{"table", table_id}}}, Observation{}});
      turn.table_id = table_id;
      respond("The question could not be turned into a query; asking the user to rephrase.",
              "I could not turn that into a query. Could you rephrase it?");
      return finish();
    }
    AgentAction action{"query_table", {{"table", table_id}, {"sql", sql::render(q.ast)}}};
    if (!q.executable()) {
      bool unknown_column = std::any_of(q.report.issues.begin(), q.report.issues.end(),
                                        [](const Issue& i) { return i.kind == IssueKind::unknown_column; });
      turn.trace.push_back(AgentStep{thought + " The query was rejected by validation.", action, Observation{}});
      if (unknown_column && ci + 1 < candidates.size()) continue;
      turn.table_id = table_id;
      respond("Validation rejected the query (" + std::to_string(q.report.issues.size()) +
                  " issue(s)); asking for clarification and keeping the state.",
              clarify_issues(q.report));
      return finish();
    }

    auto rs = execute(q, entry->schema, engine.store);
    Observation obs;
    obs.row_count = rs.rows.size();
    for (const auto& c : rs.columns) obs.columns.push_back(c.name);
    for (std::size_t i = 0; i < rs.rows.size() && i < engine.options.sample_rows; ++i)
      obs.sample_rows.push_back(rs.rows[i]);

    thought += " Compiled the question to SQL (" + std::string(to_string(q.report.status)) + ")";
    if (!q.report.repairs.empty()) {
      std::vector<std::string> fixes;
      for (const auto& r : q.report.repairs) fixes.push_back("'" + r.before + "' -> '" + r.after + "'");
      thought += " after repairing " + text::join(fixes, ", ");
    }
    thought += " and queried the joined view.";

    turn.table_id = table_id;
    turn.thought = thought;
    turn.action = action;
    turn.observation = obs;
    turn.state_after = update_dialog_state(base, q, turn.turn_index);
    turn.query = q;
    turn.trace.push_back(AgentStep{thought, action, obs});

    std::string response;
    if (obs.row_count == 0) {
      response = "No items in " + table_id + " match " +
                 (turn.state_after.constraints.empty() ? std::string("that request")
                                                       : render_state(turn.state_after)) +
                 ". Try relaxing a constraint.";
    } else {
      response = "Found " + std::to_string(obs.row_count) + " matching item" + (obs.row_count == 1 ? "" : "s") +
                 " in " + table_id + ".";
      std::vector<std::string> labels;
      for (const auto& row : obs.sample_rows) labels.push_back(item_label(rs, row, entry->schema));
      response += (obs.row_count > obs.sample_rows.size() ? " First " + std::to_string(labels.size()) + ": "
                                                          : " They are: ") +
                  text::join(labels, ", ") + ".";
    }
    turn.response = response;
    return finish();
  }
  throw ContractError("agent loop ended without a response");
}

std::string format_turn(const AgentTurn& turn) {
  std::string out = "[" + std::to_string(turn.turn_index) + "] > " + turn.utterance + "\n";
  out += "Thought: " + turn.thought + "\n";
  out += "Action: " + turn.action.tool;
  if (!turn.action.arguments.empty()) {
    std::vector<std::string> args;
    for (const auto& [k, v] : turn.action.arguments) args.push_back(k + "=" + v);
    out += "(" + text::join(args, ", ") + ")";
  }
  out += "\n";
  if (turn.observation) out += "Observation: " + std::to_string(turn.observation->row_count) + " row(s)\n";
  if (turn.response) out += "Response: " + *turn.response + "\n";
  out += "State: " + render_state(turn.state_after) + "\n";
  return out;
}

SessionStore::SessionStore(std::string directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw StoreError("cannot create session directory '" + dir_ + "': " + ec.message());
}

std::string SessionStore::path_of(const std::string& session_id) const {
  return (fs::path(dir_) / (session_id + ".jsonl")).string();
}

Session SessionStore::create() {
  std::lock_guard lock(mutex_);
  std::size_t next = 1;
  for (const auto& e : fs::directory_iterator(dir_)) {
    auto name = e.path().filename().string();
    if (name.size() == 13 && name[0] == 's' && name.ends_with(".jsonl")) {
      auto digits = name.substr(1, 6);
      if (std::all_of(digits.begin(), digits.end(), ::isdigit)) next = std::max(next, std::stoul(digits) + 1);
    }
  }
  char id[16];
  std::snprintf(id, sizeof id, "s%06zu", next);
  Session s;
  s.session_id = id;
  std::ofstream out(path_of(s.session_id));
  if (!out) throw StoreError("cannot create session file for " + s.session_id);
  out << nlohmann::json{{"record", "session"}, {"session_id", s.session_id}}.dump() << "\n";
  return s;
}

void SessionStore::append(const Session& session, const AgentTurn& turn) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_of(session.session_id), std::ios::app);
  if (!out) throw StoreError("cannot append to session " + session.session_id);
  out << nlohmann::json{{"record", "turn"}, {"turn", turn}}.dump() << "\n";
  out.flush();
  if (!out) throw StoreError("write failed for session " + session.session_id);
}

bool SessionStore::exists(const std::string& session_id) const {
  if (session_id.empty() || session_id.find_first_of("/\\.") != std::string::npos) return false;
  return fs::exists(path_of(session_id));
}

Session SessionStore::load(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  if (!exists(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
  std::ifstream in(path_of(session_id));
  Session s;
  s.session_id = session_id;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto doc = nlohmann::json::parse(line);
    if (doc.value("record", "") != "turn") continue;
    auto turn = doc.at("turn").get<AgentTurn>();
    s.routing_history.push_back(turn.table_id);
    s.turns.push_back(std::move(turn));
  }
  if (!s.turns.empty()) s.dialog_state = s.turns.back().state_after;
  return s;
}

}  // namespace dir
