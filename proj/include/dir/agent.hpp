#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/error.hpp"
#include "dir/llm.hpp"
#include "dir/model.hpp"
#include "dir/store.hpp"
#include "dir/tablegen.hpp"
#include "dir/text2sql.hpp"

namespace dir {

struct RouteDecision {
  std::string table_id;
  // Table id -> overlap score, for the thought log.
  std::map<std::string, double> scores;
  bool switched = false;
};

// Distinct question tokens (stopwords removed, plural tolerant) found in a
// table's vocabulary: its id, domain, column names and enumerated values.
double route_score(std::string_view question, const TableEntry& table);

// Argmax of route_score, ties to the smaller table id. With `current` set the
// session only moves when another table beats it by `switch_margin` times.
// Throws RoutingError when nothing overlaps and no table is current.
RouteDecision route_table(std::string_view question, const std::vector<TableEntry>& tables,
                          const std::optional<std::string>& current = std::nullopt,
                          double switch_margin = 2.0);

// Promotes top-level AND atoms of a valid or repaired query into the state; a
// relaxation atom deletes its column. Throws ContractError for rejected queries.
DialogState update_dialog_state(const DialogState& state, const GeneratedQuery& q, int turn_index);

struct Observation {
  std::size_t row_count = 0;
  std::vector<std::string> columns;
  std::vector<Row> sample_rows;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct AgentAction {
  std::string tool;  // "query_table" or "respond"
  std::map<std::string, std::string> arguments;

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

struct AgentStep {
  std::string thought;
  AgentAction action;
  std::optional<Observation> observation;

  friend bool operator==(const AgentStep&, const AgentStep&) = default;
};

struct AgentTurn {
  int turn_index = 0;
  std::string utterance;
  std::string table_id;
  std::string thought;
  AgentAction action;
  std::optional<Observation> observation;
  std::optional<std::string> response;
  // The query behind the state update; absent when the turn left state alone.
  std::optional<GeneratedQuery> query;
  DialogState state_after;
  std::vector<AgentStep> trace;

  friend bool operator==(const AgentTurn&, const AgentTurn&) = default;
};

struct Session {
  std::string session_id;
  // Table chosen at each turn ("" when routing failed).
  std::vector<std::string> routing_history;
  DialogState dialog_state;
  std::vector<AgentTurn> turns;

  friend bool operator==(const Session&, const Session&) = default;
};

// Fold of update_dialog_state over the turns' queries. A change of table
// starts from an empty state.
DialogState replay_dialog_state(const std::vector<AgentTurn>& turns);

class AgentBudgetError : public Error {
 public:
  AgentBudgetError(const std::string& message, std::vector<AgentStep> partial_trace)
      : Error(ErrorKind::agent_budget, message), trace_(std::move(partial_trace)) {}

  const std::vector<AgentStep>& partial_trace() const noexcept { return trace_; }

 private:
  std::vector<AgentStep> trace_;
};

struct AgentOptions {
  // Tool calls allowed per user utterance.
  int max_iterations = 3;
  double switch_margin = 2.0;
  std::size_t sample_rows = 5;

  void validate() const;
};

struct AgentEngine {
  const Store& store;
  std::vector<TableEntry> tables;
  const llm::Gateway& gateway;
  AgentOptions options;
  Text2SqlOptions text2sql;
};

// One ReAct cycle for a user utterance: route, compile, query, observe,
// respond, update state. Appends the turn to the session and returns it.
AgentTurn step(Session& session, std::string_view utterance, const AgentEngine& engine);

// Plain-text transcript block for one turn, shared by the CLI and the service.
std::string format_turn(const AgentTurn& turn);
std::string render_state(const DialogState& state);

// Append-only JSONL persistence, one file per session.
class SessionStore {
 public:
  explicit SessionStore(std::string directory);

  const std::string& directory() const noexcept { return dir_; }
  // New empty session with the next sequential id ("s000001", ...).
  Session create();
  void append(const Session& session, const AgentTurn& turn);
  bool exists(const std::string& session_id) const;
  // Throws NotFoundError for unknown ids.
  Session load(const std::string& session_id) const;

 private:
  std::string path_of(const std::string& session_id) const;

  std::string dir_;
  mutable std::mutex mutex_;
};

}  // namespace dir
