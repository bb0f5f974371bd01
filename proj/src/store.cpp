#include "dir/store.hpp"

#include <sqlite3.h>

#include <algorithm>

#include "dir/error.hpp"
#include "dir/sql.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace {

struct StatementDeleter {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Statement = std::unique_ptr<sqlite3_stmt, StatementDeleter>;

Statement prepare(sqlite3* db, const std::string& sql) {
  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &raw, &tail) != SQLITE_OK)
    throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db) + " in: " + sql);
  Statement stmt(raw);
  if (tail && !text::trim(tail).empty()) {
    std::string rest = text::trim(tail);
    if (rest != ";") throw ContractError("multiple statements are not allowed");
  }
  return stmt;
}

void bind(sqlite3_stmt* stmt, int index, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) sqlite3_bind_null(stmt, index);
        else if constexpr (std::is_same_v<T, double>) sqlite3_bind_double(stmt, index, x);
        else if constexpr (std::is_same_v<T, bool>) sqlite3_bind_int(stmt, index, x ? 1 : 0);
        else sqlite3_bind_text(stmt, index, x.data(), static_cast<int>(x.size()), SQLITE_TRANSIENT);
      },
      v);
}

Value column_value(sqlite3_stmt* stmt, int i) {
  switch (sqlite3_column_type(stmt, i)) {
    case SQLITE_NULL: return std::monostate{};
    case SQLITE_INTEGER: return static_cast<double>(sqlite3_column_int64(stmt, i));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, i);
    default: {
      const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
      return std::string(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(stmt, i)));
    }
  }
}

ResultSet run(sqlite3* db, sqlite3_stmt* stmt) {
  ResultSet rs;
  int n = sqlite3_column_count(stmt);
  for (int i = 0; i < n; ++i) rs.columns.push_back(ResultColumn{sqlite3_column_name(stmt, i), {}});
  while (true) {
    int rc = sqlite3_step(stmt);
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) throw StoreError(std::string("step failed: ") + sqlite3_errmsg(db));
    Row row;
    row.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) row.push_back(column_value(stmt, i));
    rs.rows.push_back(std::move(row));
  }
  return rs;
}

}  // namespace

std::optional<std::size_t> ResultSet::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

Store::Store(const std::string& path, StoreOptions options)
    : path_(path), options_(options), mutex_(std::make_unique<std::recursive_mutex>()) {
  int flags = SQLITE_OPEN_FULLMUTEX;
  flags |= options.read_only ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw StoreError("cannot open store '" + path + "': " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
}

Store::Store(Store&& other) noexcept
    : path_(std::move(other.path_)),
      options_(other.options_),
      db_(std::exchange(other.db_, nullptr)),
      mutex_(std::move(other.mutex_)) {}

Store::~Store() {
  if (db_) sqlite3_close(db_);
}

std::size_t Store::max_columns() const {
  auto engine = static_cast<std::size_t>(sqlite3_limit(db_, SQLITE_LIMIT_COLUMN, -1));
  return std::min(options_.max_columns, engine);
}

void Store::exec(const std::string& sql) {
  std::lock_guard lock(*mutex_);
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw StoreError(msg + " in: " + sql);
  }
}

ResultSet Store::query(const std::string& sql, const std::vector<Value>& params) const {
  std::lock_guard lock(*mutex_);
  auto stmt = prepare(db_, sql);
  for (std::size_t i = 0; i < params.size(); ++i) bind(stmt.get(), static_cast<int>(i + 1), params[i]);
  return run(db_, stmt.get());
}

ResultSet Store::query_read_only(const std::string& sql) const {
  std::lock_guard lock(*mutex_);
  auto stmt = prepare(db_, sql);
  if (!sqlite3_stmt_readonly(stmt.get())) throw ContractError("statement is not read-only");
  return run(db_, stmt.get());
}

void Store::insert_rows(const std::string& table, std::size_t width, const std::vector<Row>& rows) {
  std::lock_guard lock(*mutex_);
  std::string sql = "INSERT INTO " + sql::quote_identifier(table) + " VALUES (";
  for (std::size_t i = 0; i < width; ++i) sql += i ? ",?" : "?";
  sql += ")";
  auto stmt = prepare(db_, sql);
  for (const auto& row : rows) {
    if (row.size() != width) throw StoreError("row width mismatch inserting into " + table);
    sqlite3_reset(stmt.get());
    sqlite3_clear_bindings(stmt.get());
    for (std::size_t i = 0; i < width; ++i) bind(stmt.get(), static_cast<int>(i + 1), row[i]);
    if (sqlite3_step(stmt.get()) != SQLITE_DONE)
      throw StoreError(std::string("insert failed: ") + sqlite3_errmsg(db_));
  }
}

bool Store::has_table(const std::string& name) const {
  return !query("SELECT 1 FROM sqlite_master WHERE type='table' AND name=?1", {Value{name}}).rows.empty();
}

bool Store::has_view(const std::string& name) const {
  return !query("SELECT 1 FROM sqlite_master WHERE type='view' AND name=?1", {Value{name}}).rows.empty();
}

std::vector<std::string> Store::object_names() const {
  std::vector<std::string> out;
  auto rs = query(
      "SELECT name FROM sqlite_master WHERE type IN ('table','view') AND name NOT LIKE 'sqlite_%' "
      "ORDER BY name");
  for (const auto& row : rs.rows) out.push_back(std::get<std::string>(row[0]));
  return out;
}

std::string Store::dump() const {
  std::lock_guard lock(*mutex_);
  std::string out;
  auto objects = query(
      "SELECT type, name, sql FROM sqlite_master WHERE name NOT LIKE 'sqlite_%' ORDER BY name");
  for (const auto& obj : objects.rows) {
    const auto& type = std::get<std::string>(obj[0]);
    const auto& name = std::get<std::string>(obj[1]);
    out += type + " " + name + "\n" + value_to_text(obj[2]) + "\n";
    if (type != "table") continue;
    auto rows = query("SELECT * FROM " + sql::quote_identifier(name) + " ORDER BY rowid");
    for (const auto& row : rows.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += '\x1f';
        out += is_null(row[i]) ? std::string("\\N") : value_to_text(row[i]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string Store::checksum() const { return text::fnv1a_hex(dump()); }

Store::Transaction::Transaction(Store& store) : store_(store) {
  store_.mutex_->lock();
  store_.exec("BEGIN");
}

Store::Transaction::~Transaction() {
  if (!done_) {
    try {
      store_.exec("ROLLBACK");
    } catch (...) {
    }
  }
  store_.mutex_->unlock();
}

void Store::Transaction::commit() {
  store_.exec("COMMIT");
  done_ = true;
}

}  // namespace dir
