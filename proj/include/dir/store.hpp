#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/model.hpp"

struct sqlite3;

namespace dir {

struct ResultColumn {
  std::string name;
  std::optional<ValueKind> kind;

  friend bool operator==(const ResultColumn&, const ResultColumn&) = default;
};

struct ResultSet {
  std::vector<ResultColumn> columns;
  std::vector<Row> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

struct StoreOptions {
  // Configured per-table column ceiling; the engine's own limit also applies.
  std::size_t max_columns = 2048;
  bool read_only = false;
};

// Embedded SQL store (SQLite). The connection is opened in serialized mode so
// one handle may be shared across threads.
class Store {
 public:
  explicit Store(const std::string& path, StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  static Store in_memory(StoreOptions options = {}) { return Store(":memory:", options); }
  Store(Store&& other) noexcept;

  const std::string& path() const noexcept { return path_; }
  // min(configured, engine) columns per table.
  std::size_t max_columns() const;
  std::size_t configured_max_columns() const noexcept { return options_.max_columns; }

  void exec(const std::string& sql);
  // Bound parameters are positional (?1, ?2, ...).
  ResultSet query(const std::string& sql, const std::vector<Value>& params = {}) const;
  // Rejects any statement that could write. Throws ContractError.
  ResultSet query_read_only(const std::string& sql) const;
  void insert_rows(const std::string& table, std::size_t width, const std::vector<Row>& rows);

  bool has_table(const std::string& name) const;
  bool has_view(const std::string& name) const;
  std::vector<std::string> object_names() const;

  // Canonical text dump of every table and view, ordered by name and rowid.
  std::string dump() const;
  std::string checksum() const;

  class Transaction {
   public:
    explicit Transaction(Store& store);
    ~Transaction();
    void commit();
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;

   private:
    Store& store_;
    bool done_ = false;
  };

 private:
  std::string path_;
  StoreOptions options_;
  sqlite3* db_ = nullptr;
  // Serializes multi-statement operations such as transactions.
  mutable std::unique_ptr<std::recursive_mutex> mutex_;
};

}  // namespace dir
