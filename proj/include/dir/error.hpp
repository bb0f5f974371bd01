#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dir {

enum class ErrorKind {
  name,
  schema,
  integrity,
  config,
  budget,
  provider,
  extraction_parse,
  grounding,
  store_limit,
  store,
  parse,
  semantic_parse,
  contract,
  routing,
  agent_budget,
  spec,
  precondition,
  not_found,
};

std::string_view to_string(ErrorKind kind);

// User errors map to CLI exit code 1 and HTTP 4xx; everything else is internal.
bool is_user_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class NameError : public Error {
 public:
  explicit NameError(const std::string& message) : Error(ErrorKind::name, message) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error(ErrorKind::schema, message) {}
};

class IntegrityError : public Error {
 public:
  IntegrityError(const std::string& message, std::vector<std::string> keys)
      : Error(ErrorKind::integrity, message), keys_(std::move(keys)) {}

  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::config, message) {}
};

class BudgetError : public Error {
 public:
  BudgetError(std::size_t estimate, std::size_t limit, const std::string& advice = {});

  std::size_t estimate() const noexcept { return estimate_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t estimate_;
  std::size_t limit_;
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, int attempts)
      : Error(ErrorKind::provider, message), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class ExtractionParseError : public Error {
 public:
  explicit ExtractionParseError(const std::string& message)
      : Error(ErrorKind::extraction_parse, message) {}
};

class GroundingError : public Error {
 public:
  explicit GroundingError(const std::string& message) : Error(ErrorKind::grounding, message) {}
};

class StoreLimitError : public Error {
 public:
  StoreLimitError(std::size_t limit, std::size_t requested);

  std::size_t limit() const noexcept { return limit_; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t limit_;
  std::size_t requested_;
};

class StoreError : public Error {
 public:
  explicit StoreError(const std::string& message) : Error(ErrorKind::store, message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position, bool unsupported = false);

  std::size_t position() const noexcept { return position_; }
  // True when the input is well-formed SQL outside the supported subset.
  bool unsupported() const noexcept { return unsupported_; }

 private:
  std::size_t position_;
  bool unsupported_;
};

class SemanticParseError : public Error {
 public:
  SemanticParseError(const std::string& message, std::string raw_completion)
      : Error(ErrorKind::semantic_parse, message), raw_completion_(std::move(raw_completion)) {}

  const std::string& raw_completion() const noexcept { return raw_completion_; }

 private:
  std::string raw_completion_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message) : Error(ErrorKind::contract, message) {}
};

class RoutingError : public Error {
 public:
  explicit RoutingError(const std::string& message) : Error(ErrorKind::routing, message) {}
};

class SpecError : public Error {
 public:
  explicit SpecError(const std::string& message) : Error(ErrorKind::spec, message) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& message)
      : Error(ErrorKind::precondition, message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message) : Error(ErrorKind::not_found, message) {}
};

}  // namespace dir
