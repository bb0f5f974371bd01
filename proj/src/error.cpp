#include "dir/error.hpp"

namespace dir {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::name: return "name_error";
    case ErrorKind::schema: return "schema_error";
    case ErrorKind::integrity: return "integrity_error";
    case ErrorKind::config: return "config_error";
    case ErrorKind::budget: return "budget_error";
    case ErrorKind::provider: return "provider_error";
    case ErrorKind::extraction_parse: return "extraction_parse_error";
    case ErrorKind::grounding: return "grounding_error";
    case ErrorKind::store_limit: return "store_limit_error";
    case ErrorKind::store: return "store_error";
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::semantic_parse: return "semantic_parse_error";
    case ErrorKind::contract: return "contract_error";
    case ErrorKind::routing: return "routing_error";
    case ErrorKind::agent_budget: return "agent_budget_error";
    case ErrorKind::spec: return "spec_error";
    case ErrorKind::precondition: return "precondition_error";
    case ErrorKind::not_found: return "not_found";
  }
  return "unknown";
}

bool is_user_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::provider:
    case ErrorKind::store:
    case ErrorKind::agent_budget:
    case ErrorKind::semantic_parse:
      return false;
    default:
      return true;
  }
}

BudgetError::BudgetError(std::size_t estimate, std::size_t limit, const std::string& advice)
    : Error(ErrorKind::budget,
            "prompt estimate of " + std::to_string(estimate) + " tokens exceeds limit of " +
                std::to_string(limit) + (advice.empty() ? "" : "; " + advice)),
      estimate_(estimate),
      limit_(limit) {}

StoreLimitError::StoreLimitError(std::size_t limit, std::size_t requested)
    : Error(ErrorKind::store_limit,
            "table needs " + std::to_string(requested) + " columns but the store allows at most " +
                std::to_string(limit)),
      limit_(limit),
      requested_(requested) {}

ParseError::ParseError(const std::string& message, std::size_t position, bool unsupported)
    : Error(ErrorKind::parse, message + " at position " + std::to_string(position)),
      position_(position),
      unsupported_(unsupported) {}

}  // namespace dir
