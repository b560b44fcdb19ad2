#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace circumfeas {

enum class AuditCheck {
  Centralized,  // centralize output is centralized; non-strict outputs lie in X cap Y
  Qne,          // quasi-nonexpansiveness chains and Fejer monotonicity
  Oracle,       // pCRM at centralized points equals the projection onto S_X cap S_Y; fixed points
  Rates,        // tail ratios on halfspace pairs against the error-bound rate constants
  Eb,           // error-bound estimator sanity cases
};

std::string_view to_string(AuditCheck c);

/// Parses a comma list such as "centralized,qne". Throws std::invalid_argument on unknown names.
std::vector<AuditCheck> parse_checks(std::string_view list);

struct AuditConfig {
  std::vector<AuditCheck> checks;
  std::uint64_t seed = 1234;
  int dim = 100;
  int draws = 1000;  // (set pair, point) draws per randomized check, spread over the families
};

struct AuditViolation {
  std::string check;
  std::string family;
  std::size_t draw = 0;
  std::optional<std::size_t> iterate;
  double residual = 0.0;  // amount by which the inequality fails
  std::string detail;
};

struct AuditCheckSummary {
  std::string check;
  std::size_t evaluations = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // largest residual seen, negative when every case held with room
};

struct AuditReport {
  std::uint64_t seed = 0;
  int dim = 0;
  std::vector<AuditCheckSummary> summaries;
  std::vector<AuditViolation> violations;

  bool passed() const { return violations.empty(); }
};

AuditReport run_audit(const AuditConfig& config);

nlohmann::json audit_report_json(const AuditReport& report);

}  // namespace circumfeas
