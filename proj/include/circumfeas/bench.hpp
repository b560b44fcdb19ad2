#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "circumfeas/instance_gen.hpp"
#include "circumfeas/methods.hpp"

namespace circumfeas {

enum class StopPolicy {
  Interior,   // gap to E1 below 1e-6, budget 10000
  Singleton,  // distance to the known solution below 1e-3, budget 500000
};

std::string_view to_string(StopPolicy p);
std::optional<StopPolicy> parse_policy(std::string_view s);

struct PolicyParams {
  double eps;
  std::uint64_t budget;
};

PolicyParams policy_defaults(StopPolicy p);

/// The stopping criteria a policy applies to one instance.
std::vector<StoppingCriterion<double>> policy_criteria(StopPolicy p, const PolicyParams& params,
                                                       const EllipsoidInstance& inst);

struct RunRecord {
  MethodKind method = MethodKind::CCRM;
  std::string instance_id;
  int instance_index = 0;
  std::uint64_t projections = 0;
  std::uint64_t iterations = 0;
  std::string stop_reason;
  double final_residual = 0.0;  // gap (interior) or distance to the solution (singleton)
  double wall_ms = 0.0;
  bool solved = false;
};

struct MethodStatistics {
  MethodKind method = MethodKind::CCRM;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // n - 1 denominator; 0 with single_sample set for one record
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  bool single_sample = false;
};

/// fractions[t][m]: share of instances where method m costs at most taus[t] times the best.
struct ProfileTable {
  std::vector<double> taus;
  std::vector<MethodKind> methods;
  std::vector<std::vector<double>> fractions;
  std::size_t excluded_instances = 0;  // no method solved them
};

struct BenchmarkReport {
  std::vector<RunRecord> records;  // ordered by instance, then by method
  std::vector<MethodStatistics> stats;
  ProfileTable profile;
};

struct SuiteOptions {
  StopPolicy policy = StopPolicy::Interior;
  std::optional<double> eps;
  std::optional<std::uint64_t> budget;
  int threads = 1;
  std::vector<double> taus;  // empty selects default_taus()
};

/// Sample statistics of a list of costs.
MethodStatistics summarize(MethodKind method, std::span<const double> costs);

std::vector<double> default_taus();

/// Unsolved runs cost +infinity; instances no method solved are excluded.
ProfileTable performance_profile(std::span<const RunRecord> records, std::span<const MethodKind> methods,
                                 std::span<const double> taus);

/// One run per (instance, method), executed on `threads` workers and reduced in instance order.
BenchmarkReport run_suite(std::span<const EllipsoidInstance> instances, std::span<const MethodKind> methods,
                          const SuiteOptions& options);

/// Per-method statistics recomputed from records (budget-exhausted runs count their budget).
std::vector<MethodStatistics> statistics_from_records(std::span<const RunRecord> records,
                                                      std::span<const MethodKind> methods);

/// Worker count from CIRCUMFEAS_THREADS, else the available parallelism.
int default_thread_count();

}  // namespace circumfeas
