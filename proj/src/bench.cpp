#include "circumfeas/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace circumfeas {

std::string_view to_string(StopPolicy p) { return p == StopPolicy::Interior ? "interior" : "singleton"; }

std::optional<StopPolicy> parse_policy(std::string_view s) {
  if (s == "interior") return StopPolicy::Interior;
  if (s == "singleton") return StopPolicy::Singleton;
  return std::nullopt;
}

PolicyParams policy_defaults(StopPolicy p) {
  return p == StopPolicy::Interior ? PolicyParams{1e-6, 10000} : PolicyParams{1e-3, 500000};
}

std::vector<StoppingCriterion<double>> policy_criteria(StopPolicy p, const PolicyParams& params,
                                                       const EllipsoidInstance& inst) {
  std::vector<StoppingCriterion<double>> stop;
  if (p == StopPolicy::Interior) {
    stop.emplace_back(GapToFirstSet<double>{params.eps});
  } else {
    if (inst.lambda != 1.0 || inst.witness.size() != inst.n) {
      throw std::invalid_argument("singleton policy needs an instance with a known unique solution (lambda = 1)");
    }
    stop.emplace_back(DistanceToKnownSolution<double>{params.eps, inst.witness});
  }
  stop.emplace_back(ProjectionBudget{params.budget});
  return stop;
}

MethodStatistics summarize(MethodKind method, std::span<const double> costs) {
  if (costs.empty()) throw std::invalid_argument("summarize: no records");
  MethodStatistics s;
  s.method = method;
  s.count = costs.size();
  std::vector<double> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = std::accumulate(costs.begin(), costs.end(), 0.0) / double(n);
  if (n == 1) {
    s.single_sample = true;
  } else {
    double ss = 0.0;
    for (double c : costs) ss += (c - s.mean) * (c - s.mean);
    s.stddev = std::sqrt(ss / double(n - 1));
  }
  return s;
}

std::vector<double> default_taus() {
  std::vector<double> taus;
  for (int k = 0; k <= 30; ++k) taus.push_back(std::pow(10.0, k / 10.0));
  taus.front() = 1.0;
  return taus;
}

ProfileTable performance_profile(std::span<const RunRecord> records, std::span<const MethodKind> methods,
                                 std::span<const double> taus) {
  if (records.empty()) throw std::invalid_argument("performance_profile: no records");
  for (double t : taus) {
    if (!(t >= 1.0)) throw std::invalid_argument("performance_profile: tau must be >= 1");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<int> instances;
  for (const auto& r : records) instances.push_back(r.instance_index);
  std::sort(instances.begin(), instances.end());
  instances.erase(std::unique(instances.begin(), instances.end()), instances.end());

  // cost[i][m]
  std::vector<std::vector<double>> cost(instances.size(), std::vector<double>(methods.size(), inf));
  for (const auto& r : records) {
    const auto mi = std::find(methods.begin(), methods.end(), r.method);
    if (mi == methods.end() || !r.solved) continue;
    const auto ii = std::lower_bound(instances.begin(), instances.end(), r.instance_index);
    cost[std::size_t(ii - instances.begin())][std::size_t(mi - methods.begin())] = double(r.projections);
  }

  ProfileTable table;
  table.taus.assign(taus.begin(), taus.end());
  table.methods.assign(methods.begin(), methods.end());
  std::vector<std::vector<double>> ratios;  // per kept instance
  for (const auto& row : cost) {
    const double best = *std::min_element(row.begin(), row.end());
    if (!std::isfinite(best)) {
      ++table.excluded_instances;
      continue;
    }
    std::vector<double> rr;
    for (double c : row) rr.push_back(c / best);
    ratios.push_back(std::move(rr));
  }
  if (table.excluded_instances > 0) {
    std::cerr << "warning: " << table.excluded_instances << " instance(s) unsolved by every method excluded from profile\n";
  }
  for (double tau : taus) {
    std::vector<double> frac(methods.size(), 0.0);
    if (!ratios.empty()) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        std::size_t hit = 0;
        for (const auto& rr : ratios) hit += rr[m] <= tau ? 1 : 0;
        frac[m] = double(hit) / double(ratios.size());
      }
    }
    table.fractions.push_back(std::move(frac));
  }
  return table;
}

std::vector<MethodStatistics> statistics_from_records(std::span<const RunRecord> records,
                                                      std::span<const MethodKind> methods) {
  std::vector<MethodStatistics> out;
  for (MethodKind m : methods) {
    std::vector<double> costs;
    for (const auto& r : records) {
      if (r.method == m) costs.push_back(double(r.projections));
    }
    if (!costs.empty()) out.push_back(summarize(m, costs));
  }
  return out;
}

int default_thread_count() {
  if (const char* env = std::getenv("CIRCUMFEAS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

RunRecord run_one(const EllipsoidInstance& inst, MethodKind method, StopPolicy policy, const PolicyParams& params) {
  RunRecord rec;
  rec.method = method;
  rec.instance_id = inst.id();
  rec.instance_index = inst.index;
  try {
    RunOptions<double> opts;
    opts.keep_iterates = false;
    const auto run_out = run(method, inst.E1, inst.E2, inst.z0, policy_criteria(policy, params, inst), opts);
    rec.projections = run_out.total_projections;
    rec.iterations = run_out.iterations();
    rec.stop_reason = std::string(to_string(run_out.stop_reason));
    rec.final_residual = policy == StopPolicy::Interior ? run_out.gaps.back() : run_out.solution_distances.back();
    rec.wall_ms = run_out.wall_seconds * 1e3;
    rec.solved = converged(run_out.stop_reason);
  } catch (const std::exception& e) {
    rec.stop_reason = "error";
    rec.final_residual = std::numeric_limits<double>::quiet_NaN();
    std::cerr << "run failed: " << to_string(method) << " " << rec.instance_id << ": " << e.what() << "\n";
  }
  return rec;
}

}  // namespace

BenchmarkReport run_suite(std::span<const EllipsoidInstance> instances, std::span<const MethodKind> methods,
                          const SuiteOptions& options) {
  if (instances.empty() || methods.empty()) throw std::invalid_argument("run_suite: empty instance or method list");
  PolicyParams params = policy_defaults(options.policy);
  if (options.eps) params.eps = *options.eps;
  if (options.budget) params.budget = *options.budget;
  // Fail fast on policy misuse before spawning workers.
  for (const auto& inst : instances) (void)policy_criteria(options.policy, params, inst);

  const std::size_t total = instances.size() * methods.size();
  std::vector<RunRecord> records(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      records[k] = run_one(instances[k / methods.size()], methods[k % methods.size()], options.policy, params);
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, int(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  BenchmarkReport report;
  report.records = std::move(records);
  report.stats = statistics_from_records(report.records, methods);
  const std::vector<double> taus = options.taus.empty() ? default_taus() : options.taus;
  report.profile = performance_profile(report.records, methods, taus);
  return report;
}

}  // namespace circumfeas
