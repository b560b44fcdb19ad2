#include "circumfeas/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "circumfeas/audit.hpp"
#include "circumfeas/bench.hpp"
#include "circumfeas/instance_gen.hpp"
#include "circumfeas/io.hpp"
#include "circumfeas/methods.hpp"

namespace circumfeas {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<MethodKind> parse_method_list(const std::string& list) {
  std::vector<MethodKind> out;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto m = parse_method(name);
    if (!m) throw UsageError("unknown method '" + name + "'");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw UsageError("empty method list");
  return out;
}

std::string run_line(std::string_view method, const std::string& id, std::uint64_t projections,
                     std::uint64_t iterations, std::string_view stop, double residual) {
  std::ostringstream os;
  os << method << ' ' << id << " projections=" << projections << " iterations=" << iterations << " stop=" << stop
     << " residual=" << format_double(residual);
  return os.str();
}

struct GenArgs {
  std::uint64_t seed = 1234;
  int dim = 100;
  int count = 30;
  double lambda = 1.1;
  double gamma = 1.0;
  double sparsity = 0.0;
  std::string out = "instances";
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  GeneratorConfig cfg;
  cfg.n = a.dim;
  cfg.count = a.count;
  cfg.lambda = a.lambda;
  cfg.gamma = a.gamma;
  cfg.sparsity = a.sparsity;
  cfg.seed = a.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> files;
  for (int i = 0; i < cfg.count; ++i) {
    const auto inst = gen_ellipsoid_pair(cfg, i);
    const std::string file = inst.id() + ".json";
    write_file_atomic(fs::path(a.out) / file, instance_to_json(inst).dump() + "\n");
    files.push_back(file);
    out << inst.id() << " n=" << inst.n << " lambda=" << format_double(inst.lambda) << " file=" << file << '\n';
  }
  write_file_atomic(fs::path(a.out) / "manifest.json", manifest_to_json(cfg, files).dump(2) + "\n");
  return kExitOk;
}

struct SolveArgs {
  std::string instance;
  std::string method = "ccrm";
  std::string policy = "interior";
  double eps = 1e-6;
  std::uint64_t budget = 10000;
  std::string out;
  std::string format = "csv";
  bool coords = false;
};

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const auto method = parse_method(a.method);
  const auto policy = parse_policy(a.policy);
  if (!method || !policy) throw UsageError("bad method or policy");
  if (!(a.eps > 0.0) || a.budget < 1) throw UsageError("eps and budget must be positive");
  EllipsoidInstance inst = [&] {
    try {
      return instance_from_json(nlohmann::json::parse(read_file(a.instance)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(a.instance + ": " + e.what());
    } catch (const SchemaError& e) {
      throw IoError(a.instance + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw IoError(a.instance + ": " + e.what());
    }
  }();
  std::vector<StoppingCriterion<double>> stop;
  try {
    stop = policy_criteria(*policy, PolicyParams{a.eps, a.budget}, inst);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto r = run(*method, inst.E1, inst.E2, inst.z0, stop);
  const double residual = *policy == StopPolicy::Interior ? r.gaps.back() : r.solution_distances.back();
  out << run_line(to_string(r.method), inst.id(), r.total_projections, r.iterations(), to_string(r.stop_reason),
                  residual)
      << '\n';
  if (!a.out.empty()) {
    const fs::path base = fs::path(a.out) / (inst.id() + "_" + std::string(to_string(r.method)));
    if (a.format == "json") {
      write_file_atomic(base.string() + ".json", run_summary_json(r, inst.id()).dump(2) + "\n");
    } else {
      write_file_atomic(base.string() + ".csv", run_trajectory_csv(r, a.coords));
    }
  }
  if (r.stop_reason == StopReason::RankDeficient) {
    err << "solver aborted: " << r.diagnostic << '\n';
    return kExitSolverAbort;
  }
  return kExitOk;
}

struct AuditArgs {
  std::string checks = "centralized,qne,oracle,rates,eb";
  std::uint64_t seed = 1234;
  int dim = 100;
  int draws = 1000;
  std::string out;
};

int cmd_audit(const AuditArgs& a, std::ostream& out) {
  AuditConfig cfg;
  try {
    cfg.checks = parse_checks(a.checks);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.seed = a.seed;
  cfg.dim = a.dim;
  cfg.draws = a.draws;
  if (cfg.dim < 2 || cfg.draws < 1) throw UsageError("audit needs dim >= 2 and draws >= 1");
  const auto report = run_audit(cfg);
  const std::string text = audit_report_json(report).dump(2) + "\n";
  if (!a.out.empty()) write_file_atomic(fs::path(a.out) / "audit.json", text);
  out << text;
  return report.passed() ? kExitOk : kExitAuditViolation;
}

struct BenchArgs {
  std::string suite = "interior";
  std::uint64_t seed = 1234;
  int dim = 100;
  int count = 30;
  std::optional<double> lambda;
  std::optional<double> eps;
  std::optional<std::uint64_t> budget;
  std::string methods = "ccrm,map,crmprod";
  int threads = 0;
  std::string out = "results";
  std::string format = "csv";
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const auto policy = parse_policy(a.suite);
  if (!policy) throw UsageError("unknown suite '" + a.suite + "'");
  GeneratorConfig cfg;
  cfg.n = a.dim;
  cfg.count = a.count;
  cfg.lambda = a.lambda.value_or(*policy == StopPolicy::Interior ? 1.1 : 1.0);
  cfg.seed = a.seed;
  SuiteOptions opts;
  opts.policy = *policy;
  opts.eps = a.eps;
  opts.budget = a.budget;
  opts.threads = a.threads > 0 ? a.threads : default_thread_count();
  if ((a.eps && !(*a.eps > 0.0)) || (a.budget && *a.budget < 1)) throw UsageError("eps and budget must be positive");
  const auto methods = parse_method_list(a.methods);

  std::vector<EllipsoidInstance> instances;
  try {
    cfg.validate();
    instances = gen_ellipsoid_suite(cfg);
    (void)policy_criteria(*policy, policy_defaults(*policy), instances.front());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto report = run_suite(instances, methods, opts);
  for (const auto& r : report.records) {
    out << run_line(to_string(r.method), r.instance_id, r.projections, r.iterations, r.stop_reason, r.final_residual)
        << '\n';
  }
  for (const auto& s : report.stats) {
    out << "summary " << to_string(s.method) << " count=" << s.count << " median=" << format_double(s.median)
        << " mean=" << format_double(s.mean) << " min=" << format_double(s.min) << " max=" << format_double(s.max)
        << '\n';
  }
  const fs::path dir(a.out);
  if (a.format == "json") {
    write_file_atomic(dir / "report.json", report_json(report).dump(2) + "\n");
  } else {
    write_file_atomic(dir / "records.csv", records_csv(report.records));
    write_file_atomic(dir / "timings.csv", timings_csv(report.records));
    write_file_atomic(dir / "stats.csv", stats_csv(report.stats));
    write_file_atomic(dir / "profile.csv", profile_csv(report.profile));
  }
  return kExitOk;
}

struct ProfileArgs {
  std::string records;
  std::string methods;
  std::string out = ".";
  std::string format = "csv";
};

int cmd_profile(const ProfileArgs& a, std::ostream& out) {
  std::vector<RunRecord> records;
  try {
    records = parse_records_csv(read_file(a.records));
  } catch (const SchemaError& e) {
    throw IoError(a.records + ": " + e.what());
  }
  if (records.empty()) throw IoError(a.records + ": no records");
  std::vector<MethodKind> methods;
  if (!a.methods.empty()) {
    methods = parse_method_list(a.methods);
  } else {
    for (const auto& r : records) {
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }
  }
  BenchmarkReport report;
  report.stats = statistics_from_records(records, methods);
  report.profile = performance_profile(records, methods, default_taus());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << "profile " << to_string(methods[m]) << " rho(1)=" << format_double(report.profile.fractions.front()[m])
        << '\n';
  }
  const fs::path dir(a.out);
  if (a.format == "json") {
    auto j = report_json(report);
    j.erase("records");
    write_file_atomic(dir / "profile.json", j.dump(2) + "\n");
  } else {
    write_file_atomic(dir / "profile.csv", profile_csv(report.profile));
    write_file_atomic(dir / "stats.csv", stats_csv(report.stats));
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circumcentered-reflection solvers for two-set convex feasibility", "circumfeas"};
  app.require_subcommand(1);
  const std::vector<std::string> formats{"csv", "json"};
  const std::vector<std::string> method_names{"map", "spm", "crm", "pcrm", "crmprod", "ccrm"};
  const std::vector<std::string> suites{"interior", "singleton"};

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a seeded suite of two-ellipsoid instances");
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--dim", gen.dim, "Ambient dimension")->capture_default_str();
  g->add_option("--count", gen.count, "Number of instances")->capture_default_str();
  g->add_option("--lambda", gen.lambda, "Overlap factor (1 gives tangent ellipsoids)")->capture_default_str();
  g->add_option("--gamma", gen.gamma, "Diagonal shift of the first ellipsoid matrix")->capture_default_str();
  g->add_option("--sparsity", gen.sparsity, "Density of the random factor (0 selects 2/n)")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->capture_default_str();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run one method on one instance file");
  s->add_option("--instance", solve.instance, "Instance JSON file")->required();
  s->add_option("--method", solve.method, "Method")->check(CLI::IsMember(method_names))->capture_default_str();
  s->add_option("--policy", solve.policy, "Stopping policy")->check(CLI::IsMember(suites))->capture_default_str();
  s->add_option("--eps", solve.eps, "Stopping tolerance")->capture_default_str();
  s->add_option("--budget", solve.budget, "Projection budget")->capture_default_str();
  s->add_option("--out", solve.out, "Directory for the trajectory or summary");
  s->add_option("--format", solve.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
  s->add_flag("--coords", solve.coords, "Include iterate coordinates in the trajectory CSV");

  AuditArgs audit;
  auto* au = app.add_subcommand("audit", "Check the convergence lemmas on random draws");
  au->add_option("--checks", audit.checks, "Comma list of centralized,qne,oracle,rates,eb")->capture_default_str();
  au->add_option("--seed", audit.seed, "Random seed")->capture_default_str();
  au->add_option("--dim", audit.dim, "Ambient dimension")->capture_default_str();
  au->add_option("--draws", audit.draws, "Randomized draws")->capture_default_str();
  au->add_option("--out", audit.out, "Directory for audit.json");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a seeded benchmark suite");
  b->add_option("--suite", bench.suite, "interior or singleton")->check(CLI::IsMember(suites))->capture_default_str();
  b->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  b->add_option("--dim", bench.dim, "Ambient dimension")->capture_default_str();
  b->add_option("--count", bench.count, "Number of instances")->capture_default_str();
  b->add_option("--lambda", bench.lambda, "Overlap factor (default 1.1 interior, 1.0 singleton)");
  b->add_option("--eps", bench.eps, "Tolerance (default 1e-6 interior, 1e-3 singleton)");
  b->add_option("--budget", bench.budget, "Projection budget (default 10000 interior, 500000 singleton)");
  b->add_option("--methods", bench.methods, "Comma list of methods")->capture_default_str();
  b->add_option("--threads", bench.threads, "Worker threads (default CIRCUMFEAS_THREADS or all cores)");
  b->add_option("--out", bench.out, "Output directory")->capture_default_str();
  b->add_option("--format", bench.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();

  ProfileArgs profile;
  auto* p = app.add_subcommand("profile", "Recompute statistics and the performance profile from records.csv");
  p->add_option("--records", profile.records, "records.csv from bench")->required();
  p->add_option("--methods", profile.methods, "Comma list of methods (default: those in the file)");
  p->add_option("--out", profile.out, "Output directory")->capture_default_str();
  p->add_option("--format", profile.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen, out);
    if (*s) return cmd_solve(solve, out, err);
    if (*au) return cmd_audit(audit, out);
    if (*b) return cmd_bench(bench, out);
    return cmd_profile(profile, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace circumfeas
