#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "circumfeas/cli.hpp"
#include "circumfeas/io.hpp"

using namespace circumfeas;
using nlohmann::json;
using Vec = VectorX<double>;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("circumfeas_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string field(const std::string& line, const std::string& key) {
  const auto at = line.find(key + "=");
  REQUIRE(at != std::string::npos);
  const auto start = at + key.size() + 1;
  return line.substr(start, line.find_first_of(" \n", start) - start);
}

}  // namespace

TEST_CASE("usage errors and help") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"solve"}).code == kExitUsage);
  CHECK(cli({"bench", "--suite", "nowhere"}).code == kExitUsage);
  CHECK(cli({"audit", "--checks", "centralized,bogus"}).code == kExitUsage);
  CHECK(cli({"bench", "--methods", "ccrm,dr"}).code == kExitUsage);
  const auto help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("bench") != std::string::npos);
}

TEST_CASE("gen then solve reproduces the in-process run") {
  const fs::path dir = scratch_dir("gen");
  const auto g = cli({"gen", "--seed", "21", "--dim", "15", "--count", "3", "--out", dir.string()});
  REQUIRE(g.code == kExitOk);
  CHECK(fs::exists(dir / "inst_000.json"));
  CHECK(fs::exists(dir / "inst_002.json"));
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest.at("instances").size() == 3);

  GeneratorConfig cfg;
  cfg.n = 15;
  cfg.count = 3;
  cfg.seed = 21;
  const auto inst = gen_ellipsoid_pair(cfg, 1);
  std::vector<StoppingCriterion<double>> stop{GapToFirstSet<double>{1e-6}, ProjectionBudget{10000}};
  for (MethodKind m : {MethodKind::CCRM, MethodKind::MAP, MethodKind::CRMPROD}) {
    const auto expected = run(m, inst.E1, inst.E2, inst.z0, stop);
    const auto s = cli({"solve", "--instance", (dir / "inst_001.json").string(), "--method", std::string(to_string(m)),
                        "--out", dir.string(), "--format", "json"});
    REQUIRE(s.code == kExitOk);
    CHECK(field(s.out, "projections") == std::to_string(expected.total_projections));
    CHECK(field(s.out, "residual") == format_double(expected.gaps.back()));
    const json summary = json::parse(read_file(dir / ("inst_001_" + std::string(to_string(m)) + ".json")));
    CHECK(summary.at("projections") == expected.total_projections);
  }

  const auto csv = cli({"solve", "--instance", (dir / "inst_000.json").string(), "--out", dir.string(), "--coords"});
  REQUIRE(csv.code == kExitOk);
  CHECK(read_file(dir / "inst_000_ccrm.csv").rfind("iteration,gap,projections,x0,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("solve error exits") {
  const fs::path dir = scratch_dir("solve");
  CHECK(cli({"solve", "--instance", (dir / "absent.json").string()}).code == kExitIo);
  write_file_atomic(dir / "junk.json", "{ not json");
  CHECK(cli({"solve", "--instance", (dir / "junk.json").string()}).code == kExitIo);
  write_file_atomic(dir / "schema.json", "{\"schema\": \"circumfeas.instance/1\"}");
  CHECK(cli({"solve", "--instance", (dir / "schema.json").string()}).code == kExitIo);

  GeneratorConfig cfg;
  cfg.n = 2;
  cfg.count = 1;
  auto inst = gen_ellipsoid_pair(cfg, 0);
  write_file_atomic(dir / "interior.json", instance_to_json(inst).dump());
  // The singleton policy needs a tangent instance.
  CHECK(cli({"solve", "--instance", (dir / "interior.json").string(), "--policy", "singleton"}).code == kExitUsage);
  CHECK(cli({"solve", "--instance", (dir / "interior.json").string(), "--eps", "-1"}).code == kExitUsage);

  // Unit disc and a disc centred at (-1.5, 0), started on the line of centres:
  // z, R_X z, R_Y R_X z are (5,0), (-3,0), (-2,0), so CRM has no circumcenter.
  const MatrixX<double> I = MatrixX<double>::Identity(2, 2);
  Vec c(2);
  c << -1.5, 0;
  inst.E1 = make_ellipsoid_centered<double>(I, Vec::Zero(2));
  inst.E2 = make_ellipsoid_centered<double>(I, c);
  inst.z0 = Vec::Zero(2);
  inst.z0(0) = 5;
  write_file_atomic(dir / "collinear.json", instance_to_json(inst).dump());
  const auto abort = cli({"solve", "--instance", (dir / "collinear.json").string(), "--method", "crm"});
  CHECK(abort.code == kExitSolverAbort);
  CHECK(abort.err.find("solver aborted") != std::string::npos);
  CHECK(field(abort.out, "projections") == "0");
  fs::remove_all(dir);
}

TEST_CASE("audit subcommand") {
  const fs::path dir = scratch_dir("audit");
  const auto a = cli({"audit", "--checks", "centralized,qne", "--seed", "7", "--dim", "8", "--draws", "200", "--out",
                      dir.string()});
  CHECK(a.code == kExitOk);
  const json report = json::parse(a.out);
  CHECK(report.at("seed") == 7);
  CHECK(report.at("passed") == true);
  CHECK(report.at("violations").empty());
  CHECK(json::parse(read_file(dir / "audit.json")) == report);
  CHECK(cli({"audit", "--dim", "1"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("bench and profile") {
  const fs::path dir = scratch_dir("bench");
  const auto b = cli({"bench", "--suite", "interior", "--seed", "5", "--dim", "10", "--count", "4", "--out",
                      (dir / "csv").string()});
  REQUIRE(b.code == kExitOk);
  for (const char* f : {"records.csv", "timings.csv", "stats.csv", "profile.csv"}) CHECK(fs::exists(dir / "csv" / f));
  const auto records = parse_records_csv(read_file(dir / "csv" / "records.csv"));
  CHECK(records.size() == 12);
  CHECK(b.out.find("summary ccrm") != std::string::npos);

  const auto again = cli({"bench", "--suite", "interior", "--seed", "5", "--dim", "10", "--count", "4", "--threads",
                          "2", "--out", (dir / "again").string()});
  REQUIRE(again.code == kExitOk);
  CHECK(read_file(dir / "csv" / "records.csv") == read_file(dir / "again" / "records.csv"));

  const auto p = cli({"profile", "--records", (dir / "csv" / "records.csv").string(), "--out", (dir / "prof").string()});
  REQUIRE(p.code == kExitOk);
  CHECK(read_file(dir / "prof" / "stats.csv") == read_file(dir / "csv" / "stats.csv"));
  CHECK(read_file(dir / "prof" / "profile.csv") == read_file(dir / "csv" / "profile.csv"));

  const auto j = cli({"bench", "--suite", "interior", "--seed", "5", "--dim", "10", "--count", "2", "--methods", "ccrm",
                      "--format", "json", "--out", (dir / "json").string()});
  REQUIRE(j.code == kExitOk);
  const json report = json::parse(read_file(dir / "json" / "report.json"));
  CHECK(report.at("records").size() == 2);

  CHECK(cli({"profile", "--records", (dir / "none.csv").string()}).code == kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("installed executable exit statuses") {
  const char* exe = std::getenv("CIRCUMFEAS_CLI");
  if (exe == nullptr) return;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--help") == kExitOk);
  CHECK(status("--no-such-flag") == kExitUsage);
  CHECK(status("solve --instance /nonexistent/inst.json") == kExitIo);
}
