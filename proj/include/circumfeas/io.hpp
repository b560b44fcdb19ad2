#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "circumfeas/bench.hpp"
#include "circumfeas/convex_sets.hpp"
#include "circumfeas/instance_gen.hpp"
#include "circumfeas/methods.hpp"

namespace circumfeas {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Set documents: {"variant": "ellipsoid", "A": [[...]], "b": [...], "alpha": ...} and so on;
// see docs/schemas.md.
nlohmann::json set_to_json(const ConvexSet<double>& set);
ConvexSet<double> set_from_json(const nlohmann::json& j);

nlohmann::json instance_to_json(const EllipsoidInstance& inst);
EllipsoidInstance instance_from_json(const nlohmann::json& j);

nlohmann::json manifest_to_json(const GeneratorConfig& cfg, const std::vector<std::string>& files);

nlohmann::json run_summary_json(const MethodRun<double>& run, const std::string& instance_id);

/// iteration,gap[,distance],projections[,x0,x1,...]
std::string run_trajectory_csv(const MethodRun<double>& run, bool with_coords);

std::string records_csv(const std::vector<RunRecord>& records);
std::string timings_csv(const std::vector<RunRecord>& records);
std::string stats_csv(const std::vector<MethodStatistics>& stats);
std::string profile_csv(const ProfileTable& table);
nlohmann::json report_json(const BenchmarkReport& report);

std::vector<RunRecord> parse_records_csv(const std::string& text);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace circumfeas
