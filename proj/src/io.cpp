#include "circumfeas/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace circumfeas {

using nlohmann::json;

namespace {

json vector_json(const VectorX<double>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_rows_json(const MatrixX<double>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw SchemaError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

VectorX<double> vector_from(const json& a, const char* key) {
  if (!a.is_array()) throw SchemaError(std::string("field '") + key + "' must be an array of numbers");
  VectorX<double> v(Eigen::Index(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw SchemaError(std::string("field '") + key + "' must be an array of numbers");
    v(Eigen::Index(i)) = a[i].get<double>();
  }
  return v;
}

VectorX<double> vector_field(const json& j, const char* key) { return vector_from(field(j, key), key); }

// Row-major list of rows.
MatrixX<double> matrix_field(const json& j, const char* key, Eigen::Index cols) {
  const json& rows = field(j, key);
  if (!rows.is_array()) throw SchemaError(std::string("field '") + key + "' must be a list of rows");
  MatrixX<double> m(Eigen::Index(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const VectorX<double> r = vector_from(rows[i], key);
    if (r.size() != cols) throw SchemaError(std::string("field '") + key + "' has ragged rows");
    m.row(Eigen::Index(i)) = r.transpose();
  }
  return m;
}

}  // namespace

json set_to_json(const ConvexSet<double>& set) {
  return std::visit(
      [&](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        json j;
        j["variant"] = std::string(set.name());
        if constexpr (std::is_same_v<T, Halfspace<double>> || std::is_same_v<T, Hyperplane<double>>) {
          j["normal"] = vector_json(s.normal);
          j["offset"] = s.offset;
        } else if constexpr (std::is_same_v<T, Box<double>>) {
          j["lower"] = vector_json(s.lower);
          j["upper"] = vector_json(s.upper);
        } else if constexpr (std::is_same_v<T, Ball<double>>) {
          j["center"] = vector_json(s.center);
          j["radius"] = s.radius;
        } else if constexpr (std::is_same_v<T, AffineSubspace<double>>) {
          j["basepoint"] = vector_json(s.basepoint);
          json basis = json::array();
          for (Eigen::Index c = 0; c < s.basis.cols(); ++c) basis.push_back(vector_json(s.basis.col(c)));
          j["basis"] = basis;
        } else if constexpr (std::is_same_v<T, Ellipsoid<double>>) {
          j["A"] = matrix_rows_json(s.A);
          j["b"] = vector_json(s.b);
          j["alpha"] = s.alpha;
        } else if constexpr (std::is_same_v<T, Product<double>>) {
          j["left"] = set_to_json(*s.left);
          j["right"] = set_to_json(*s.right);
        } else {
          j["block_dim"] = s.block_dim;
        }
        return j;
      },
      set.variant());
}

ConvexSet<double> set_from_json(const json& j) {
  const json& v = field(j, "variant");
  if (!v.is_string()) throw SchemaError("field 'variant' must be a string");
  const std::string variant = v.get<std::string>();
  if (variant == "halfspace") return make_halfspace<double>(vector_field(j, "normal"), number(j, "offset"));
  if (variant == "hyperplane") return make_hyperplane<double>(vector_field(j, "normal"), number(j, "offset"));
  if (variant == "box") return make_box<double>(vector_field(j, "lower"), vector_field(j, "upper"));
  if (variant == "ball") return make_ball<double>(vector_field(j, "center"), number(j, "radius"));
  if (variant == "affine") {
    VectorX<double> base = vector_field(j, "basepoint");
    const json& vecs = field(j, "basis");
    if (!vecs.is_array()) throw SchemaError("field 'basis' must be a list of vectors");
    MatrixX<double> basis(base.size(), Eigen::Index(vecs.size()));
    for (std::size_t c = 0; c < vecs.size(); ++c) {
      const VectorX<double> col = vector_from(vecs[c], "basis");
      if (col.size() != base.size()) throw SchemaError("basis vector dimension mismatch");
      basis.col(Eigen::Index(c)) = col;
    }
    return make_affine_subspace<double>(std::move(base), std::move(basis));
  }
  if (variant == "ellipsoid") {
    VectorX<double> b = vector_field(j, "b");
    MatrixX<double> A = matrix_field(j, "A", b.size());
    return make_ellipsoid<double>(std::move(A), std::move(b), number(j, "alpha"));
  }
  if (variant == "product") return make_product(set_from_json(field(j, "left")), set_from_json(field(j, "right")));
  if (variant == "diagonal") {
    const json& k = field(j, "block_dim");
    if (!k.is_number_integer()) throw SchemaError("field 'block_dim' must be an integer");
    return make_diagonal<double>(k.get<Eigen::Index>());
  }
  throw SchemaError("unknown set variant '" + variant + "'");
}

json instance_to_json(const EllipsoidInstance& inst) {
  json j;
  j["schema"] = "circumfeas.instance/1";
  j["id"] = inst.id();
  j["index"] = inst.index;
  j["n"] = inst.n;
  j["lambda"] = inst.lambda;
  j["gamma"] = inst.gamma;
  j["seed"] = inst.seed;
  j["E1"] = set_to_json(inst.E1);
  j["E2"] = set_to_json(inst.E2);
  j["witness"] = vector_json(inst.witness);
  j["c2"] = vector_json(inst.c2);
  j["d"] = vector_json(inst.d);
  j["z0"] = vector_json(inst.z0);
  return j;
}

EllipsoidInstance instance_from_json(const json& j) {
  auto E1 = set_from_json(field(j, "E1"));
  auto E2 = set_from_json(field(j, "E2"));
  const json& n = field(j, "n");
  const json& idx = field(j, "index");
  const json& seed = field(j, "seed");
  if (!n.is_number_integer() || !idx.is_number_integer() || !seed.is_number_integer()) {
    throw SchemaError("fields 'n', 'index' and 'seed' must be integers");
  }
  EllipsoidInstance inst{std::move(E1),
                         std::move(E2),
                         n.get<int>(),
                         number(j, "lambda"),
                         number(j, "gamma"),
                         seed.get<std::uint64_t>(),
                         idx.get<int>(),
                         vector_field(j, "witness"),
                         vector_field(j, "c2"),
                         vector_field(j, "d"),
                         vector_field(j, "z0")};
  for (const auto* v : {&inst.witness, &inst.c2, &inst.d, &inst.z0}) {
    if (v->size() != inst.n) throw SchemaError("instance vector dimension does not match n");
  }
  if (inst.E1.dim() != inst.n || inst.E2.dim() != inst.n) throw SchemaError("instance set dimension does not match n");
  return inst;
}

json manifest_to_json(const GeneratorConfig& cfg, const std::vector<std::string>& files) {
  json j;
  j["schema"] = "circumfeas.manifest/1";
  j["seed"] = cfg.seed;
  j["n"] = cfg.n;
  j["lambda"] = cfg.lambda;
  j["gamma"] = cfg.gamma;
  j["sparsity"] = cfg.density();
  j["count"] = cfg.count;
  j["instances"] = files;
  return j;
}

json run_summary_json(const MethodRun<double>& run, const std::string& instance_id) {
  json j;
  j["method"] = std::string(to_string(run.method));
  j["instance_id"] = instance_id;
  j["iterations"] = run.iterations();
  j["projections"] = run.total_projections;
  j["stop_reason"] = std::string(to_string(run.stop_reason));
  j["final_gap"] = run.gaps.back();
  if (!run.solution_distances.empty()) j["final_distance"] = run.solution_distances.back();
  j["solution"] = vector_json(run.final_point());
  if (!run.diagnostic.empty()) j["diagnostic"] = run.diagnostic;
  j["gaps"] = run.gaps;
  return j;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string run_trajectory_csv(const MethodRun<double>& run, bool with_coords) {
  std::ostringstream os;
  const bool has_dist = !run.solution_distances.empty();
  with_coords = with_coords && run.iterates.size() == run.gaps.size();
  os << "iteration,gap";
  if (has_dist) os << ",distance";
  os << ",projections";
  if (with_coords) {
    for (Eigen::Index i = 0; i < run.iterates.front().size(); ++i) os << ",x" << i;
  }
  os << '\n';
  std::uint64_t cumulative = 0;
  for (std::size_t k = 0; k < run.gaps.size(); ++k) {
    if (k > 0) cumulative += run.iterate_projections[k - 1];
    os << k << ',' << format_double(run.gaps[k]);
    if (has_dist) os << ',' << format_double(run.solution_distances[k]);
    os << ',' << cumulative;
    if (with_coords) {
      for (Eigen::Index i = 0; i < run.iterates[k].size(); ++i) os << ',' << format_double(run.iterates[k](i));
    }
    os << '\n';
  }
  return os.str();
}

std::string records_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "method,instance_id,projections,iterations,stop_reason,final_residual\n";
  for (const auto& r : records) {
    os << to_string(r.method) << ',' << r.instance_id << ',' << r.projections << ',' << r.iterations << ','
       << r.stop_reason << ',' << format_double(r.final_residual) << '\n';
  }
  return os.str();
}

std::string timings_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "method,instance_id,wall_ms\n";
  for (const auto& r : records) os << to_string(r.method) << ',' << r.instance_id << ',' << format_double(r.wall_ms) << '\n';
  return os.str();
}

std::string stats_csv(const std::vector<MethodStatistics>& stats) {
  std::ostringstream os;
  os << "method,count,mean,std,median,min,max\n";
  for (const auto& s : stats) {
    os << to_string(s.method) << ',' << s.count << ',' << format_double(s.mean) << ',' << format_double(s.stddev) << ','
       << format_double(s.median) << ',' << format_double(s.min) << ',' << format_double(s.max) << '\n';
  }
  return os.str();
}

std::string profile_csv(const ProfileTable& table) {
  std::ostringstream os;
  os << "tau";
  for (MethodKind m : table.methods) os << ',' << to_string(m);
  os << '\n';
  for (std::size_t t = 0; t < table.taus.size(); ++t) {
    os << format_double(table.taus[t]);
    for (double f : table.fractions[t]) os << ',' << format_double(f);
    os << '\n';
  }
  return os.str();
}

json report_json(const BenchmarkReport& report) {
  json j;
  json recs = json::array();
  for (const auto& r : report.records) {
    recs.push_back({{"method", std::string(to_string(r.method))},
                    {"instance_id", r.instance_id},
                    {"projections", r.projections},
                    {"iterations", r.iterations},
                    {"stop_reason", r.stop_reason},
                    {"final_residual", std::isfinite(r.final_residual) ? json(r.final_residual) : json(nullptr)},
                    {"solved", r.solved}});
  }
  j["records"] = recs;
  json stats = json::array();
  for (const auto& s : report.stats) {
    stats.push_back({{"method", std::string(to_string(s.method))},
                     {"count", s.count},
                     {"mean", s.mean},
                     {"std", s.stddev},
                     {"median", s.median},
                     {"min", s.min},
                     {"max", s.max},
                     {"single_sample", s.single_sample}});
  }
  j["stats"] = stats;
  json prof;
  prof["taus"] = report.profile.taus;
  for (std::size_t m = 0; m < report.profile.methods.size(); ++m) {
    std::vector<double> col;
    for (const auto& row : report.profile.fractions) col.push_back(row[m]);
    prof[std::string(to_string(report.profile.methods[m]))] = col;
  }
  prof["excluded_instances"] = report.profile.excluded_instances;
  j["profile"] = prof;
  return j;
}

std::vector<RunRecord> parse_records_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "method,instance_id,projections,iterations,stop_reason,final_residual") {
    throw SchemaError("records.csv: unexpected header");
  }
  std::vector<RunRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (cols.size() != 6) throw SchemaError("records.csv line " + std::to_string(lineno) + ": expected 6 columns");
    RunRecord r;
    const auto m = parse_method(cols[0]);
    if (!m) throw SchemaError("records.csv line " + std::to_string(lineno) + ": unknown method " + cols[0]);
    r.method = *m;
    r.instance_id = cols[1];
    try {
      r.projections = std::stoull(cols[2]);
      r.iterations = std::stoull(cols[3]);
      r.final_residual = cols[5] == "nan" ? std::nan("") : std::stod(cols[5]);
    } catch (const std::exception&) {
      throw SchemaError("records.csv line " + std::to_string(lineno) + ": malformed number");
    }
    r.stop_reason = cols[4];
    r.solved = r.stop_reason == "gap_tolerance" || r.stop_reason == "solution_tolerance";
    const auto us = r.instance_id.rfind('_');
    try {
      r.instance_index = us == std::string::npos ? lineno : std::stoi(r.instance_id.substr(us + 1));
    } catch (const std::exception&) {
      r.instance_index = lineno;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

}  // namespace circumfeas
