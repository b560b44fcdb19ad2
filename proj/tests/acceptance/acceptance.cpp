// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance <path to the circumfeas executable>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "circumfeas/bench.hpp"
#include "circumfeas/circumcenter.hpp"
#include "circumfeas/instance_gen.hpp"
#include "circumfeas/methods.hpp"
#include "circumfeas/regularity.hpp"

using namespace circumfeas;
using Vec = VectorX<double>;
using Mat = MatrixX<double>;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

// {w : <a, w> <= b}
struct Half {
  Vec a;
  double b;
  bool contains(const Vec& w, double tol) const { return a.dot(w) - b <= tol * (1 + std::abs(b) + w.norm()); }
  Vec project(const Vec& w) const {
    const double v = a.dot(w) - b;
    return v <= 0 ? w : Vec(w - v / a.squaredNorm() * a);
  }
};

// Projection onto H1 cap H2 by enumerating active sets: the nearest feasible candidate
// among w, P_H1 w, P_H2 w and the projection onto both boundary hyperplanes.
Vec project_two_halves(const Half& h1, const Half& h2, const Vec& w) {
  constexpr double tol = 1e-10;
  std::vector<Vec> candidates{w, h1.project(w), h2.project(w)};
  Mat G(2, 2);
  G << h1.a.squaredNorm(), h1.a.dot(h2.a), h1.a.dot(h2.a), h2.a.squaredNorm();
  if (std::abs(G.determinant()) > 1e-14 * G(0, 0) * G(1, 1)) {
    Eigen::Vector2d r(h1.a.dot(w) - h1.b, h2.a.dot(w) - h2.b);
    const Eigen::Vector2d mu = G.inverse() * r;
    if (mu(0) >= 0 && mu(1) >= 0) candidates.push_back(w - mu(0) * h1.a - mu(1) * h2.a);
  }
  const Vec* best = nullptr;
  for (const auto& c : candidates) {
    if (!h1.contains(c, tol) || !h2.contains(c, tol)) continue;
    if (best == nullptr || (c - w).norm() < (*best - w).norm()) best = &c;
  }
  if (best == nullptr) throw std::runtime_error("halfspace oracle: empty intersection");
  return *best;
}

// Supporting halfspace of C at P_C z, or the whole space when z lies in C.
std::optional<Half> support(const ConvexSet<double>& C, const Vec& z) {
  const Vec p = project(C, z);
  const Vec a = z - p;
  if (a.norm() == 0.0) return std::nullopt;
  return Half{a, a.dot(p)};
}

// Largest successive ratio over the last half of the positive part of d;
// 0 when the sequence hits zero before five positive entries.
double tail_q(const std::vector<double>& d, double floor) {
  std::vector<double> pos;
  for (double x : d) {
    if (x <= floor) break;
    pos.push_back(x);
  }
  if (pos.size() < 5) return 0.0;
  double q = 0;
  for (std::size_t k = pos.size() / 2; k + 1 < pos.size(); ++k) q = std::max(q, pos[k + 1] / pos[k]);
  return q;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

void lemma_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::array families{SetFamily::Halfspace, SetFamily::Ball, SetFamily::Ellipsoid};
  const std::array dims{2, 5, 20, 100};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> radius(0.5, 5.0);
  int bad_a = 0, bad_b = 0, bad_c = 0, bad_d = 0, strict = 0;
  double worst_d = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = dims[(k / 3) % dims.size()];
    const auto pair = gen_random_pair(families[k % 3], n, rng);
    const Vec& s = pair.common;
    const Vec z = s + radius(rng) * gaussian(n, rng).normalized();
    const double sc = std::max(1.0, (z - s).squaredNorm());

    const Vec zc = centralize(pair.X, pair.Y, z);
    const Vec px = project(pair.X, zc), py = project(pair.Y, zc);
    const double zscale = 1 + zc.norm();
    if ((px - zc).dot(py - zc) > 1e-10 * zscale * zscale) ++bad_a;
    if ((zc - s).squaredNorm() > (z - s).squaredNorm() - 0.25 * (z - zc).squaredNorm() + 1e-8 * sc) ++bad_b;

    const Vec t = step_ccrm(pair.X, pair.Y, z).center;
    if ((t - s).squaredNorm() > (z - s).squaredNorm() - 0.125 * (z - t).squaredNorm() + 1e-8 * sc) ++bad_c;

    const auto hx = support(pair.X, zc);
    const auto hy = support(pair.Y, zc);
    if (!hx || !hy) continue;
    ++strict;
    const Vec oracle = project_two_halves(*hx, *hy, zc);
    const double err = (step_pcrm(pair.X, pair.Y, zc).center - oracle).norm() / zscale;
    worst_d = std::max(worst_d, err);
    if (err > 1e-7) ++bad_d;
  }
  const double secs = seconds_since(t0);
  const bool ok = bad_a + bad_b + bad_c + bad_d == 0 && strict > 0 && secs < 60;
  report(1, ok,
         "1000 draws: centralized violations " + std::to_string(bad_a) + ", quarter-chain " + std::to_string(bad_b) +
             ", eighth-step " + std::to_string(bad_c) + ", oracle mismatches " + std::to_string(bad_d) + " of " +
             std::to_string(strict) + " (worst " + fmt(worst_d) + "), " + fmt(secs) + " s");
}

void circumcenter_kernel() {
  std::mt19937_64 rng(77);
  int bad = 0, skipped = 0;
  for (int k = 0; k < 10000; ++k) {
    const int n = 2 + k % 9;
    const Vec z = gaussian(n, rng), v = gaussian(n, rng), w = gaussian(n, rng);
    const auto r = circumcenter3<double>(z, v, w);
    if (r.degeneracy == Degeneracy::RankDeficient) {
      ++skipped;
      continue;
    }
    const double scale = 1 + std::max({(z - v).norm(), (z - w).norm(), (v - w).norm()});
    const double dz = (r.center - z).norm(), dv = (r.center - v).norm(), dw = (r.center - w).norm();
    const double residual = std::max({std::abs(dz - dv), std::abs(dz - dw), std::abs(dv - dw)});
    Mat S(n, 2);
    S.col(0) = v - z;
    S.col(1) = w - z;
    const Vec d = r.center - z;
    // Orthonormal basis of the span, so the check does not inherit the conditioning of S.
    const Mat Q = S.householderQr().householderQ() * Mat::Identity(n, 2);
    const double off_span = (d - Q * (Q.transpose() * d)).norm();
    if (residual > 1e-9 * scale || off_span > 1e-9 * scale) ++bad;
  }
  Vec a(2), b(2), c(2), expected(2);
  a << 0, 0;
  b << 2, 0;
  c << 1, 3;
  expected << 1, 4.0 / 3;
  const double hand = (circumcenter3<double>(a, b, c).center - expected).norm();
  report(2, bad == 0 && skipped == 0 && hand <= 1e-12,
         "10000 triples: " + std::to_string(bad) + " violations, " + std::to_string(skipped) +
             " rank deficient; hand example error " + fmt(hand));
}

void affine_one_step() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(0, M_PI);
  int bad = 0;
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const Vec p = 3 * gaussian(2, rng);
    const double t1 = angle(rng);
    double t2 = angle(rng);
    while (std::abs(std::sin(t1 - t2)) < 0.05) t2 = angle(rng);
    Vec n1(2), n2(2);
    n1 << std::cos(t1), std::sin(t1);
    n2 << std::cos(t2), std::sin(t2);
    const auto X = make_hyperplane<double>(n1, n1.dot(p));
    const auto Y = make_hyperplane<double>(n2, n2.dot(p));
    const Vec z0 = p + 5 * gaussian(2, rng);
    const std::vector<StoppingCriterion<double>> stop{GapToFirstSet<double>{1e-10}, ProjectionBudget{10000}};
    const auto r = run(MethodKind::CCRM, X, Y, z0, stop);
    const double err = (r.final_point() - p).norm();
    worst = std::max(worst, err);
    if (err > 1e-10 || r.iterations() != 1 || r.total_projections != 4) ++bad;
  }
  report(3, bad == 0,
         "100 line pairs: " + std::to_string(bad) + " not solved in one iteration with 4 projections (worst error " +
             fmt(worst) + ")");
}

void rate_bounds_check() {
  bool ok = true;
  std::string detail;
  for (double angle : {M_PI / 6, M_PI / 4, M_PI / 3}) {
    const auto hp = gen_halfspace_pair(angle, 2, 11);
    const Vec a1 = hp.X.get_if<Halfspace<double>>()->normal;
    const Vec a2 = hp.Y.get_if<Halfspace<double>>()->normal;
    const Half h1{a1, 0.0}, h2{a2, 0.0};
    const Vec z0 = (a1 + a2).normalized() + 0.1 * (a1 - a2).normalized();
    const double beta = std::cos(angle);
    const std::vector<StoppingCriterion<double>> stop{GapToFirstSet<double>{1e-13}, ProjectionBudget{10000}};
    const auto q_of = [&](MethodKind m) {
      const auto r = run(m, hp.X, hp.Y, z0, stop);
      std::vector<double> d;
      for (const auto& z : r.iterates) d.push_back((z - project_two_halves(h1, h2, z)).norm());
      return tail_q(d, 1e-11);
    };
    const double q_map = q_of(MethodKind::MAP), q_spm = q_of(MethodKind::SPM), q_ccrm = q_of(MethodKind::CCRM);
    ok = ok && q_map <= beta * beta + 0.05 && q_spm <= (1 + beta) / 2 + 0.05 &&
         q_ccrm <= beta * beta * (1 + beta) / 2 + 0.05 && std::abs(q_map - beta * beta) <= 0.02;
    detail += " angle " + fmt(angle) + ": MAP " + fmt(q_map) + " (cos^2 " + fmt(beta * beta) + "), SPM " + fmt(q_spm) +
              " (<= " + fmt((1 + beta) / 2) + "), cCRM " + fmt(q_ccrm) + " (<= " +
              fmt(beta * beta * (1 + beta) / 2) + ");";
  }
  report(4, ok, "tail ratios" + detail);
}

void interior_bench() {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorConfig cfg;
  cfg.n = 100;
  cfg.count = 30;
  cfg.lambda = 1.1;
  cfg.seed = 1234;
  const auto instances = gen_ellipsoid_suite(cfg);
  const std::vector<MethodKind> methods{MethodKind::CCRM, MethodKind::MAP, MethodKind::CRMPROD};
  SuiteOptions opts;
  opts.eps = 1e-6;
  opts.budget = 10000;
  const auto rep = run_suite(instances, methods, opts);
  std::vector<double> c, m, p;
  int ordered = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& rc = rep.records[3 * i];
    const auto& rm = rep.records[3 * i + 1];
    const auto& rp = rep.records[3 * i + 2];
    c.push_back(double(rc.projections));
    m.push_back(double(rm.projections));
    p.push_back(double(rp.projections));
    if (rc.solved && rm.solved && rp.solved && rc.projections < rm.projections && rm.projections < rp.projections)
      ++ordered;
  }
  const double mc = median(c), mm = median(m), mp = median(p);
  const bool ok = ordered >= 27 && mc <= 60 && mm >= 5 * mc && mp >= 5 * mc;
  report(5, ok,
         "ordering cCRM < MAP < CRMprod on " + std::to_string(ordered) + "/30; medians cCRM " + fmt(mc) + ", MAP " +
             fmt(mm) + ", CRMprod " + fmt(mp) + "; " + fmt(seconds_since(t0)) + " s");
}

void singleton_bench() {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorConfig cfg;
  cfg.n = 20;
  cfg.count = 30;
  cfg.lambda = 1.0;
  cfg.seed = 1234;
  const auto instances = gen_ellipsoid_suite(cfg);
  const PolicyParams params{1e-3, 100000};
  RunOptions<double> opts;
  opts.keep_iterates = false;
  int map_exhausted = 0, prod_exhausted = 0, ccrm_solved = 0, ccrm_linear = 0;
  double worst_ccrm_q = 0, min_map_q = 1;
  for (const auto& inst : instances) {
    const auto stop = policy_criteria(StopPolicy::Singleton, params, inst);
    const auto map = run(MethodKind::MAP, inst.E1, inst.E2, inst.z0, stop, opts);
    const auto prod = run(MethodKind::CRMPROD, inst.E1, inst.E2, inst.z0, stop, opts);
    const auto cc = run(MethodKind::CCRM, inst.E1, inst.E2, inst.z0, stop, opts);
    map_exhausted += map.stop_reason == StopReason::BudgetExhausted;
    prod_exhausted += prod.stop_reason == StopReason::BudgetExhausted;
    const bool solved = cc.stop_reason == StopReason::SolutionTolerance &&
                        (cc.final_point() - inst.witness).norm() < params.eps && cc.total_projections <= params.budget;
    ccrm_solved += solved;
    const double qc = tail_q(cc.solution_distances, 0.0);
    const double qm = tail_q(map.solution_distances, 0.0);
    if (qc < 1) ++ccrm_linear;
    worst_ccrm_q = std::max(worst_ccrm_q, qc);
    min_map_q = std::min(min_map_q, qm);
  }
  const int n = int(instances.size());
  const bool ok = map_exhausted == n && prod_exhausted == n && ccrm_solved >= 0.8 * n && ccrm_linear == n &&
                  min_map_q >= 0.99;
  report(6, ok,
         "MAP exhausted " + std::to_string(map_exhausted) + "/" + std::to_string(n) + ", CRMprod exhausted " +
             std::to_string(prod_exhausted) + "/" + std::to_string(n) + ", cCRM solved " +
             std::to_string(ccrm_solved) + "/" + std::to_string(n) + "; worst cCRM tail ratio " + fmt(worst_ccrm_q) +
             ", smallest MAP tail ratio " + fmt(min_map_q) + "; " + fmt(seconds_since(t0)) + " s");
}

void error_bound() {
  const auto hp = gen_halfspace_pair(M_PI / 3, 2, 9);
  const Half h1{hp.X.get_if<Halfspace<double>>()->normal, 0.0};
  const Half h2{hp.Y.get_if<Halfspace<double>>()->normal, 0.0};
  const IntersectionDistance<double> dist = [&](const Vec& w) { return (w - project_two_halves(h1, h2, w)).norm(); };
  const auto est = estimate_error_bound(hp.X, hp.Y, dist, Vec(Vec::Zero(2)), 0.1, 100000, 3);
  const double err = std::abs(est.omega - std::sin(M_PI / 3));
  report(7, err <= 2e-2, "omega " + fmt(est.omega) + " vs sin(pi/3) " + fmt(std::sin(M_PI / 3)) + ", error " + fmt(err));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void determinism(const std::string& exe) {
  if (exe.empty()) {
    report(8, false, "no executable given");
    return;
  }
  const fs::path base = fs::temp_directory_path() / "circumfeas_acceptance_determinism";
  fs::remove_all(base);
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = base / ("run" + std::to_string(i));
    const std::string cmd = exe + " bench --suite interior --seed 1234 --out " + out.string() + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    codes[i] = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }
  const std::string a = slurp(base / "run0" / "records.csv");
  const std::string b = slurp(base / "run1" / "records.csv");
  const bool ok = codes[0] == 0 && codes[1] == 0 && !a.empty() && a == b;
  report(8, ok,
         "exit codes " + std::to_string(codes[0]) + "," + std::to_string(codes[1]) + "; records.csv " +
             std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different"));
  fs::remove_all(base);
}

template <typename F>
void guarded(int id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string exe = argc > 1 ? argv[1] : "";
  guarded(1, lemma_suite);
  guarded(2, circumcenter_kernel);
  guarded(3, affine_one_step);
  guarded(4, rate_bounds_check);
  guarded(5, interior_bench);
  guarded(6, singleton_bench);
  guarded(7, error_bound);
  guarded(8, [&] { determinism(exe); });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
