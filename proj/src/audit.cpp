#include "circumfeas/audit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "circumfeas/instance_gen.hpp"
#include "circumfeas/methods.hpp"
#include "circumfeas/regularity.hpp"

namespace circumfeas {

std::string_view to_string(AuditCheck c) {
  switch (c) {
    case AuditCheck::Centralized: return "centralized";
    case AuditCheck::Qne: return "qne";
    case AuditCheck::Oracle: return "oracle";
    case AuditCheck::Rates: return "rates";
    case AuditCheck::Eb: return "eb";
  }
  return "unknown";
}

std::vector<AuditCheck> parse_checks(std::string_view list) {
  static constexpr std::array kAll{AuditCheck::Centralized, AuditCheck::Qne, AuditCheck::Oracle, AuditCheck::Rates,
                                   AuditCheck::Eb};
  std::vector<AuditCheck> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string_view name = list.substr(pos, comma - pos);
    const auto it = std::find_if(kAll.begin(), kAll.end(), [&](AuditCheck c) { return to_string(c) == name; });
    if (it == kAll.end()) throw std::invalid_argument("unknown audit check '" + std::string(name) + "'");
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
    pos = comma + 1;
  }
  return out;
}

namespace {

using Vec = VectorX<double>;

constexpr std::array kFamilies{SetFamily::Halfspace, SetFamily::Ball, SetFamily::Ellipsoid, SetFamily::Mixed};
constexpr double kSlack = 1e-8;

enum Purpose : std::uint64_t { kPairDraw = 101, kPointDraw = 102, kEbDraw = 103, kRateDraw = 104 };

class Recorder {
 public:
  explicit Recorder(AuditReport& report) : report_(report) {}

  // margin > 0 is a violation of the named inequality.
  void record(std::string_view check, std::string_view family, std::size_t draw, std::optional<std::size_t> iterate,
              double margin, std::string_view what) {
    auto& s = summary(check);
    if (s.evaluations == 0 || margin > s.worst_margin) s.worst_margin = margin;
    ++s.evaluations;
    if (margin > 0.0 || !std::isfinite(margin)) {
      ++s.violations;
      report_.violations.push_back(
          AuditViolation{std::string(check), std::string(family), draw, iterate, margin, std::string(what)});
    }
  }

 private:
  AuditCheckSummary& summary(std::string_view check) {
    for (auto& s : report_.summaries) {
      if (s.check == check) return s;
    }
    report_.summaries.push_back(AuditCheckSummary{std::string(check)});
    return report_.summaries.back();
  }

  AuditReport& report_;
};

struct Draw {
  SetFamily family;
  SetPair pair;
  Vec z;
};

// A set pair with a known common point s, and a start point at distance 0.5..5 from s.
Draw make_draw(const AuditConfig& cfg, std::size_t k) {
  const SetFamily family = kFamilies[k % kFamilies.size()];
  auto rng = substream(cfg.seed, k, kPairDraw);
  SetPair pair = gen_random_pair(family, cfg.dim, rng);
  auto prng = substream(cfg.seed, k, kPointDraw);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> radius(0.5, 5.0);
  Vec u(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i) u(i) = normal(prng);
  Vec z = pair.common + radius(prng) * u.normalized();
  return Draw{family, std::move(pair), std::move(z)};
}

double sq(double x) { return x * x; }

void audit_centralized(const Draw& d, std::size_t k, Recorder& rec) {
  const auto& [X, Y, s] = d.pair;
  const std::string_view fam = to_string(d.family);
  const double scale = 1.0 + d.z.norm();

  const Vec zc = centralize(X, Y, d.z);
  const auto c = check_centralized(X, Y, zc);
  const double sc = 1.0 + zc.norm();
  rec.record("centralized", fam, k, std::nullopt, c.inner_product - 1e-10 * sq(sc), "centralize output not centralized");
  rec.record("centralized", fam, k, std::nullopt,
             std::abs(c.reflection_inner_product - 4.0 * c.inner_product) - 1e-10 * sq(sc),
             "reflection form differs from four times projection form");
  if (!c.strictly) {
    const double off = std::max(gap_to_set(X, zc), gap_to_set(Y, zc));
    rec.record("centralized", fam, k, std::nullopt, off - kSlack * scale, "non-strict centralized point outside X cap Y");
  }

  const Vec in_x = project(X, d.z);
  const auto cx = check_centralized(X, Y, in_x);
  rec.record("centralized", fam, k, std::nullopt, (cx.centralized && !cx.strictly) ? -1.0 : 1.0,
             "point of X not reported as centralized and non-strict");
}

void audit_qne(const Draw& d, std::size_t k, Recorder& rec) {
  const auto& [X, Y, s] = d.pair;
  const std::string_view fam = to_string(d.family);
  const Vec& z = d.z;
  const double scale = std::max(1.0, (z - s).squaredNorm());

  const auto tr = centralize_trace(X, Y, z);
  const double dz = (z - s).squaredNorm();
  const double dmap = (tr.z_map - s).squaredNorm();
  const double dc = (tr.centered - s).squaredNorm();
  rec.record("qne", fam, k, std::nullopt, dc - dmap - kSlack * scale, "centralized point farther than the MAP point");
  rec.record("qne", fam, k, std::nullopt, dmap - (dz - 0.25 * (z - tr.centered).squaredNorm()) - kSlack * scale,
             "centralization not firmly quasi-nonexpansive");

  const auto t = step_ccrm(X, Y, z);
  if (t.degeneracy != Degeneracy::RankDeficient) {
    rec.record("qne", fam, k, std::nullopt,
               (t.center - s).squaredNorm() - (dz - 0.125 * (z - t.center).squaredNorm()) - kSlack * scale,
               "cCRM not firmly quasi-nonexpansive");
  }

  const auto c = step_pcrm(X, Y, tr.centered);
  if (c.degeneracy != Degeneracy::RankDeficient) {
    rec.record("qne", fam, k, std::nullopt,
               (c.center - s).squaredNorm() - (dc - (tr.centered - c.center).squaredNorm()) - kSlack * scale,
               "pCRM at a centralized point not firmly quasi-nonexpansive");
  }
}

// Fejer monotonicity of the methods with convex-set guarantees, over a short run.
void audit_fejer(const Draw& d, std::size_t k, Recorder& rec) {
  const auto& [X, Y, s] = d.pair;
  const std::string_view fam = to_string(d.family);
  const double scale = 1.0 + (d.z - s).norm();
  for (MethodKind m : {MethodKind::MAP, MethodKind::SPM, MethodKind::CCRM, MethodKind::CRMPROD}) {
    std::vector<StoppingCriterion<double>> stop{GapToFirstSet<double>{1e-12}, ProjectionBudget{40}};
    const auto r = run(m, X, Y, d.z, stop);
    for (std::size_t i = 0; i + 1 < r.iterates.size(); ++i) {
      const double margin = (r.iterates[i + 1] - s).norm() - (r.iterates[i] - s).norm() - kSlack * scale;
      rec.record("qne", fam, k, i + 1, margin, std::string(to_string(m)) + " iterate not Fejer monotone");
    }
  }
}

void audit_oracle(const Draw& d, std::size_t k, Recorder& rec) {
  const auto& [X, Y, s] = d.pair;
  const std::string_view fam = to_string(d.family);

  const Vec zc = centralize(X, Y, d.z);
  if (check_centralized(X, Y, zc).strictly) {
    const auto c = step_pcrm(X, Y, zc);
    const Vec oracle = project_halfspace_intersection(support_halfspaces(X, Y, zc), zc);
    const double scale = 1.0 + zc.norm();
    rec.record("oracle", fam, k, std::nullopt, (c.center - oracle).norm() - 1e-7 * scale,
               "pCRM differs from the projection onto S_X cap S_Y");
  }

  const double fix_tol = 1e-10 * (1.0 + s.norm());
  rec.record("oracle", fam, k, std::nullopt, (step_pcrm(X, Y, s).center - s).norm() - fix_tol,
             "pCRM moves a point of X cap Y");
  rec.record("oracle", fam, k, std::nullopt, (step_ccrm(X, Y, s).center - s).norm() - fix_tol,
             "cCRM moves a point of X cap Y");
  if (std::max(gap_to_set(X, d.z), gap_to_set(Y, d.z)) > 1e-6) {
    rec.record("oracle", fam, k, std::nullopt, fix_tol - (step_ccrm(X, Y, d.z).center - d.z).norm(),
               "cCRM fixes a point outside X cap Y");
  }
}

// Largest successive distance ratio over the second half of the positive prefix;
// 0 when the method reaches X cap Y in fewer than five iterations.
double tail_ratio(const MethodRun<double>& r, const IntersectionDistance<double>& dist) {
  std::vector<double> ds;
  for (const auto& z : r.iterates) {
    const double v = dist(z);
    if (v <= 1e-11) break;
    ds.push_back(v);
  }
  if (ds.size() < 5) return 0.0;
  return estimate_rates(ds).q;
}

void audit_rates(const AuditConfig& cfg, Recorder& rec) {
  const int dim = std::max(2, cfg.dim);
  std::size_t k = 0;
  for (double angle : {M_PI / 6, M_PI / 4, M_PI / 3}) {
    const auto hp = gen_halfspace_pair(angle, dim, cfg.seed + k);
    const auto dist = linear_pair_intersection_distance(hp.X, hp.Y);
    const auto eb = estimate_error_bound(hp.X, hp.Y, dist, Vec(Vec::Zero(dim)), 1.0, 20000,
                                         substream(cfg.seed, k, kRateDraw)());
    const auto bounds = rate_bounds(eb.omega);

    // Start in the cone opposite the wedge, where MAP zigzags between the boundaries.
    const Vec a1 = hp.X.get_if<Halfspace<double>>()->normal;
    const Vec a2 = hp.Y.get_if<Halfspace<double>>()->normal;
    const Vec z0 = (a1 + a2).normalized() + 0.1 * (a1 - a2).normalized();
    const std::string family = "halfspace_pair_" + std::to_string(int(std::lround(angle * 180 / M_PI))) + "deg";

    std::vector<StoppingCriterion<double>> stop{GapToFirstSet<double>{1e-13}, ProjectionBudget{1000}};
    const std::array<std::pair<MethodKind, double>, 3> cases{
        {{MethodKind::MAP, bounds.map}, {MethodKind::SPM, bounds.spm}, {MethodKind::CCRM, bounds.ccrm}}};
    for (const auto& [m, bound] : cases) {
      const auto r = run(m, hp.X, hp.Y, z0, stop);
      rec.record("rates", family, k, std::nullopt, tail_ratio(r, dist) - bound - 5e-2,
                 std::string(to_string(m)) + " tail ratio above its rate bound");
    }
    ++k;
  }
}

void audit_eb(const AuditConfig& cfg, Recorder& rec) {
  const int dim = std::max(2, cfg.dim);
  const Vec origin = Vec::Zero(dim);

  {
    // Anchor on the boundary so that half of the samples fall outside.
    const auto hp = gen_halfspace_pair(M_PI / 4, dim, cfg.seed);
    const auto dist = linear_pair_intersection_distance(hp.X, hp.X);
    const auto est = estimate_error_bound(hp.X, hp.X, dist, origin, 1.0, 2000, substream(cfg.seed, 0, kEbDraw)(),
                                          ErrorBoundForm::Ambient);
    rec.record("eb", "identical_halfspaces", 0, std::nullopt, std::abs(est.omega - 1.0) - 1e-12,
               "omega for X = Y differs from 1");
  }
  {
    const auto hp = gen_halfspace_pair(M_PI / 3, dim, cfg.seed);
    const auto est = estimate_error_bound(hp.X, hp.Y, linear_pair_intersection_distance(hp.X, hp.Y), origin, 0.1,
                                          20000, substream(cfg.seed, 1, kEbDraw)());
    rec.record("eb", "halfspace_pair_60deg", 1, std::nullopt, std::abs(est.omega - hp.omega_true) - 2e-2,
               "omega differs from sin(pi/3)");
  }
  {
    // Tangent unit balls meeting only at the origin: the sampled constant shrinks with the radius.
    Vec e = Vec::Zero(dim);
    e(0) = 1.0;
    const auto X = make_ball<double>(-e, 1.0);
    const auto Y = make_ball<double>(e, 1.0);
    const auto dist = point_intersection_distance<double>(origin);
    const double wide = estimate_error_bound(X, Y, dist, origin, 0.1, 5000, substream(cfg.seed, 2, kEbDraw)()).omega;
    const double narrow = estimate_error_bound(X, Y, dist, origin, 0.01, 5000, substream(cfg.seed, 3, kEbDraw)()).omega;
    rec.record("eb", "tangent_balls", 2, std::nullopt, narrow - wide, "omega does not shrink with the radius");
    rec.record("eb", "tangent_balls", 2, std::nullopt, narrow - 0.05, "omega not near zero at radius 0.01");
  }
}

}  // namespace

AuditReport run_audit(const AuditConfig& config) {
  if (config.dim < 1) throw std::invalid_argument("audit: dim must be positive");
  if (config.draws < 1) throw std::invalid_argument("audit: draws must be positive");
  AuditReport report;
  report.seed = config.seed;
  report.dim = config.dim;
  Recorder rec(report);
  const auto has = [&](AuditCheck c) {
    return std::find(config.checks.begin(), config.checks.end(), c) != config.checks.end();
  };

  const bool per_draw = has(AuditCheck::Centralized) || has(AuditCheck::Qne) || has(AuditCheck::Oracle);
  if (per_draw) {
    // Short runs for Fejer monotonicity on every eighth draw keep the cost near that of the one-step checks.
    for (std::size_t k = 0; k < std::size_t(config.draws); ++k) {
      const Draw d = make_draw(config, k);
      if (has(AuditCheck::Centralized)) audit_centralized(d, k, rec);
      if (has(AuditCheck::Qne)) {
        audit_qne(d, k, rec);
        if (k % 8 == 0) audit_fejer(d, k, rec);
      }
      if (has(AuditCheck::Oracle)) audit_oracle(d, k, rec);
    }
  }
  if (has(AuditCheck::Rates)) audit_rates(config, rec);
  if (has(AuditCheck::Eb)) audit_eb(config, rec);
  return report;
}

nlohmann::json audit_report_json(const AuditReport& report) {
  using nlohmann::json;
  json j;
  j["schema"] = "circumfeas.audit/1";
  j["seed"] = report.seed;
  j["dim"] = report.dim;
  j["passed"] = report.passed();
  json checks = json::array();
  for (const auto& s : report.summaries) {
    checks.push_back({{"check", s.check},
                      {"evaluations", s.evaluations},
                      {"violations", s.violations},
                      {"worst_margin", std::isfinite(s.worst_margin) ? json(s.worst_margin) : json(nullptr)}});
  }
  j["checks"] = checks;
  json viol = json::array();
  for (const auto& v : report.violations) {
    viol.push_back({{"check", v.check},
                    {"family", v.family},
                    {"draw", v.draw},
                    {"iterate", v.iterate ? json(*v.iterate) : json(nullptr)},
                    {"residual", std::isfinite(v.residual) ? json(v.residual) : json(nullptr)},
                    {"detail", v.detail}});
  }
  j["violations"] = viol;
  return j;
}

}  // namespace circumfeas
