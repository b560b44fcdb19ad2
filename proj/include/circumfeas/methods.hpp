#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "circumfeas/circumcenter.hpp"
#include "circumfeas/convex_sets.hpp"
#include "circumfeas/core.hpp"

namespace circumfeas {

enum class MethodKind { MAP, SPM, CRM, PCRM, CRMPROD, CCRM };

inline constexpr MethodKind kAllMethods[] = {MethodKind::MAP,  MethodKind::SPM,     MethodKind::CRM,
                                             MethodKind::PCRM, MethodKind::CRMPROD, MethodKind::CCRM};

inline std::string_view to_string(MethodKind m) {
  switch (m) {
    case MethodKind::MAP: return "map";
    case MethodKind::SPM: return "spm";
    case MethodKind::CRM: return "crm";
    case MethodKind::PCRM: return "pcrm";
    case MethodKind::CRMPROD: return "crmprod";
    case MethodKind::CCRM: return "ccrm";
  }
  return "unknown";
}

inline std::optional<MethodKind> parse_method(std::string_view s) {
  for (MethodKind m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

/// Projections onto X or Y charged per iteration. cCRM reuses P_X(z_MAP) as
/// P_X(z_C); CRMprod's diagonal average is not charged.
inline constexpr std::uint64_t projections_per_iteration(MethodKind m) {
  return m == MethodKind::CCRM ? 4 : 2;
}

// ---------------------------------------------------------------------------
// Iteration operators. Each charges its projections to the optional counter.

/// P_Y(P_X(z))
template <typename Scalar>
VectorX<Scalar> step_map(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y, const VectorX<Scalar>& z,
                         ProjectionCounter* counter = nullptr, Scalar tol = default_tolerance<Scalar>()) {
  return project(Y, project(X, z, tol, counter), tol, counter);
}

/// (P_X(z) + P_Y(z)) / 2
template <typename Scalar>
VectorX<Scalar> step_spm(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y, const VectorX<Scalar>& z,
                         ProjectionCounter* counter = nullptr, Scalar tol = default_tolerance<Scalar>()) {
  return Scalar(0.5) * (project(X, z, tol, counter) + project(Y, z, tol, counter));
}

/// circ(z, R_X z, R_Y R_X z)
template <typename Scalar>
CircumcenterResult<Scalar> step_crm(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                    const VectorX<Scalar>& z, ProjectionCounter* counter = nullptr,
                                    Scalar tol = default_tolerance<Scalar>()) {
  const VectorX<Scalar> rx = reflect(X, z, tol, counter);
  const VectorX<Scalar> ryrx = reflect(Y, rx, tol, counter);
  return circumcenter3<Scalar>(z, rx, ryrx);
}

/// circ(z, R_X z, R_Y z)
template <typename Scalar>
CircumcenterResult<Scalar> step_pcrm(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                     const VectorX<Scalar>& z, ProjectionCounter* counter = nullptr,
                                     Scalar tol = default_tolerance<Scalar>()) {
  const VectorX<Scalar> rx = reflect(X, z, tol, counter);
  const VectorX<Scalar> ry = reflect(Y, z, tol, counter);
  return circumcenter3<Scalar>(z, rx, ry);
}

template <typename Scalar>
struct CentralizationTrace {
  VectorX<Scalar> z_map;     // P_Y(P_X(z))
  VectorX<Scalar> px_map;    // P_X(z_map), equal to P_X(z_c)
  VectorX<Scalar> centered;  // z_c = (z_map + px_map) / 2
};

template <typename Scalar>
CentralizationTrace<Scalar> centralize_trace(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                             const VectorX<Scalar>& z, ProjectionCounter* counter = nullptr,
                                             Scalar tol = default_tolerance<Scalar>()) {
  CentralizationTrace<Scalar> t;
  t.z_map = step_map(X, Y, z, counter, tol);
  t.px_map = project(X, t.z_map, tol, counter);
  t.centered = Scalar(0.5) * (t.z_map + t.px_map);
  return t;
}

/// z_C = T_SPM(T_MAP(z)) = (z_MAP + P_X(z_MAP)) / 2; the result is centralized.
template <typename Scalar>
VectorX<Scalar> centralize(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y, const VectorX<Scalar>& z,
                           ProjectionCounter* counter = nullptr, Scalar tol = default_tolerance<Scalar>()) {
  return centralize_trace(X, Y, z, counter, tol).centered;
}

/// One cCRM iteration: the pCRM circumcenter taken at centralize(z), using four projections.
template <typename Scalar>
CircumcenterResult<Scalar> step_ccrm(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                     const VectorX<Scalar>& z, ProjectionCounter* counter = nullptr,
                                     Scalar tol = default_tolerance<Scalar>()) {
  const auto t = centralize_trace(X, Y, z, counter, tol);
  const VectorX<Scalar>& zc = t.centered;
  const VectorX<Scalar> rx = Scalar(2) * t.px_map - zc;
  const VectorX<Scalar> ry = Scalar(2) * project(Y, zc, tol, counter) - zc;
  return circumcenter3<Scalar>(zc, rx, ry);
}

/// One CRMprod iteration in R^{2n}: circ(zz, R_K zz, R_D R_K zz) with K = X x Y
/// given as a Product set.
template <typename Scalar>
CircumcenterResult<Scalar> step_crmprod(const ConvexSet<Scalar>& K, const VectorX<Scalar>& zz,
                                        ProjectionCounter* counter = nullptr,
                                        Scalar tol = default_tolerance<Scalar>()) {
  if (!K.template get_if<Product<Scalar>>()) throw InvalidSet("step_crmprod: K must be a product set");
  require_dim(K.dim(), zz.size(), "step_crmprod");
  const VectorX<Scalar> rk = reflect(K, zz, tol, counter);
  const VectorX<Scalar> rdrk = Scalar(2) * project_diagonal(rk) - rk;
  return circumcenter3<Scalar>(zz, rk, rdrk);
}

template <typename Scalar>
CircumcenterResult<Scalar> step_crmprod(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                        const VectorX<Scalar>& zz, ProjectionCounter* counter = nullptr,
                                        Scalar tol = default_tolerance<Scalar>()) {
  return step_crmprod(make_product(X, Y), zz, counter, tol);
}

/// (z, z)
template <typename Scalar>
VectorX<Scalar> lift_to_diagonal(const VectorX<Scalar>& z) {
  VectorX<Scalar> zz(2 * z.size());
  zz << z, z;
  return zz;
}

// ---------------------------------------------------------------------------
// Driver

/// ||P_X(z) - z|| < eps, X being the first set.
template <typename Scalar>
struct GapToFirstSet {
  Scalar eps;
};

/// ||z - solution|| < eps
template <typename Scalar>
struct DistanceToKnownSolution {
  Scalar eps;
  VectorX<Scalar> solution;
};

/// Stop before an iteration would exceed max projections.
struct ProjectionBudget {
  std::uint64_t max;
};

template <typename Scalar>
using StoppingCriterion = std::variant<GapToFirstSet<Scalar>, DistanceToKnownSolution<Scalar>, ProjectionBudget>;

enum class StopReason { GapTolerance, SolutionTolerance, BudgetExhausted, IterationCap, RankDeficient };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::GapTolerance: return "gap_tolerance";
    case StopReason::SolutionTolerance: return "solution_tolerance";
    case StopReason::BudgetExhausted: return "budget_exhausted";
    case StopReason::IterationCap: return "iteration_cap";
    case StopReason::RankDeficient: return "rank_deficient";
  }
  return "unknown";
}

inline bool converged(StopReason r) { return r == StopReason::GapTolerance || r == StopReason::SolutionTolerance; }

template <typename Scalar>
struct RunOptions {
  bool keep_iterates = true;  // otherwise only the first and last iterates are kept
  std::uint64_t max_iterations = 1'000'000;
  Scalar tol = default_tolerance<Scalar>();
};

template <typename Scalar>
struct MethodRun {
  MethodKind method = MethodKind::CCRM;
  std::vector<VectorX<Scalar>> iterates;             // iterates[0] is the start point
  std::vector<std::uint64_t> iterate_projections;    // entry k: projections spent producing iterate k + 1
  std::vector<Scalar> gaps;                          // ||P_X(z^k) - z^k|| (CRMprod: ||P_K(zz^k) - zz^k||)
  std::vector<Scalar> solution_distances;            // ||z^k - solution||, when a solution is known
  std::uint64_t total_projections = 0;
  StopReason stop_reason = StopReason::IterationCap;
  std::string diagnostic;
  double wall_seconds = 0.0;

  std::size_t iterations() const { return iterate_projections.size(); }
  const VectorX<Scalar>& final_point() const { return iterates.back(); }
  Scalar final_gap() const { return gaps.back(); }
};

/// Iterates `method` from z0 until one of the criteria fires. CRMprod runs in the
/// product space from (z0, z0) and reports first blocks; its iterates stay on the
/// diagonal, so its gap is measured to K = X x Y (the first block alone can sit in
/// X while far from Y). The gap and distance monitors use projections that are not
/// charged to the budget.
template <typename Scalar>
MethodRun<Scalar> run(MethodKind method, const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                      const VectorX<Scalar>& z0, const std::vector<StoppingCriterion<Scalar>>& stop,
                      const RunOptions<Scalar>& options = {}) {
  require_dim(X.dim(), Y.dim(), "run: sets");
  require_dim(X.dim(), z0.size(), "run: start point");
  if (!z0.allFinite()) throw std::invalid_argument("run: start point must be finite");
  if (stop.empty()) throw std::invalid_argument("run: no stopping criteria");

  std::optional<Scalar> gap_eps;
  const DistanceToKnownSolution<Scalar>* known = nullptr;
  std::optional<std::uint64_t> budget;
  for (const auto& c : stop) {
    if (const auto* g = std::get_if<GapToFirstSet<Scalar>>(&c)) {
      if (!(g->eps > 0)) throw std::invalid_argument("run: eps must be positive");
      gap_eps = gap_eps ? std::max(*gap_eps, g->eps) : g->eps;
    } else if (const auto* d = std::get_if<DistanceToKnownSolution<Scalar>>(&c)) {
      if (!(d->eps > 0)) throw std::invalid_argument("run: eps must be positive");
      require_dim(X.dim(), d->solution.size(), "run: known solution");
      known = d;
    } else {
      const auto& b = std::get<ProjectionBudget>(c);
      if (b.max < 1) throw std::invalid_argument("run: budget must be at least 1");
      budget = budget ? std::min(*budget, b.max) : b.max;
    }
  }
  if (!budget) throw std::invalid_argument("run: a projection budget criterion is required");

  const auto t0 = std::chrono::steady_clock::now();
  const Scalar tol = options.tol;
  const Eigen::Index n = z0.size();
  const std::uint64_t cost = projections_per_iteration(method);

  std::optional<ConvexSet<Scalar>> K;
  if (method == MethodKind::CRMPROD) K.emplace(make_product(X, Y));

  MethodRun<Scalar> out;
  out.method = method;
  ProjectionCounter counter;
  counter.count_diagonal = false;

  VectorX<Scalar> state = method == MethodKind::CRMPROD ? lift_to_diagonal(z0) : z0;
  VectorX<Scalar> point = z0;
  out.iterates.push_back(point);

  auto finish = [&](StopReason r) {
    out.stop_reason = r;
    out.total_projections = counter.count;
    if (!options.keep_iterates && out.iterations() > 0) out.iterates.push_back(point);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  };

  while (true) {
    const Scalar gap = K ? gap_to_set(*K, state, tol) : gap_to_set(X, point, tol);
    out.gaps.push_back(gap);
    if (known) out.solution_distances.push_back((point - known->solution).norm());

    if (gap_eps && gap < *gap_eps) return finish(StopReason::GapTolerance);
    if (known && out.solution_distances.back() < known->eps) return finish(StopReason::SolutionTolerance);
    if (counter.count + cost > *budget) return finish(StopReason::BudgetExhausted);
    if (out.iterations() >= options.max_iterations) return finish(StopReason::IterationCap);

    const std::uint64_t before = counter.count;
    std::optional<CircumcenterResult<Scalar>> circ;
    switch (method) {
      case MethodKind::MAP: state = step_map(X, Y, state, &counter, tol); break;
      case MethodKind::SPM: state = step_spm(X, Y, state, &counter, tol); break;
      case MethodKind::CRM: circ = step_crm(X, Y, state, &counter, tol); break;
      case MethodKind::PCRM: circ = step_pcrm(X, Y, state, &counter, tol); break;
      case MethodKind::CCRM: circ = step_ccrm(X, Y, state, &counter, tol); break;
      case MethodKind::CRMPROD: circ = step_crmprod(*K, state, &counter, tol); break;
    }
    if (circ) {
      if (circ->degeneracy == Degeneracy::RankDeficient || !circ->center.allFinite()) {
        counter.count = before;
        out.diagnostic = "collinear circumcenter vertices at iteration " + std::to_string(out.iterations());
        return finish(StopReason::RankDeficient);
      }
      state = std::move(circ->center);
    }
    out.iterate_projections.push_back(counter.count - before);
    point = method == MethodKind::CRMPROD ? VectorX<Scalar>(state.head(n)) : state;
    if (options.keep_iterates) {
      out.iterates.push_back(point);
    }
  }
}

}  // namespace circumfeas
