#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "circumfeas/convex_sets.hpp"
#include "circumfeas/core.hpp"

namespace circumfeas {

// ---------------------------------------------------------------------------
// Centralized points

template <typename Scalar>
struct CentralizationCheck {
  Scalar inner_product{};             // <P_X z - z, P_Y z - z>
  Scalar reflection_inner_product{};  // <R_X z - z, R_Y z - z>
  bool centralized = false;
  bool strictly = false;  // centralized and outside both X and Y
};

/// A point z is centralized when <R_X z - z, R_Y z - z> <= 0, equivalently
/// <P_X z - z, P_Y z - z> <= 0. The sign test allows rel_tol * (1 + ||z||)^2.
template <typename Scalar>
CentralizationCheck<Scalar> check_centralized(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                              const VectorX<Scalar>& z, Scalar rel_tol = Scalar(1e-10)) {
  const VectorX<Scalar> px = project(X, z);
  const VectorX<Scalar> py = project(Y, z);
  const VectorX<Scalar> rx = Scalar(2) * px - z;
  const VectorX<Scalar> ry = Scalar(2) * py - z;
  CentralizationCheck<Scalar> c;
  c.inner_product = (px - z).dot(py - z);
  c.reflection_inner_product = (rx - z).dot(ry - z);
  const Scalar scale = Scalar(1) + z.norm();
  c.centralized = c.inner_product <= rel_tol * scale * scale;
  const Scalar outside = Scalar(1e-12) * scale;
  c.strictly = c.centralized && (px - z).norm() > outside && (py - z).norm() > outside;
  return c;
}

// ---------------------------------------------------------------------------
// Supporting halfspaces at z

/// S_X = {w : <w - P_X z, z - P_X z> <= 0} and its boundary H_X, likewise for Y.
/// A side is empty (whole space) when z already lies in the corresponding set.
template <typename Scalar>
struct SupportHalfspacePair {
  std::optional<ConvexSet<Scalar>> S_X, S_Y;
  std::optional<ConvexSet<Scalar>> H_X, H_Y;

  bool x_is_whole_space() const { return !S_X.has_value(); }
  bool y_is_whole_space() const { return !S_Y.has_value(); }
};

template <typename Scalar>
SupportHalfspacePair<Scalar> support_halfspaces(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                                const VectorX<Scalar>& z) {
  SupportHalfspacePair<Scalar> pair;
  const Scalar outside = Scalar(1e-12) * (Scalar(1) + z.norm());
  auto side = [&](const ConvexSet<Scalar>& C, std::optional<ConvexSet<Scalar>>& S,
                  std::optional<ConvexSet<Scalar>>& H) {
    const VectorX<Scalar> p = project(C, z);
    const VectorX<Scalar> normal = z - p;
    if (normal.norm() <= outside) return;
    const Scalar offset = normal.dot(p);
    S.emplace(make_halfspace<Scalar>(normal, offset));
    H.emplace(make_hyperplane<Scalar>(normal, offset));
  };
  side(X, pair.S_X, pair.H_X);
  side(Y, pair.S_Y, pair.H_Y);
  return pair;
}

/// A linear constraint <a, x> <= b, or <a, x> = b when equality is set.
template <typename Scalar>
struct LinearConstraint {
  VectorX<Scalar> a;
  Scalar b{};
  bool equality = false;
};

template <typename Scalar>
std::optional<LinearConstraint<Scalar>> as_linear_constraint(const ConvexSet<Scalar>& C) {
  if (const auto* h = C.template get_if<Halfspace<Scalar>>()) return LinearConstraint<Scalar>{h->normal, h->offset, false};
  if (const auto* h = C.template get_if<Hyperplane<Scalar>>()) return LinearConstraint<Scalar>{h->normal, h->offset, true};
  return std::nullopt;
}

/// Projection onto the intersection of two linear constraints by the three-case
/// KKT analysis: P_{C1}(z) if it satisfies C2, P_{C2}(z) if it satisfies C1, and
/// otherwise the projection onto both boundaries through a 2x2 multiplier solve.
template <typename Scalar>
VectorX<Scalar> project_two_constraints(const LinearConstraint<Scalar>& c1, const LinearConstraint<Scalar>& c2,
                                        const VectorX<Scalar>& z) {
  require_dim(z.size(), c1.a.size(), "project_two_constraints");
  require_dim(z.size(), c2.a.size(), "project_two_constraints");
  const Scalar slack = Scalar(1e-12) * (Scalar(1) + z.norm());
  auto feasible = [&](const LinearConstraint<Scalar>& c, const VectorX<Scalar>& x) {
    const Scalar r = (c.a.dot(x) - c.b) / c.a.norm();
    return c.equality ? std::abs(r) <= slack : r <= slack;
  };
  auto single = [&](const LinearConstraint<Scalar>& c) -> VectorX<Scalar> {
    const Scalar excess = c.a.dot(z) - c.b;
    if (!c.equality && excess <= Scalar(0)) return z;
    return z - (excess / c.a.squaredNorm()) * c.a;
  };
  if (feasible(c1, z) && feasible(c2, z)) return z;
  const VectorX<Scalar> p1 = single(c1);
  if (feasible(c2, p1)) return p1;
  const VectorX<Scalar> p2 = single(c2);
  if (feasible(c1, p2)) return p2;

  Eigen::Matrix<Scalar, 2, 2> gram;
  gram << c1.a.squaredNorm(), c1.a.dot(c2.a), c1.a.dot(c2.a), c2.a.squaredNorm();
  const Eigen::Matrix<Scalar, 2, 1> rhs(c1.a.dot(z) - c1.b, c2.a.dot(z) - c2.b);
  const Scalar det = gram.determinant();
  if (!(std::abs(det) > Scalar(1e-14) * gram(0, 0) * gram(1, 1))) {
    throw std::runtime_error("project_two_constraints: inconsistent constraints (parallel boundaries)");
  }
  const Eigen::Matrix<Scalar, 2, 1> mult = gram.inverse() * rhs;
  return z - mult(0) * c1.a - mult(1) * c2.a;
}

/// P_{S_X cap S_Y}(z); at a centralized z this coincides with the pCRM step.
template <typename Scalar>
VectorX<Scalar> project_halfspace_intersection(const SupportHalfspacePair<Scalar>& pair, const VectorX<Scalar>& z) {
  if (pair.x_is_whole_space() && pair.y_is_whole_space()) return z;
  if (pair.x_is_whole_space()) return project(*pair.S_Y, z);
  if (pair.y_is_whole_space()) return project(*pair.S_X, z);
  return project_two_constraints(*as_linear_constraint(*pair.S_X), *as_linear_constraint(*pair.S_Y), z);
}

// ---------------------------------------------------------------------------
// Error bound

template <typename Scalar>
using IntersectionDistance = std::function<Scalar(const VectorX<Scalar>&)>;

/// Exact dist(., X cap Y) for a pair of halfspaces or hyperplanes.
template <typename Scalar>
IntersectionDistance<Scalar> linear_pair_intersection_distance(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y) {
  auto cx = as_linear_constraint(X);
  auto cy = as_linear_constraint(Y);
  if (!cx || !cy) throw std::invalid_argument("linear_pair_intersection_distance: halfspace or hyperplane sets required");
  return [cx = *cx, cy = *cy](const VectorX<Scalar>& z) { return (project_two_constraints(cx, cy, z) - z).norm(); };
}

/// dist(., {s}) for a singleton (or a known nearest point used as surrogate).
template <typename Scalar>
IntersectionDistance<Scalar> point_intersection_distance(VectorX<Scalar> s) {
  return [s = std::move(s)](const VectorX<Scalar>& z) { return (z - s).norm(); };
}

/// Projection onto X cap Y by Dykstra's alternating scheme, run until the
/// iterates move less than tol. Audit use only.
template <typename Scalar>
VectorX<Scalar> dykstra_project(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y, const VectorX<Scalar>& z,
                                Scalar tol = Scalar(1e-12), int max_iterations = 100000) {
  VectorX<Scalar> y = z;
  VectorX<Scalar> p = VectorX<Scalar>::Zero(z.size());
  VectorX<Scalar> q = VectorX<Scalar>::Zero(z.size());
  VectorX<Scalar> x = z;
  for (int k = 0; k < max_iterations; ++k) {
    const VectorX<Scalar> y_next = project(X, VectorX<Scalar>(x + p));
    p = x + p - y_next;
    const VectorX<Scalar> x_next = project(Y, VectorX<Scalar>(y_next + q));
    q = y_next + q - x_next;
    const Scalar moved = (x_next - x).norm() + (y_next - y).norm();
    x = x_next;
    y = y_next;
    if (moved <= tol * (Scalar(1) + x.norm())) break;
  }
  return x;
}

template <typename Scalar>
IntersectionDistance<Scalar> dykstra_intersection_distance(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                                           Scalar tol = Scalar(1e-12)) {
  return [X, Y, tol](const VectorX<Scalar>& z) { return (dykstra_project(X, Y, z, tol) - z).norm(); };
}

template <typename Scalar>
struct ErrorBoundEstimate {
  Scalar omega{};
  Scalar beta{};  // sqrt(1 - omega^2)
  std::size_t sample_count = 0;
  Scalar neighborhood_radius{};
};

enum class ErrorBoundForm {
  // Ratio evaluated at P_X(w) and P_Y(w) for each sample w; the points where the
  // rate analysis applies the bound, equivalent to kappa dist(z, X cap Y) <= dist(z, X) on Y.
  OnSets,
  // Ratio evaluated at every ambient sample w.
  Ambient,
};

/// Empirical minimum of max{dist(z,X), dist(z,Y)} / dist(z, X cap Y) over uniform
/// samples in the ball of the given radius around anchor (a point of X cap Y).
template <typename Scalar>
ErrorBoundEstimate<Scalar> estimate_error_bound(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y,
                                                const IntersectionDistance<Scalar>& dist_to_intersection,
                                                const VectorX<Scalar>& anchor, Scalar radius, std::size_t samples,
                                                std::uint64_t seed, ErrorBoundForm form = ErrorBoundForm::OnSets) {
  require_dim(X.dim(), anchor.size(), "estimate_error_bound");
  if (!(radius > 0) || samples == 0) throw std::invalid_argument("estimate_error_bound: radius and samples must be positive");
  const Eigen::Index n = anchor.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const Scalar floor_dist = Scalar(1e-12) * radius;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  std::size_t valid = 0;
  auto consider = [&](const VectorX<Scalar>& z) {
    const Scalar d = dist_to_intersection(z);
    if (d <= floor_dist) return;
    const Scalar ratio = std::max(gap_to_set(X, z), gap_to_set(Y, z)) / d;
    best = std::min(best, ratio);
    ++valid;
  };
  for (std::size_t i = 0; i < samples; ++i) {
    VectorX<Scalar> dir(n);
    for (Eigen::Index j = 0; j < n; ++j) dir(j) = Scalar(normal(rng));
    const Scalar len = radius * Scalar(std::pow(uniform(rng), 1.0 / double(n)));
    const VectorX<Scalar> w = anchor + (len / dir.norm()) * dir;
    if (form == ErrorBoundForm::OnSets) {
      consider(project(X, w));
      consider(project(Y, w));
    } else {
      consider(w);
    }
  }
  if (valid == 0) throw std::runtime_error("estimate_error_bound: every sample lies in the intersection");
  ErrorBoundEstimate<Scalar> e;
  e.omega = std::min(Scalar(1), best);
  e.beta = std::sqrt(std::max(Scalar(0), Scalar(1) - e.omega * e.omega));
  e.sample_count = valid;
  e.neighborhood_radius = radius;
  return e;
}

// ---------------------------------------------------------------------------
// Rates

template <typename Scalar>
struct RateEstimate {
  Scalar q{};  // max successive ratio d_{k+1} / d_k over the tail
  Scalar r{};  // max d_k^{1/k} over the tail
  Scalar tail_fraction{};
};

/// Asymptotic constants of a positive distance sequence d_0, d_1, ..., read off
/// the final tail_fraction of the entries.
template <typename Scalar>
RateEstimate<Scalar> estimate_rates(std::span<const Scalar> distances, Scalar tail_fraction = Scalar(0.5)) {
  if (distances.size() < 5) throw std::invalid_argument("estimate_rates: need at least 5 distances");
  if (!(tail_fraction > 0 && tail_fraction < 1)) throw std::invalid_argument("estimate_rates: tail_fraction in (0,1)");
  for (Scalar d : distances) {
    if (!(d > 0) || !std::isfinite(d)) throw std::invalid_argument("estimate_rates: distances must be positive");
  }
  const std::size_t n = distances.size();
  std::size_t start = static_cast<std::size_t>(std::floor((Scalar(1) - tail_fraction) * Scalar(n)));
  start = std::min(start, n - 2);
  RateEstimate<Scalar> e;
  e.tail_fraction = tail_fraction;
  for (std::size_t k = start; k + 1 < n; ++k) e.q = std::max(e.q, distances[k + 1] / distances[k]);
  for (std::size_t k = std::max<std::size_t>(start, 1); k < n; ++k) {
    e.r = std::max(e.r, Scalar(std::pow(distances[k], Scalar(1) / Scalar(k))));
  }
  return e;
}

template <typename Scalar>
RateEstimate<Scalar> estimate_rates(const std::vector<Scalar>& distances, Scalar tail_fraction = Scalar(0.5)) {
  return estimate_rates(std::span<const Scalar>(distances), tail_fraction);
}

template <typename Scalar>
struct RateBounds {
  Scalar map{};   // beta^2
  Scalar spm{};   // (1 + beta) / 2
  Scalar ccrm{};  // beta^2 (1 + beta) / 2
};

/// Linear-rate constants implied by an error bound with constant omega in (0, 1].
template <typename Scalar>
RateBounds<Scalar> rate_bounds(Scalar omega) {
  if (!(omega > 0 && omega <= 1)) throw std::invalid_argument("rate_bounds: omega must lie in (0, 1]");
  const Scalar beta = std::sqrt(std::max(Scalar(0), Scalar(1) - omega * omega));
  const Scalar b2 = beta * beta;
  return {b2, (Scalar(1) + beta) / Scalar(2), b2 * (Scalar(1) + beta) / Scalar(2)};
}

}  // namespace circumfeas
