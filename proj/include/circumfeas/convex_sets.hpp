#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include <Eigen/Dense>

#include "circumfeas/core.hpp"

namespace circumfeas {

template <typename Scalar>
class ConvexSet;

/// {x : <normal, x> <= offset}
template <typename Scalar>
struct Halfspace {
  VectorX<Scalar> normal;
  Scalar offset{};
};

/// {x : <normal, x> = offset}
template <typename Scalar>
struct Hyperplane {
  VectorX<Scalar> normal;
  Scalar offset{};
};

template <typename Scalar>
struct Box {
  VectorX<Scalar> lower;
  VectorX<Scalar> upper;
};

template <typename Scalar>
struct Ball {
  VectorX<Scalar> center;
  Scalar radius{};
};

/// basepoint + span(columns of basis); the columns are orthonormal.
template <typename Scalar>
struct AffineSubspace {
  VectorX<Scalar> basepoint;
  MatrixX<Scalar> basis;
};

/// {z : <z, A z> + 2 <z, b> <= alpha} with A symmetric positive definite.
///
/// The constructor caches the centred form {z : (z-c)^T A (z-c) <= level},
/// c = -A^{-1} b, level = alpha + b^T A^{-1} b, together with the spectral
/// decomposition A = V diag(eigenvalues) V^T.  Projection then reduces to a
/// scalar root find in the eigenbasis.
template <typename Scalar>
struct Ellipsoid {
  MatrixX<Scalar> A;
  VectorX<Scalar> b;
  Scalar alpha{};

  VectorX<Scalar> center;
  Scalar level{};
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;
};

/// Cartesian product left x right, acting blockwise on (z1, z2).
template <typename Scalar>
struct Product {
  std::shared_ptr<const ConvexSet<Scalar>> left;
  std::shared_ptr<const ConvexSet<Scalar>> right;
};

/// {(z, z) : z in R^block_dim}
struct Diagonal {
  Eigen::Index block_dim{};
};

/// Immutable description of a closed convex set. Build through the make_* factories,
/// which validate the invariants of each variant.
template <typename Scalar>
class ConvexSet {
 public:
  using Variant = std::variant<Halfspace<Scalar>, Hyperplane<Scalar>, Box<Scalar>, Ball<Scalar>,
                               AffineSubspace<Scalar>, Ellipsoid<Scalar>, Product<Scalar>, Diagonal>;

  explicit ConvexSet(Variant v) : v_(std::move(v)) { dim_ = compute_dim(); }

  Eigen::Index dim() const { return dim_; }
  const Variant& variant() const { return v_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  std::string_view name() const {
    static constexpr std::string_view names[] = {"halfspace", "hyperplane", "box",     "ball",
                                                 "affine",    "ellipsoid",  "product", "diagonal"};
    return names[v_.index()];
  }

 private:
  Eigen::Index compute_dim() const {
    return std::visit(
        [](const auto& s) -> Eigen::Index {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Halfspace<Scalar>> || std::is_same_v<T, Hyperplane<Scalar>>) {
            return s.normal.size();
          } else if constexpr (std::is_same_v<T, Box<Scalar>>) {
            return s.lower.size();
          } else if constexpr (std::is_same_v<T, Ball<Scalar>> || std::is_same_v<T, Ellipsoid<Scalar>>) {
            return s.center.size();
          } else if constexpr (std::is_same_v<T, AffineSubspace<Scalar>>) {
            return s.basepoint.size();
          } else if constexpr (std::is_same_v<T, Product<Scalar>>) {
            return s.left->dim() + s.right->dim();
          } else {
            return 2 * s.block_dim;
          }
        },
        v_);
  }

  Variant v_;
  Eigen::Index dim_{0};
};

template <typename Scalar>
Scalar default_tolerance() {
  return std::max(Scalar(1e-10), Scalar(100) * std::numeric_limits<Scalar>::epsilon());
}

inline constexpr int kEllipsoidMaxIterations = 200;

// Projections onto the input sets. Product adds its children's increments;
// Diagonal adds one unless count_diagonal is false.
struct ProjectionCounter {
  std::uint64_t count = 0;
  bool count_diagonal = true;
};

// ---------------------------------------------------------------------------
// Factories

template <typename Scalar>
ConvexSet<Scalar> make_halfspace(VectorX<Scalar> normal, Scalar offset) {
  if (normal.size() == 0 || !normal.allFinite() || normal.norm() == Scalar(0) || !std::isfinite(offset)) {
    throw InvalidSet("halfspace: normal must be nonzero and finite");
  }
  return ConvexSet<Scalar>(Halfspace<Scalar>{std::move(normal), offset});
}

template <typename Scalar>
ConvexSet<Scalar> make_hyperplane(VectorX<Scalar> normal, Scalar offset) {
  if (normal.size() == 0 || !normal.allFinite() || normal.norm() == Scalar(0) || !std::isfinite(offset)) {
    throw InvalidSet("hyperplane: normal must be nonzero and finite");
  }
  return ConvexSet<Scalar>(Hyperplane<Scalar>{std::move(normal), offset});
}

template <typename Scalar>
ConvexSet<Scalar> make_box(VectorX<Scalar> lower, VectorX<Scalar> upper) {
  require_dim(lower.size(), upper.size(), "box bounds");
  if (lower.size() == 0 || (lower.array() > upper.array()).any()) {
    throw InvalidSet("box: lower must not exceed upper");
  }
  return ConvexSet<Scalar>(Box<Scalar>{std::move(lower), std::move(upper)});
}

template <typename Scalar>
ConvexSet<Scalar> make_ball(VectorX<Scalar> center, Scalar radius) {
  if (center.size() == 0 || !center.allFinite() || !(radius > Scalar(0)) || !std::isfinite(radius)) {
    throw InvalidSet("ball: radius must be positive and center finite");
  }
  return ConvexSet<Scalar>(Ball<Scalar>{std::move(center), radius});
}

template <typename Scalar>
ConvexSet<Scalar> make_affine_subspace(VectorX<Scalar> basepoint, MatrixX<Scalar> basis) {
  if (basepoint.size() == 0 || !basepoint.allFinite()) throw InvalidSet("affine: basepoint must be finite");
  if (basis.cols() == 0) basis.resize(basepoint.size(), 0);
  require_dim(basepoint.size(), basis.rows(), "affine basis");
  if (basis.cols() > 0) {
    const MatrixX<Scalar> gram = basis.transpose() * basis;
    const MatrixX<Scalar> eye = MatrixX<Scalar>::Identity(basis.cols(), basis.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > Scalar(1e-12)) {
      throw InvalidSet("affine: basis vectors must be orthonormal");
    }
  }
  return ConvexSet<Scalar>(AffineSubspace<Scalar>{std::move(basepoint), std::move(basis)});
}

template <typename Scalar>
ConvexSet<Scalar> make_ellipsoid(MatrixX<Scalar> A, VectorX<Scalar> b, Scalar alpha) {
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) throw InvalidSet("ellipsoid: A must be square");
  require_dim(n, b.size(), "ellipsoid b");
  if (!A.allFinite() || !b.allFinite() || !std::isfinite(alpha)) throw InvalidSet("ellipsoid: non-finite data");
  const Scalar scale = std::max(Scalar(1), A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
    throw InvalidSet("ellipsoid: A must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(A);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > Scalar(0))) {
    throw InvalidSet("ellipsoid: A must be positive definite");
  }
  Ellipsoid<Scalar> e;
  e.eigenvalues = eig.eigenvalues();
  e.eigenvectors = eig.eigenvectors();
  const VectorX<Scalar> bt = e.eigenvectors.transpose() * b;
  // c = -A^{-1} b,  b^T A^{-1} b = sum bt_i^2 / lambda_i
  e.center = -(e.eigenvectors * (bt.array() / e.eigenvalues.array()).matrix());
  e.level = alpha + (bt.array().square() / e.eigenvalues.array()).sum();
  if (e.level < -Scalar(1e-12) * (Scalar(1) + std::abs(alpha))) {
    throw InvalidSet("ellipsoid: set is empty (alpha < -<A^{-1} b, b>)");
  }
  e.A = std::move(A);
  e.b = std::move(b);
  e.alpha = alpha;
  return ConvexSet<Scalar>(std::move(e));
}

/// {z : (z - center)^T A (z - center) <= level}
template <typename Scalar>
ConvexSet<Scalar> make_ellipsoid_centered(const MatrixX<Scalar>& A, const VectorX<Scalar>& center,
                                          Scalar level = Scalar(1)) {
  VectorX<Scalar> b = -(A * center);
  const Scalar alpha = level - center.dot(A * center);
  return make_ellipsoid<Scalar>(A, std::move(b), alpha);
}

template <typename Scalar>
ConvexSet<Scalar> make_product(const ConvexSet<Scalar>& X, const ConvexSet<Scalar>& Y) {
  require_dim(X.dim(), Y.dim(), "product factors");
  return ConvexSet<Scalar>(Product<Scalar>{std::make_shared<const ConvexSet<Scalar>>(X),
                                           std::make_shared<const ConvexSet<Scalar>>(Y)});
}

template <typename Scalar>
ConvexSet<Scalar> make_diagonal(Eigen::Index block_dim) {
  if (block_dim <= 0) throw InvalidSet("diagonal: block dimension must be positive");
  return ConvexSet<Scalar>(Diagonal{block_dim});
}

// ---------------------------------------------------------------------------
// Ellipsoid helpers

/// Constraint value g(z) = <z, A z> + 2 <z, b> - alpha, evaluated in the centred form.
template <typename Scalar, typename Derived>
Scalar ellipsoid_value(const Ellipsoid<Scalar>& e, const Eigen::MatrixBase<Derived>& z) {
  const VectorX<Scalar> u = e.eigenvectors.transpose() * (z - e.center);
  return (e.eigenvalues.array() * u.array().square()).sum() - e.level;
}

namespace detail {

// Solves min ||x - z|| s.t. (x-c)^T A (x-c) <= level through the KKT system
// x(mu) = (I + mu A)^{-1}(z - mu b).  In eigen-coordinates u = V^T (z - c),
// q(mu) = sum lambda_i u_i^2 / (1 + mu lambda_i)^2 is decreasing and the
// multiplier is its crossing with level.  Newton runs on 1/sqrt(q), which is
// exactly linear for a single active axis, inside a bisection bracket.
template <typename Scalar>
VectorX<Scalar> project_ellipsoid(const Ellipsoid<Scalar>& e, const VectorX<Scalar>& z, Scalar tol) {
  const VectorX<Scalar> u = e.eigenvectors.transpose() * (z - e.center);
  const auto lam = e.eigenvalues.array();
  const auto u2 = u.array().square();
  const Scalar q0 = (lam * u2).sum();
  if (q0 <= e.level) return z;
  if (e.level <= Scalar(0)) return e.center;

  const Scalar target = tol * (Scalar(1) + std::abs(e.alpha));
  const Scalar inv_sqrt_level = Scalar(1) / std::sqrt(e.level);
  Scalar lo = 0;
  Scalar hi = std::sqrt((u2 / lam).sum() / e.level);
  Scalar mu = 0;
  bool converged = false;
  for (int it = 0; it < kEllipsoidMaxIterations; ++it) {
    const auto denom = Scalar(1) + mu * lam;
    const Scalar q = (lam * u2 / denom.square()).sum();
    if (std::abs(q - e.level) <= target) {
      converged = true;
      break;
    }
    if (q > e.level) {
      lo = mu;
    } else {
      hi = mu;
    }
    if (hi - lo <= Scalar(4) * std::numeric_limits<Scalar>::epsilon() * hi) {
      converged = true;
      break;
    }
    const Scalar dq = Scalar(-2) * (lam.square() * u2 / denom.cube()).sum();
    const Scalar h = Scalar(1) / std::sqrt(q) - inv_sqrt_level;
    const Scalar dh = Scalar(-0.5) * dq / (q * std::sqrt(q));
    Scalar next = mu - h / dh;
    if (!(next > lo && next < hi)) next = Scalar(0.5) * (lo + hi);
    mu = next;
  }
  if (!converged) throw ProjectionFailure("ellipsoid projection: root finder hit its iteration cap");
  const VectorX<Scalar> y = (u.array() / (Scalar(1) + mu * lam)).matrix();
  return e.center + e.eigenvectors * y;
}

template <typename Scalar>
VectorX<Scalar> project_impl(const ConvexSet<Scalar>& set, const VectorX<Scalar>& z, Scalar tol,
                             ProjectionCounter* counter) {
  return std::visit(
      [&](const auto& s) -> VectorX<Scalar> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Product<Scalar>>) {
          const Eigen::Index n1 = s.left->dim();
          VectorX<Scalar> out(z.size());
          out.head(n1) = project_impl(*s.left, VectorX<Scalar>(z.head(n1)), tol, counter);
          out.tail(z.size() - n1) = project_impl(*s.right, VectorX<Scalar>(z.tail(z.size() - n1)), tol, counter);
          return out;
        } else if constexpr (std::is_same_v<T, Diagonal>) {
          if (counter && counter->count_diagonal) ++counter->count;
          const VectorX<Scalar> m = Scalar(0.5) * (z.head(s.block_dim) + z.tail(s.block_dim));
          VectorX<Scalar> out(z.size());
          out << m, m;
          return out;
        } else {
          if (counter) ++counter->count;
          if constexpr (std::is_same_v<T, Halfspace<Scalar>>) {
            const Scalar excess = s.normal.dot(z) - s.offset;
            if (excess <= Scalar(0)) return z;
            return z - (excess / s.normal.squaredNorm()) * s.normal;
          } else if constexpr (std::is_same_v<T, Hyperplane<Scalar>>) {
            const Scalar excess = s.normal.dot(z) - s.offset;
            return z - (excess / s.normal.squaredNorm()) * s.normal;
          } else if constexpr (std::is_same_v<T, Box<Scalar>>) {
            return z.cwiseMax(s.lower).cwiseMin(s.upper);
          } else if constexpr (std::is_same_v<T, Ball<Scalar>>) {
            const VectorX<Scalar> d = z - s.center;
            const Scalar r = d.norm();
            if (r <= s.radius) return z;
            return s.center + (s.radius / r) * d;
          } else if constexpr (std::is_same_v<T, AffineSubspace<Scalar>>) {
            return s.basepoint + s.basis * (s.basis.transpose() * (z - s.basepoint));
          } else {
            return project_ellipsoid(s, z, tol);
          }
        }
      },
      set.variant());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operators

/// Orthogonal projection onto the set. Exact for every variant except Ellipsoid,
/// where |g(P(z))| <= tol * (1 + |alpha|).
template <typename Scalar, typename Derived>
VectorX<Scalar> project(const ConvexSet<Scalar>& set, const Eigen::MatrixBase<Derived>& z,
                        Scalar tol = default_tolerance<Scalar>(), ProjectionCounter* counter = nullptr) {
  require_dim(set.dim(), z.size(), "project");
  if (!(tol > Scalar(0))) throw std::invalid_argument("project: tolerance must be positive");
  return detail::project_impl(set, VectorX<Scalar>(z), tol, counter);
}

template <typename Scalar, typename Derived>
VectorX<Scalar> project(const ConvexSet<Scalar>& set, const Eigen::MatrixBase<Derived>& z, ProjectionCounter& counter) {
  return project(set, z, default_tolerance<Scalar>(), &counter);
}

/// R = 2P - Id.
template <typename Scalar, typename Derived>
VectorX<Scalar> reflect(const ConvexSet<Scalar>& set, const Eigen::MatrixBase<Derived>& z,
                        Scalar tol = default_tolerance<Scalar>(), ProjectionCounter* counter = nullptr) {
  return Scalar(2) * project(set, z, tol, counter) - z;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> reflect(const ConvexSet<Scalar>& set, const Eigen::MatrixBase<Derived>& z, ProjectionCounter& counter) {
  return reflect(set, z, default_tolerance<Scalar>(), &counter);
}

/// Averages the two blocks of z: (z1, z2) -> (m, m), m = (z1 + z2) / 2.
template <typename Derived>
VectorX<typename Derived::Scalar> project_diagonal(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  if (z.size() % 2 != 0) throw DimensionMismatch("project_diagonal: odd dimension");
  const Eigen::Index n = z.size() / 2;
  const VectorX<Scalar> m = Scalar(0.5) * (z.head(n) + z.tail(n));
  VectorX<Scalar> out(z.size());
  out << m, m;
  return out;
}

/// Euclidean distance from z to the set. Never touches a counter.
template <typename Scalar, typename Derived>
Scalar gap_to_set(const ConvexSet<Scalar>& set, const Eigen::MatrixBase<Derived>& z,
                  Scalar tol = default_tolerance<Scalar>()) {
  return (project(set, z, tol) - z).norm();
}

/// Membership up to an absolute distance tolerance.
template <typename Scalar, typename Derived>
bool contains(const ConvexSet<Scalar>& set, const Eigen::MatrixBase<Derived>& z, Scalar dist_tol) {
  return gap_to_set(set, z) <= dist_tol;
}

}  // namespace circumfeas
