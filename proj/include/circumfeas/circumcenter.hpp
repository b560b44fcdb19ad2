#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "circumfeas/core.hpp"

namespace circumfeas {

enum class Degeneracy { Generic, OneCoincident, AllCoincident, RankDeficient };

inline const char* to_string(Degeneracy d) {
  switch (d) {
    case Degeneracy::Generic: return "generic";
    case Degeneracy::OneCoincident: return "one_coincident";
    case Degeneracy::AllCoincident: return "all_coincident";
    case Degeneracy::RankDeficient: return "rank_deficient";
  }
  return "unknown";
}

template <typename Scalar>
struct CircumcenterResult {
  VectorX<Scalar> center;
  Degeneracy degeneracy = Degeneracy::Generic;
  Scalar residual{};  // max pairwise equidistance violation
};

/// max over pairs {a, b} of {z, v, w} of | ||c - a|| - ||c - b|| |
template <typename Scalar>
Scalar circumcenter_residual(const VectorX<Scalar>& c, const VectorX<Scalar>& z, const VectorX<Scalar>& v,
                             const VectorX<Scalar>& w) {
  require_dim(z.size(), c.size(), "circumcenter_residual");
  require_dim(z.size(), v.size(), "circumcenter_residual");
  require_dim(z.size(), w.size(), "circumcenter_residual");
  const Scalar dz = (c - z).norm();
  const Scalar dv = (c - v).norm();
  const Scalar dw = (c - w).norm();
  return std::max({std::abs(dz - dv), std::abs(dz - dw), std::abs(dv - dw)});
}

// Two vertices closer than this fraction of the longest side are merged.
template <typename Scalar>
constexpr Scalar kCoincidenceRatio = Scalar(1e-12);

// Gram determinant threshold relative to <u,u><v',v'>.
template <typename Scalar>
constexpr Scalar kRankRatio = Scalar(1e-14);

/// Circumcenter of the triangle (z, v, w): the point of aff{z, v, w} equidistant
/// from all three vertices.
///
/// With u = v - z and t = w - z the center is z + a u + b t where
///   [<u,u> <u,t>; <u,t> <t,t>] (a, b)^T = (|u|^2 / 2, |t|^2 / 2)^T.
/// Coincident vertices reduce the triangle to a segment whose midpoint is returned.
/// Collinear distinct vertices have no circumcenter; the minimum-norm least-squares
/// solution is returned with Degeneracy::RankDeficient.
template <typename Scalar>
CircumcenterResult<Scalar> circumcenter3(const VectorX<Scalar>& z, const VectorX<Scalar>& v,
                                         const VectorX<Scalar>& w) {
  require_dim(z.size(), v.size(), "circumcenter3");
  require_dim(z.size(), w.size(), "circumcenter3");
  const VectorX<Scalar> u = v - z;
  const VectorX<Scalar> t = w - z;
  const Scalar nu = u.norm();
  const Scalar nt = t.norm();
  const Scalar nvw = (w - v).norm();
  const Scalar longest = std::max({nu, nt, nvw});
  const Scalar merge = kCoincidenceRatio<Scalar> * longest;

  CircumcenterResult<Scalar> out;
  if (longest == Scalar(0)) {
    out.center = z;
    out.degeneracy = Degeneracy::AllCoincident;
  } else if (nu <= merge) {
    out.center = Scalar(0.5) * (z + w);
    out.degeneracy = Degeneracy::OneCoincident;
  } else if (nt <= merge || nvw <= merge) {
    out.center = Scalar(0.5) * (z + v);
    out.degeneracy = Degeneracy::OneCoincident;
  } else {
    const Scalar uu = u.squaredNorm();
    const Scalar tt = t.squaredNorm();
    const Scalar ut = u.dot(t);
    const Scalar det = uu * tt - ut * ut;
    if (det > kRankRatio<Scalar> * uu * tt) {
      const Scalar a = tt * (uu - ut) / (Scalar(2) * det);
      const Scalar b = uu * (tt - ut) / (Scalar(2) * det);
      out.center = z + a * u + b * t;
      out.degeneracy = Degeneracy::Generic;
    } else {
      Eigen::Matrix<Scalar, 2, 2> gram;
      gram << uu, ut, ut, tt;
      const Eigen::Matrix<Scalar, 2, 1> rhs(uu / Scalar(2), tt / Scalar(2));
      Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix<Scalar, 2, 2>> cod;
      cod.setThreshold(Scalar(1e-6));  // treat the near-singular Gram matrix as rank one
      cod.compute(gram);
      const Eigen::Matrix<Scalar, 2, 1> ab = cod.solve(rhs);
      out.center = z + ab(0) * u + ab(1) * t;
      out.degeneracy = Degeneracy::RankDeficient;
    }
  }
  out.residual = circumcenter_residual<Scalar>(out.center, z, v, w);
  return out;
}

}  // namespace circumfeas
