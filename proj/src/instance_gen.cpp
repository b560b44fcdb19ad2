#include "circumfeas/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace circumfeas {

namespace {

enum Purpose : std::uint64_t { kMatrix = 1, kCenter = 2, kSecond = 3, kStart = 4 };

constexpr double kProjectionTol = 1e-14;

VectorX<double> normal_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  VectorX<double> v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// Roots t of g(c + t u) = 0 for an ellipsoid given in (A, b, alpha) form.
std::pair<double, double> line_crossings(const Ellipsoid<double>& e, const VectorX<double>& c, const VectorX<double>& u) {
  const double qa = u.dot(e.A * u);
  const double qb = u.dot(e.A * c) + u.dot(e.b);
  const double qc = c.dot(e.A * c) + 2.0 * c.dot(e.b) - e.alpha;
  const double disc = qb * qb - qa * qc;
  if (disc < 0.0) throw std::runtime_error("line misses the ellipsoid");
  const double s = std::sqrt(disc);
  return {(-qb - s) / qa, (-qb + s) / qa};
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n < 2) throw std::invalid_argument("generator: n must be at least 2");
  if (count < 1) throw std::invalid_argument("generator: count must be at least 1");
  if (!(lambda >= 1.0)) throw std::invalid_argument("generator: lambda must be >= 1");
  const double p = density();
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("generator: sparsity must lie in (0, 1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("generator: gamma must be positive");
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

std::string EllipsoidInstance::id() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "inst_%03d", index);
  return buf;
}

EllipsoidInstance gen_ellipsoid_pair(const GeneratorConfig& cfg, int index) {
  cfg.validate();
  const int n = cfg.n;

  // E1: A1 = gamma I + B1^T B1 with sparse Gaussian B1, b1 ~ U[0,1]^n.
  auto rng = substream(cfg.seed, std::uint64_t(index), kMatrix);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const double p = cfg.density();
  MatrixX<double> B = MatrixX<double>::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (unit(rng) < p) B(i, j) = normal(rng);
    }
  }
  MatrixX<double> A1 = cfg.gamma * MatrixX<double>::Identity(n, n);
  A1.noalias() += B.transpose() * B;
  VectorX<double> b1(n);
  for (int i = 0; i < n; ++i) b1(i) = unit(rng);
  const double alpha1 = 1.1 * b1.dot(A1 * b1) + 1.0;
  auto E1 = make_ellipsoid<double>(A1, b1, alpha1);
  const auto& e1 = *E1.get_if<Ellipsoid<double>>();

  // c2 at twice the boundary crossing along a random ray from the origin.
  VectorX<double> c2;
  for (std::uint64_t attempt = 0;; ++attempt) {
    auto crng = substream(cfg.seed, std::uint64_t(index), kCenter + 16 * attempt);
    const VectorX<double> dir = normal_vector(n, crng).normalized();
    const double t = line_crossings(e1, VectorX<double>::Zero(n), dir).second;
    c2 = 2.0 * t * dir;
    if (ellipsoid_value(e1, c2) > 0.0) break;
    if (attempt > 100) throw std::runtime_error("generator: could not place c2 outside E1");
  }

  const VectorX<double> tangent = project(E1, c2, kProjectionTol);
  const VectorX<double> d = cfg.lambda * (tangent - c2);
  const double dn = d.norm();

  // E2 = {(z - c2)^T Q diag(s)^-2 Q^T (z - c2) <= 1}, s_1 = |d| along d / |d|.
  auto srng = substream(cfg.seed, std::uint64_t(index), kSecond);
  MatrixX<double> M(n, n);
  M.col(0) = d / dn;
  for (int j = 1; j < n; ++j) M.col(j) = normal_vector(n, srng);
  Eigen::HouseholderQR<MatrixX<double>> qr(M);
  MatrixX<double> Q = qr.householderQ();
  if (Q.col(0).dot(d) < 0.0) Q.col(0) *= -1.0;
  std::uniform_real_distribution<double> axis(dn, 3.0 * dn);
  VectorX<double> inv_s2(n);
  inv_s2(0) = 1.0 / (dn * dn);
  for (int i = 1; i < n; ++i) {
    double s = axis(srng);
    if (s <= dn) s = std::nextafter(dn, 3.0 * dn);
    inv_s2(i) = 1.0 / (s * s);
  }
  MatrixX<double> A2 = Q * inv_s2.asDiagonal() * Q.transpose();
  A2 = (0.5 * (A2 + A2.transpose())).eval();
  auto E2 = make_ellipsoid_centered<double>(A2, c2, 1.0);

  VectorX<double> witness;
  if (cfg.lambda == 1.0) {
    witness = tangent;
  } else {
    // Overlap of E1 and E2 along the axis from c2: [|c2 - tangent|, min(|d|, E1 exit)].
    const VectorX<double> u = d / dn;
    const double enter = (tangent - c2).norm();
    const double leave = std::min(dn, line_crossings(e1, c2, u).second);
    witness = c2 + 0.5 * (enter + leave) * u;
  }

  VectorX<double> z0 = sample_start(n, substream(cfg.seed, std::uint64_t(index), kStart)(), E1, E2);

  return EllipsoidInstance{std::move(E1), std::move(E2), n, cfg.lambda, cfg.gamma, cfg.seed, index,
                           std::move(witness), std::move(c2), d, std::move(z0)};
}

std::vector<EllipsoidInstance> gen_ellipsoid_suite(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<EllipsoidInstance> out;
  out.reserve(std::size_t(cfg.count));
  for (int i = 0; i < cfg.count; ++i) out.push_back(gen_ellipsoid_pair(cfg, i));
  return out;
}

HalfspacePair gen_halfspace_pair(double angle, int dim, std::uint64_t seed) {
  if (!(angle > 0.0 && angle <= M_PI / 2)) throw std::invalid_argument("gen_halfspace_pair: angle must lie in (0, pi/2]");
  if (dim < 2) throw std::invalid_argument("gen_halfspace_pair: dim must be at least 2");
  auto rng = substream(seed, 0, kMatrix);
  MatrixX<double> M(dim, 2);
  M.col(0) = normal_vector(dim, rng);
  M.col(1) = normal_vector(dim, rng);
  Eigen::HouseholderQR<MatrixX<double>> qr(M);
  const MatrixX<double> E = MatrixX<double>(qr.householderQ()).leftCols(2);
  const double c = std::cos(angle / 2);
  const double s = std::sin(angle / 2);
  // Boundary rays c e1 +- s e2 bound the wedge; the outward normals are orthogonal to them.
  VectorX<double> a1 = -s * E.col(0) + c * E.col(1);
  VectorX<double> a2 = -s * E.col(0) - c * E.col(1);
  return HalfspacePair{make_halfspace<double>(std::move(a1), 0.0), make_halfspace<double>(std::move(a2), 0.0),
                       std::sin(angle)};
}

VectorX<double> sample_start(int n, std::uint64_t seed, const ConvexSet<double>& X, const ConvexSet<double>& Y) {
  if (n < 1) throw std::invalid_argument("sample_start: n must be positive");
  std::mt19937_64 rng(seed);
  const double inside_tol = 1e-12;
  auto outside = [&](const VectorX<double>& z) {
    return gap_to_set(X, z) > inside_tol || gap_to_set(Y, z) > inside_tol;
  };
  VectorX<double> z;
  for (int attempt = 0; attempt < 100; ++attempt) {
    z = normal_vector(n, rng);
    const double norm = z.norm();
    if (norm < 5.0) {
      z *= 5.0 / std::max(norm, 1e-300);
      while (z.norm() < 5.0) z *= 1.0 + 4 * std::numeric_limits<double>::epsilon();
    }
    if (outside(z)) return z;
  }
  for (int k = 0; k < 64; ++k) {
    z *= 2.0;
    if (outside(z)) return z;
  }
  throw std::runtime_error("sample_start: could not leave the intersection");
}

std::string_view to_string(SetFamily f) {
  switch (f) {
    case SetFamily::Halfspace: return "halfspace";
    case SetFamily::Ball: return "ball";
    case SetFamily::Ellipsoid: return "ellipsoid";
    case SetFamily::Mixed: return "mixed";
  }
  return "unknown";
}

namespace {

ConvexSet<double> random_halfspace_through(const VectorX<double>& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit;
  VectorX<double> a = normal_vector(int(s.size()), rng);
  const double offset = a.dot(s) + unit(rng) * a.norm();
  return make_halfspace<double>(std::move(a), offset);
}

ConvexSet<double> random_ball_around(const VectorX<double>& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> radius_dist(0.5, 2.0);
  std::uniform_real_distribution<double> unit;
  const double r = radius_dist(rng);
  const VectorX<double> u = normal_vector(int(s.size()), rng).normalized();
  return make_ball<double>(s + 0.95 * unit(rng) * r * u, r);
}

ConvexSet<double> random_ellipsoid_around(const VectorX<double>& s, std::mt19937_64& rng) {
  const int n = int(s.size());
  std::uniform_real_distribution<double> unit;
  MatrixX<double> M(n, n);
  for (int j = 0; j < n; ++j) M.col(j) = normal_vector(n, rng);
  MatrixX<double> A = M.transpose() * M / double(n) + 0.1 * MatrixX<double>::Identity(n, n);
  A = (0.5 * (A + A.transpose())).eval();
  const VectorX<double> c = s + normal_vector(n, rng);
  const double level = (s - c).dot(A * (s - c)) * (1.0 + 2.0 * unit(rng)) + 0.05;
  return make_ellipsoid_centered<double>(A, c, level);
}

}  // namespace

SetPair gen_random_pair(SetFamily family, int dim, std::mt19937_64& rng) {
  if (dim < 1) throw std::invalid_argument("gen_random_pair: dim must be positive");
  VectorX<double> s = normal_vector(dim, rng);
  switch (family) {
    case SetFamily::Halfspace: {
      auto X = random_halfspace_through(s, rng);
      auto Y = random_halfspace_through(s, rng);
      return {std::move(X), std::move(Y), std::move(s)};
    }
    case SetFamily::Ball: {
      auto X = random_ball_around(s, rng);
      auto Y = random_ball_around(s, rng);
      return {std::move(X), std::move(Y), std::move(s)};
    }
    case SetFamily::Ellipsoid: {
      auto X = random_ellipsoid_around(s, rng);
      auto Y = random_ellipsoid_around(s, rng);
      return {std::move(X), std::move(Y), std::move(s)};
    }
    case SetFamily::Mixed: {
      auto X = random_ellipsoid_around(s, rng);
      auto Y = random_halfspace_through(s, rng);
      return {std::move(X), std::move(Y), std::move(s)};
    }
  }
  throw std::invalid_argument("gen_random_pair: unknown family");
}

}  // namespace circumfeas
