#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "circumfeas/convex_sets.hpp"

namespace circumfeas {

struct GeneratorConfig {
  int n = 100;
  int count = 30;
  double lambda = 1.1;    // 1.0: E1 and E2 touch at one point; > 1: overlap with interior
  double sparsity = 0.0;  // density of B1; 0 selects 2 / n
  double gamma = 1.0;
  std::uint64_t seed = 1234;

  double density() const { return sparsity > 0.0 ? sparsity : 2.0 / double(n); }
  void validate() const;
};

/// Two ellipsoids E1 = {g1 <= 0}, E2 = {(z - c2)^T A2 (z - c2) <= 1} with a known
/// common point, plus the start point shared by every method.
struct EllipsoidInstance {
  ConvexSet<double> E1;
  ConvexSet<double> E2;
  int n = 0;
  double lambda = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  int index = 0;
  VectorX<double> witness;  // P_E1(c2) when lambda = 1, else an interior point of both
  VectorX<double> c2;
  VectorX<double> d;        // lambda (P_E1(c2) - c2), the shortest semi-axis of E2
  VectorX<double> z0;

  std::string id() const;
};

/// Deterministic in (cfg.seed, index, cfg).
EllipsoidInstance gen_ellipsoid_pair(const GeneratorConfig& cfg, int index);

std::vector<EllipsoidInstance> gen_ellipsoid_suite(const GeneratorConfig& cfg);

struct HalfspacePair {
  ConvexSet<double> X;
  ConvexSet<double> Y;
  double omega_true = 0.0;
};

/// Two halfspaces through the origin whose boundaries meet at `angle` across the
/// intersection (a wedge of that opening, embedded in a random plane of R^dim).
/// omega_true = sin(angle) is the error-bound constant at points of X and Y.
HalfspacePair gen_halfspace_pair(double angle, int dim, std::uint64_t seed);

/// Standard normal draw with norm at least 5, outside X cap Y.
VectorX<double> sample_start(int n, std::uint64_t seed, const ConvexSet<double>& X, const ConvexSet<double>& Y);

enum class SetFamily { Halfspace, Ball, Ellipsoid, Mixed };

inline constexpr SetFamily kAllFamilies[] = {SetFamily::Halfspace, SetFamily::Ball, SetFamily::Ellipsoid,
                                             SetFamily::Mixed};

std::string_view to_string(SetFamily f);

/// Random pair of sets sharing the point `common`.
struct SetPair {
  ConvexSet<double> X;
  ConvexSet<double> Y;
  VectorX<double> common;
};

SetPair gen_random_pair(SetFamily family, int dim, std::mt19937_64& rng);

/// Independent generator keyed by (seed, index, purpose).
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose);

}  // namespace circumfeas
