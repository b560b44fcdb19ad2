#include "doctest.h"

#include <array>
#include <random>

#include "circumfeas/instance_gen.hpp"
#include "circumfeas/methods.hpp"
#include "circumfeas/regularity.hpp"

using namespace circumfeas;
using Vec = VectorX<double>;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(Eigen::Index(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

const auto kAxis = make_hyperplane<double>(vec({0, 1}), 0.0);
const auto kDiag = make_hyperplane<double>(vec({1, -1}), 0.0);

bool inside(const ConvexSet<double>& S, const Vec& w) { return gap_to_set(S, w) <= 1e-12; }

}  // namespace

TEST_CASE("check_centralized examples") {
  const auto X = make_halfspace<double>(vec({1, 0}), 0.0);
  const auto Y = make_halfspace<double>(vec({0, 1}), 0.0);
  const auto q = check_centralized(X, Y, vec({1, 1}));
  CHECK(q.inner_product == 0.0);
  CHECK(q.centralized);
  CHECK(q.strictly);

  const auto in_x = check_centralized(X, Y, vec({-1, 2}));
  CHECK(in_x.centralized);
  CHECK_FALSE(in_x.strictly);

  // Acute cone: z above the apex has both projections on the same side.
  const auto A = make_halfspace<double>(vec({1, -2}), 0.0);
  const auto B = make_halfspace<double>(vec({-1, -2}), 0.0);
  const auto far = check_centralized(A, B, vec({0, -5}));
  CHECK_FALSE(far.centralized);
}

TEST_CASE("support halfspaces") {
  const auto ball = make_ball<double>(vec({0, 0}), 1.0);
  const auto pair = support_halfspaces(ball, ball, vec({2, 0}));
  REQUIRE(pair.S_X.has_value());
  CHECK(inside(*pair.S_X, vec({1, 5})));
  CHECK(inside(*pair.S_X, vec({0.9, -3})));
  CHECK_FALSE(inside(*pair.S_X, vec({1.1, 0})));
  CHECK(gap_to_set(*pair.H_X, vec({1, 7})) <= 1e-12);

  const auto whole = support_halfspaces(ball, ball, vec({0.5, 0}));
  CHECK(whole.x_is_whole_space());
  CHECK(whole.y_is_whole_space());

  const auto lines = support_halfspaces(kAxis, kDiag, vec({1, 0.5}));
  // S_X = {w2 <= 0}; S_Y = {<w - (0.75, 0.75), (0.25, -0.25)> <= 0}.
  CHECK(inside(*lines.S_X, vec({3, 0})));
  CHECK(inside(*lines.S_X, vec({3, -1})));
  CHECK_FALSE(inside(*lines.S_X, vec({3, 0.01})));
  CHECK(inside(*lines.S_Y, vec({0.75, 0.75})));
  CHECK(inside(*lines.S_Y, vec({0, 1})));
  CHECK_FALSE(inside(*lines.S_Y, vec({1, 0})));
}

TEST_CASE("projection onto S_X cap S_Y") {
  const Vec zc = vec({1, 0.5});
  CHECK(project_halfspace_intersection(support_halfspaces(kAxis, kDiag, zc), zc).norm() <= 1e-12);

  const auto ball = make_ball<double>(vec({0, 0}), 1.0);
  const Vec in = vec({0.2, 0.1});
  CHECK((project_halfspace_intersection(support_halfspaces(ball, ball, in), in) - in).norm() == 0.0);

  // Parallel, inconsistent constraints are rejected.
  const LinearConstraint<double> c1{vec({1, 0}), 0.0, false};
  const LinearConstraint<double> c2{vec({-1, 0}), -1.0, false};
  CHECK_THROWS(project_two_constraints(c1, c2, vec({5, 5})));
}

TEST_CASE("pCRM at strictly centralized points equals the halfspace-intersection oracle") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  int strict = 0;
  for (int k = 0; k < 400; ++k) {
    const auto family = std::array{SetFamily::Halfspace, SetFamily::Ball, SetFamily::Ellipsoid, SetFamily::Mixed}[k % 4];
    const auto pair = gen_random_pair(family, 6, rng);
    Vec z(6);
    for (int i = 0; i < 6; ++i) z(i) = pair.common(i) + 3 * nd(rng);
    const Vec zc = centralize(pair.X, pair.Y, z);
    const auto chk = check_centralized(pair.X, pair.Y, zc);
    CHECK(chk.centralized);
    const double scale = 1 + zc.norm();
    CHECK(std::abs(chk.reflection_inner_product - 4 * chk.inner_product) <= 1e-10 * scale * scale);
    if (!chk.strictly) {
      CHECK(std::max(gap_to_set(pair.X, zc), gap_to_set(pair.Y, zc)) <= 1e-8 * scale);
      continue;
    }
    ++strict;
    const Vec oracle = project_halfspace_intersection(support_halfspaces(pair.X, pair.Y, zc), zc);
    CHECK((step_pcrm(pair.X, pair.Y, zc).center - oracle).norm() <= 1e-7 * scale);
  }
  CHECK(strict > 20);
}

TEST_CASE("Dykstra distance agrees with the closed form on halfspace pairs") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    const auto pair = gen_random_pair(SetFamily::Halfspace, 4, rng);
    Vec z(4);
    for (int i = 0; i < 4; ++i) z(i) = 3 * nd(rng);
    const double exact = linear_pair_intersection_distance(pair.X, pair.Y)(z);
    CHECK(dykstra_intersection_distance(pair.X, pair.Y)(z) == doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("error-bound estimates") {
  SUBCASE("60 degree wedge gives sin(pi/3)") {
    const auto hp = gen_halfspace_pair(M_PI / 3, 2, 9);
    const auto est = estimate_error_bound(hp.X, hp.Y, linear_pair_intersection_distance(hp.X, hp.Y), vec({0, 0}),
                                          0.1, 100000, 10);
    CHECK(std::abs(est.omega - std::sin(M_PI / 3)) <= 2e-2);
    CHECK(std::abs(est.beta * est.beta + est.omega * est.omega - 1) <= 1e-12);
    CHECK(est.neighborhood_radius == 0.1);
  }
  SUBCASE("identical sets give one") {
    const auto H = make_halfspace<double>(vec({1, 1}), 0.0);
    const auto est = estimate_error_bound(H, H, linear_pair_intersection_distance(H, H), vec({0, 0}), 1.0, 2000, 3,
                                          ErrorBoundForm::Ambient);
    CHECK(est.omega == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.beta <= 1e-5);
  }
  SUBCASE("tangent balls lose the bound as the radius shrinks") {
    const auto X = make_ball<double>(vec({-1, 0}), 1.0);
    const auto Y = make_ball<double>(vec({1, 0}), 1.0);
    const auto dist = point_intersection_distance<double>(vec({0, 0}));
    double prev = 2.0;
    for (double r : {0.5, 0.1, 0.02}) {
      const double w = estimate_error_bound(X, Y, dist, vec({0, 0}), r, 20000, 4).omega;
      CHECK(w < prev);
      prev = w;
    }
    CHECK(prev < 0.05);
  }
  SUBCASE("all samples inside the intersection is an error") {
    const auto H = make_halfspace<double>(vec({1, 0}), 10.0);
    CHECK_THROWS(estimate_error_bound(H, H, linear_pair_intersection_distance(H, H), vec({0, 0}), 1.0, 50, 1,
                                      ErrorBoundForm::Ambient));
  }
}

TEST_CASE("rate estimates") {
  std::vector<double> geo;
  for (int k = 0; k < 40; ++k) geo.push_back(std::pow(0.5, k));
  const auto g = estimate_rates(geo);
  CHECK(g.q == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.r == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> osc;
  for (int k = 0; k < 200; ++k) osc.push_back(std::pow(0.5, k) * (1 + ((k % 2) ? -0.5 : 0.5)));
  const auto o = estimate_rates(osc);
  CHECK(o.q > 0.5);
  CHECK(o.r == doctest::Approx(0.5).epsilon(0.01));

  CHECK_THROWS_AS(estimate_rates(std::vector<double>{1, 0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_rates(std::vector<double>{1, 0.5, 0.0, 0.1, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_rates(geo, 1.0), std::invalid_argument);
}

TEST_CASE("rate bounds") {
  const auto b = rate_bounds(0.6);
  CHECK(b.map == doctest::Approx(0.64));
  CHECK(b.spm == doctest::Approx(0.9));
  CHECK(b.ccrm == doctest::Approx(0.576));
  const auto one = rate_bounds(1.0);
  CHECK(one.map == 0.0);
  CHECK(one.spm == 0.5);
  CHECK(one.ccrm == 0.0);
  for (int k = 1; k < 1000; ++k) {
    const auto r = rate_bounds(k / 1000.0);
    CHECK(r.ccrm <= r.map);
    CHECK(r.map <= r.spm);
    for (double v : {r.map, r.spm, r.ccrm}) CHECK((v > 0 && v < 1));
  }
  CHECK_THROWS_AS(rate_bounds(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rate_bounds(1.5), std::invalid_argument);
}
