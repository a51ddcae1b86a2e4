#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hmpc/collision.hpp"

using namespace hmpc;

namespace {
VehicleParams table_params() { return VehicleParams{}; }

std::vector<PredictedObstacle> make_predictions(int m, int n) {
  std::vector<PredictedObstacle> preds;
  const std::vector<double> dts(n, 0.5);
  for (int j = 0; j < m; ++j) {
    ObstacleState obs;
    obs.id = j + 1;
    obs.x = 60.0 + 40.0 * j;
    obs.y = 1.875;
    obs.v = 20.0 + j;
    preds.push_back(predict(obs, n, dts));
  }
  return preds;
}
}  // namespace

TEST_CASE("circle centers at cardinal headings") {
  const VehicleParams p = table_params();
  const CirclePair a = circle_centers({0, 0, 0}, p.l1, p.l2, p.circle_radius);
  CHECK(a.front.x() == doctest::Approx(1.18));
  CHECK(a.front.y() == doctest::Approx(0.0));
  CHECK(a.rear.x() == doctest::Approx(-1.77));
  CHECK(a.rear.y() == doctest::Approx(0.0));
  CHECK((a.front - a.rear).norm() == doctest::Approx(p.l1 + p.l2).epsilon(1e-12));

  const CirclePair b = circle_centers({0, 0, M_PI / 2}, p.l1, p.l2, 1.3);
  CHECK(b.front.x() == doctest::Approx(0.0));
  CHECK(b.front.y() == doctest::Approx(1.18));
  CHECK(b.rear.y() == doctest::Approx(-1.77));

  const CirclePair c = circle_centers({0, 0, M_PI}, p.l1, p.l2, 1.3);
  CHECK(c.front.x() == doctest::Approx(-1.18));
}

TEST_CASE("pairwise clearances: hand geometry") {
  const VehicleParams p = table_params();
  const auto same = pairwise_clearances({0, 0, 0}, {0, 0, 0}, p);
  CHECK(same[0] == doctest::Approx(0.0));
  CHECK(same[0] < 2.0 * p.circle_radius);  // infeasible

  const auto ahead = pairwise_clearances({0, 0, 0}, {100, 0, 0}, p);
  CHECK(ahead[static_cast<int>(DiscPair::ff)] == doctest::Approx(100.0));
  CHECK(ahead[static_cast<int>(DiscPair::fr)] == doctest::Approx(97.05));
  CHECK(ahead[static_cast<int>(DiscPair::rf)] == doctest::Approx(102.95));
  CHECK(ahead[static_cast<int>(DiscPair::rr)] == doctest::Approx(100.0));
  for (double d : ahead) CHECK(d >= 2.0 * p.circle_radius);

  const auto lateral = pairwise_clearances({0, 0, 0}, {0, 2.6, 0}, p);
  CHECK(lateral[static_cast<int>(DiscPair::ff)] ==
        doctest::Approx(2.6));  // boundary-feasible at 2R
}

TEST_CASE("constraint count law") {
  const VehicleParams p = table_params();
  const auto preds = make_predictions(3, 20);
  const CollisionConstraintSet set = generate_constraints(20, preds, p);
  CHECK(set.rows.size() == 4 * 20 * 3);

  const CollisionConstraintSet empty = generate_constraints(20, {}, p);
  CHECK(empty.rows.empty());

  CollisionOptions cross;
  cross.cross_pairing = true;
  const auto one = make_predictions(1, 20);
  const CollisionConstraintSet diag = generate_constraints(20, one, p, cross);
  CHECK(diag.rows.size() == 4 * 20 * 20);
  CHECK(diag.rows.size() > generate_constraints(20, one, p).rows.size());
}

TEST_CASE("horizon mismatch is rejected") {
  const VehicleParams p = table_params();
  const auto preds = make_predictions(1, 10);
  CHECK_THROWS_AS(generate_constraints(20, preds, p), DomainError);
}

TEST_CASE("rows carry the time-matched obstacle disc centers") {
  const VehicleParams p = table_params();
  const auto preds = make_predictions(1, 6);
  const CollisionConstraintSet set = generate_constraints(6, preds, p);
  REQUIRE(set.rows.size() == 24);
  for (const CollisionConstraint& row : set.rows) {
    CHECK(row.step == row.obstacle_step);
    CHECK(row.clearance == doctest::Approx(2.0 * p.circle_radius));
    const Eigen::Vector3d pose = preds[0].poses[row.step - 1];
    const CirclePair discs = circle_centers(pose, preds[0].l1, preds[0].l2, 0);
    const Eigen::Vector2d expect =
        pair_uses_obs_front(row.pair) ? discs.front : discs.rear;
    CHECK((row.obs_center - expect).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("covariance inflation widens the clearance when enabled") {
  const VehicleParams p = table_params();
  const auto preds = make_predictions(1, 6);
  CollisionOptions opts;
  opts.inflation_k = 2.0;
  const CollisionConstraintSet set = generate_constraints(6, preds, p, opts);
  for (const CollisionConstraint& row : set.rows) {
    const double sigma =
        std::sqrt(preds[0].covariances[row.obstacle_step - 1](0, 0));
    CHECK(row.clearance ==
          doctest::Approx(2.0 * p.circle_radius + 2.0 * sigma));
  }
}

TEST_CASE("rigid-motion invariance of the four distances") {
  const VehicleParams p = table_params();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d ego(30 * unit(rng), 4 * unit(rng), 2 * unit(rng));
    const Eigen::Vector3d obs(30 * unit(rng), 4 * unit(rng), 2 * unit(rng));
    const double phi = M_PI * unit(rng);
    const Eigen::Vector2d t(100 * unit(rng), 100 * unit(rng));
    const Eigen::Rotation2D<double> rot(phi);

    const auto transform = [&](const Eigen::Vector3d& pose) {
      const Eigen::Vector2d xy = rot * pose.head<2>() + t;
      return Eigen::Vector3d(xy[0], xy[1], pose[2] + phi);
    };
    const auto base = pairwise_clearances(ego, obs, p);
    const auto moved = pairwise_clearances(transform(ego), transform(obs), p);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(base[i] - moved[i]) < 1e-9);
    }
  }
}
