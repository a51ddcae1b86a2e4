#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "hmpc/prediction.hpp"

using namespace hmpc;

TEST_CASE("constant-velocity advance over ten seconds") {
  ObstacleState obs;
  obs.x = 100.0;
  obs.y = 2.2;
  obs.v = 25.0;
  obs.heading = 0.0;
  const std::vector<double> dts(20, 0.5);
  const PredictedObstacle pred = predict(obs, 20, dts);
  REQUIRE(pred.poses.size() == 20);
  CHECK(pred.poses.back()[0] == doctest::Approx(350.0));
  CHECK(pred.poses.back()[1] == doctest::Approx(2.2));
  CHECK(pred.times.back() == doctest::Approx(10.0));
}

TEST_CASE("zero speed keeps every pose at the initial pose") {
  ObstacleState obs;
  obs.x = 42.0;
  obs.y = 1.0;
  obs.v = 0.0;
  obs.heading = 0.7;
  const std::vector<double> dts(8, 0.5);
  const PredictedObstacle pred = predict(obs, 8, dts);
  for (const auto& pose : pred.poses) {
    CHECK(pose[0] == doctest::Approx(42.0));
    CHECK(pose[1] == doctest::Approx(1.0));
    CHECK(pose[2] == doctest::Approx(0.7));
  }
}

TEST_CASE("covariance starts at sigma0^2 and grows monotonically") {
  ObstacleState obs;
  obs.v = 10.0;
  PredictionConfig cfg;
  cfg.sigma0 = 0.2;
  cfg.sigma_growth = 0.1;

  // A zero-length first step exposes the t = 0 covariance.
  std::vector<double> dts{0.0, 0.5, 0.5, 0.5};
  const PredictedObstacle pred = predict(obs, 4, dts, cfg);
  CHECK(pred.covariances.front()(0, 0) == doctest::Approx(0.04));
  CHECK(pred.covariances.front()(1, 1) == doctest::Approx(0.04));
  for (std::size_t i = 1; i < pred.covariances.size(); ++i) {
    CHECK(pred.covariances[i].trace() >= pred.covariances[i - 1].trace());
  }
  CHECK(pred.covariances.back().trace() > pred.covariances.front().trace());
}

TEST_CASE("translation equivariance") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::vector<double> dts(12, 0.4);
  for (int k = 0; k < 50; ++k) {
    ObstacleState obs;
    obs.x = 80.0 * unit(rng);
    obs.y = 5.0 * unit(rng);
    obs.v = 15.0 * std::abs(unit(rng));
    obs.heading = 3.0 * unit(rng);
    const double dx = 200.0 * unit(rng);
    const double dy = 10.0 * unit(rng);

    ObstacleState moved = obs;
    moved.x += dx;
    moved.y += dy;
    const PredictedObstacle a = predict(obs, 12, dts);
    const PredictedObstacle b = predict(moved, 12, dts);
    for (int i = 0; i < 12; ++i) {
      CHECK(b.poses[i][0] == doctest::Approx(a.poses[i][0] + dx).epsilon(1e-12));
      CHECK(b.poses[i][1] == doctest::Approx(a.poses[i][1] + dy).epsilon(1e-12));
      CHECK(b.poses[i][2] == doctest::Approx(a.poses[i][2]));
    }
  }
}

TEST_CASE("inter-pose spacing equals v * dt_i exactly") {
  ObstacleState obs;
  obs.x = 5.0;
  obs.v = 17.0;
  obs.heading = 0.0;
  const std::vector<double> dts{0.5, 0.25, 1.0, 0.5};
  const PredictedObstacle pred = predict(obs, 4, dts);
  double prev_x = obs.x;
  for (int i = 0; i < 4; ++i) {
    CHECK(pred.poses[i][0] - prev_x == doctest::Approx(17.0 * dts[i]).epsilon(1e-12));
    prev_x = pred.poses[i][0];
  }
}

TEST_CASE("precondition violations are rejected") {
  ObstacleState obs;
  const std::vector<double> dts(5, 0.5);
  CHECK_THROWS_AS(predict(obs, 0, {}, {}), DomainError);
  CHECK_THROWS_AS(predict(obs, 4, dts, {}), DomainError);
  obs.v = -1.0;
  const std::vector<double> five(5, 0.5);
  CHECK_THROWS_AS(predict(obs, 5, five, {}), DomainError);
}
