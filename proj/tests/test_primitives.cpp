#include "support.hpp"

#include <doctest.h>

using namespace stlplan;

namespace {

const double kPi = std::acos(-1.0);
const RobotModel kDiff = RobotModel::by_id(RobotModel::kDiffDrive);

Policy make(PrimitiveKind kind, double v) { return {0, kind, v, std::string(RobotModel::kDiffDrive)}; }

}  // namespace

TEST_CASE("forward rollout matches stepped integration") {
  const Policy p = make(PrimitiveKind::Forward, 0.2);
  const auto traj = kDiff.rollout({{0, 0}, 0.0}, 0.0, p, 2.5);
  CHECK(traj.back().position.x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(traj.back().position.y == 0.0);
  CHECK(traj.back().heading == 0.0);
  CHECK(traj.back().time == 2.5);

  // independent Euler integration at 1 ms
  double x = 0.0;
  for (int k = 0; k < 2500; ++k) x += 0.2 * 1e-3;
  CHECK(std::abs(traj.back().position.x - x) < 1e-9);
}

TEST_CASE("short rollouts barely move") {
  const Policy p = make(PrimitiveKind::Forward, 0.22);
  for (double d : {1e-3, 1e-6, 1e-9}) {
    const auto traj = kDiff.rollout({{1, 1}, 0.3}, 0.0, p, d);
    CHECK(distance(traj.back().position, {1, 1}) <= 0.22 * d * (1 + 1e-6));
  }
}

TEST_CASE("rotation in place") {
  const Policy p = make(PrimitiveKind::Counterclockwise, 1.0);
  const auto traj = kDiff.rollout({{1, 2}, 0.0}, 3.0, p, kPi);
  CHECK(traj.back().heading == doctest::Approx(kPi));
  CHECK(traj.back().position == Vec2{1, 2});
  CHECK(traj.back().time == doctest::Approx(3.0 + kPi));
}

TEST_CASE("rollout rejects foreign or out-of-limit policies") {
  CHECK_THROWS_AS(kDiff.rollout({}, 0.0, make(PrimitiveKind::Forward, 0.3), 1.0), ModelError);
  CHECK_THROWS_AS(kDiff.rollout({}, 0.0, make(PrimitiveKind::Clockwise, 1.0), 1.0), ModelError);
  Policy other = make(PrimitiveKind::Forward, 0.1);
  other.model = "quadruped-proxy";
  CHECK_THROWS_AS(kDiff.rollout({}, 0.0, other, 1.0), ModelError);
  CHECK_THROWS_AS(kDiff.rollout({}, 0.0, make(PrimitiveKind::Forward, 0.1), 0.0), ModelError);
  CHECK_THROWS_AS(RobotModel::by_id("hovercraft"), ModelError);
}

TEST_CASE("composability") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (const auto& p : policy_library(kDiff, 3)) {
    const Pose s{{0.3, 0.7}, 0.4};
    const double a = u(rng), b = u(rng);
    const Pose one = kDiff.step(s, p, a + b);
    const Pose two = kDiff.step(kDiff.step(s, p, a), p, b);
    CHECK(distance(one.position, two.position) <= 1e-9);
    CHECK(std::abs(one.heading - two.heading) <= 1e-9);
  }
}

TEST_CASE("class semantics") {
  const Pose s{{1, 1}, 0.7};
  const Vec2 dir = unit_heading(0.7);
  auto along = [&](const Pose& p) { return (p.position.x - 1) * dir.x + (p.position.y - 1) * dir.y; };
  CHECK(along(kDiff.step(s, make(PrimitiveKind::Forward, 0.1), 1.0)) > 0.0);
  CHECK(along(kDiff.step(s, make(PrimitiveKind::Backward, -0.1), 1.0)) < 0.0);
  CHECK(kDiff.step(s, make(PrimitiveKind::Clockwise, -1.0), 0.5).heading < 0.7);
  CHECK(kDiff.step(s, make(PrimitiveKind::Counterclockwise, 1.0), 0.5).heading > 0.7);
}

TEST_CASE("noiseless determinism and seeded noise") {
  const Policy p = make(PrimitiveKind::Forward, 0.2);
  const auto a = kDiff.rollout({{0, 0}, 0.1}, 0.0, p, 3.0);
  const auto b = kDiff.rollout({{0, 0}, 0.1}, 0.0, p, 3.0);
  CHECK(a.back().position == b.back().position);

  const NoiseSpec noise{0.01, 0.01};
  std::mt19937_64 r1(5), r2(5), r3(6);
  const auto n1 = kDiff.rollout({{0, 0}, 0.1}, 0.0, p, 3.0, noise, &r1);
  const auto n2 = kDiff.rollout({{0, 0}, 0.1}, 0.0, p, 3.0, noise, &r2);
  const auto n3 = kDiff.rollout({{0, 0}, 0.1}, 0.0, p, 3.0, noise, &r3);
  CHECK(n1.back().position == n2.back().position);
  CHECK_FALSE(n1.back().position == n3.back().position);
  CHECK(n1.size() > 10);
  CHECK(n1.back().time == doctest::Approx(3.0));
}

TEST_CASE("noise is a diffusion: spread grows with the square root of time") {
  const Policy p = make(PrimitiveKind::Forward, 0.2);
  const NoiseSpec noise{0.05, 0.0};
  auto spread = [&](double duration) {
    std::mt19937_64 rng(17);
    double sum2 = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
      const auto t = kDiff.rollout({{0, 0}, 0.0}, 0.0, p, duration, noise, &rng, 1.0);
      const double dy = t.back().position.y;
      sum2 += dy * dy;
    }
    return std::sqrt(sum2 / n);
  };
  const double s1 = spread(1.0);
  const double s4 = spread(4.0);
  CHECK(s1 == doctest::Approx(0.05).epsilon(0.2));
  CHECK(s4 / s1 == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("policy library") {
  SUBCASE("one level") {
    const auto lib = policy_library(kDiff, 1);
    REQUIRE(lib.size() == 4);
    CHECK(lib[0].kind == PrimitiveKind::Clockwise);
    CHECK(lib[0].velocity == -2.84);
    CHECK(lib[1].velocity == 2.84);
    CHECK(lib[2].velocity == 0.22);
    CHECK(lib[3].velocity == -0.22);
  }
  SUBCASE("three levels") {
    const auto lib = policy_library(kDiff, 3);
    REQUIRE(lib.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(lib[static_cast<std::size_t>(i)].id == i);
    CHECK(lib[6].velocity == doctest::Approx(0.22 / 3));
    CHECK(lib[7].velocity == doctest::Approx(0.44 / 3));
    CHECK(lib[8].velocity == 0.22);
    for (const auto& p : lib) {
      CHECK_NOTHROW(kDiff.check(p));
      CHECK(std::abs(p.velocity) <= (p.rotates() ? 2.84 : 0.22));
    }
  }
  SUBCASE("quadruped limits") {
    const RobotModel q = RobotModel::by_id(RobotModel::kQuadrupedProxy);
    const auto lib = policy_library(q, 2);
    CHECK(lib.size() == 8);
    CHECK(lib[5].velocity == 0.4);
    CHECK(lib[1].velocity == -1.5);
  }
  CHECK_THROWS_AS(policy_library(kDiff, 0), ModelError);
}
