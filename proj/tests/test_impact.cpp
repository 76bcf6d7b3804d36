#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "catching/errors.hpp"
#include "catching/impact.hpp"

using namespace catching;

namespace {

CartesianState with_velocity(const Eigen::Vector3d& v, const Eigen::Vector3d& w = Eigen::Vector3d::Zero()) {
    CartesianState s;
    s.linear_velocity = v;
    s.angular_velocity = w;
    return s;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v(n(rng), n(rng), n(rng));
    return v.normalized();
}

/// Random SPD 6x6 with eigenvalues spread over [0.1, 10].
EffectiveInertia random_inertia(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), ev(0.1, 10.0);
    Matrix6d a;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) a(i, j) = u(rng);
    Eigen::HouseholderQR<Matrix6d> qr(a);
    const Matrix6d q = qr.householderQ();
    Vector6d d;
    for (int i = 0; i < 6; ++i) d[i] = ev(rng);
    EffectiveInertia in;
    in.lambda = q * d.asDiagonal() * q.transpose();
    in.lambda = 0.5 * (in.lambda + in.lambda.transpose()).eval();
    return in;
}

}  // namespace

TEST(Impact, ZeroRelativeVelocityGivesZeroImpulse) {
    const CartesianState robot = with_velocity({0.3, -0.2, -1.0}, {0.1, 0.0, 0.2});
    const CartesianState object = with_velocity({0.3, -0.2, -1.0}, {0.1, 0.0, 0.2});
    const ImpactOutcome out = compute_impulse(robot, object, EffectiveInertia::diagonal(3.0, 0.3), {});
    EXPECT_EQ(out.impulse.norm(), 0.0);
    EXPECT_TRUE(out.robot_velocity_after.isApprox(robot.twist()));
    EXPECT_TRUE(out.object_velocity_after.isApprox(object.twist()));
}

TEST(Impact, HandEvaluatedPlasticImpulse) {
    // (1/3 + 1/0.5)^-1 * (-1.3), evaluated with scalars
    const double expected = -1.3 / (1.0 / 3.0 + 2.0);
    const ImpactOutcome out = compute_impulse(with_velocity({0, 0, 0}), with_velocity({0, 0, -1.3}),
                                              EffectiveInertia::diagonal(3.0, 0.3), {});
    EXPECT_NEAR(out.impulse[2], expected, 1e-12);
    EXPECT_NEAR(out.impulse[2], -0.557, 5e-4);
    EXPECT_NEAR(out.impulse.head<2>().norm() + out.impulse.tail<3>().norm(), 0.0, 1e-15);
}

TEST(Impact, PlasticMomentumOracle) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> vel(-3.0, 3.0), mass(0.1, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double mr = mass(rng), mo = mass(rng), vr = vel(rng), vo = vel(rng);
        EffectiveInertia in;
        in.lambda = mr * Matrix6d::Identity();
        ImpactParams p;
        p.object_mass = mo;
        const ImpactOutcome out = compute_impulse(with_velocity({0, 0, vr}), with_velocity({0, 0, vo}), in, p);
        const double common = (mr * vr + mo * vo) / (mr + mo);
        ASSERT_NEAR(out.robot_velocity_after[2], common, 1e-9);
        ASSERT_NEAR(out.object_velocity_after[2], common, 1e-9);
    }
}

TEST(Impact, RestitutionIdentityRandomized) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> vel(-3.0, 3.0), e01(0.0, 1.0), mass(0.05, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const CartesianState robot = with_velocity({vel(rng), vel(rng), vel(rng)}, {vel(rng), vel(rng), vel(rng)});
        const CartesianState object = with_velocity({vel(rng), vel(rng), vel(rng)});
        ImpactParams p;
        p.restitution_e = e01(rng);
        p.object_mass = mass(rng);
        p.contact_normal = random_unit(rng);
        const ImpactOutcome out = compute_impulse(robot, object, random_inertia(rng), p);
        const double before = relative_normal_velocity(robot, object, p.contact_normal);
        const double after = (out.robot_velocity_after.head<3>() - out.object_velocity_after.head<3>())
                                 .dot(p.contact_normal);
        worst = std::max(worst, std::abs(after + p.restitution_e * before));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Impact, MomentumExchangeAndOutcomeInvariants) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> vel(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const CartesianState robot = with_velocity({vel(rng), vel(rng), vel(rng)});
        const CartesianState object = with_velocity({vel(rng), vel(rng), vel(rng)}, {vel(rng), 0.0, 0.0});
        const EffectiveInertia in = random_inertia(rng);
        ImpactParams p;
        p.restitution_e = 0.3;
        const ImpactOutcome out = compute_impulse(robot, object, in, p);
        const Vector6d robot_expected = robot.twist() + in.lambda.llt().solve(out.impulse);
        EXPECT_LT((out.robot_velocity_after - robot_expected).norm(), 1e-12);
        // linear momentum: what the robot gains the object loses
        const Eigen::Vector3d dp_obj = p.object_mass * (out.object_velocity_after.head<3>() - object.linear_velocity);
        EXPECT_LT((dp_obj + out.impulse.head<3>()).norm(), 1e-12);
        EXPECT_EQ(out.object_velocity_after.tail<3>(), object.angular_velocity);
    }
}

TEST(Impact, ImpulseMonotoneInRelativeSpeed) {
    const Eigen::Vector3d dir = Eigen::Vector3d(0.2, -0.1, -1.0).normalized();
    double last = -1.0;
    for (int i = 0; i < 50; ++i) {
        const double speed = 0.05 * i;
        const ImpactOutcome out = compute_impulse(with_velocity({0, 0, 0}), with_velocity(speed * dir),
                                                  EffectiveInertia::diagonal(3.0, 0.3), {});
        const double mag = out.impulse.norm();
        EXPECT_GE(mag, last);
        last = mag;
    }
}

TEST(Impact, LimitBehaviour) {
    ImpactParams light;
    light.object_mass = 1e-9;
    const ImpactOutcome a = compute_impulse(with_velocity({0, 0, 0}), with_velocity({0, 0, -2.0}),
                                            EffectiveInertia::diagonal(3.0, 0.3), light);
    EXPECT_LT(a.impulse.norm(), 1e-8);

    ImpactParams wall;
    wall.restitution_e = 0.4;
    const ImpactOutcome b = compute_impulse(with_velocity({0, 0, 0}), with_velocity({0, 0, -2.0}),
                                            EffectiveInertia::diagonal(1e12, 1e12), wall);
    EXPECT_NEAR(b.impulse[2], wall.object_mass * (1.0 + wall.restitution_e) * -2.0, 1e-9);
}

TEST(Impact, RejectsInvalidInputs) {
    EffectiveInertia bad;
    bad.lambda = Matrix6d::Identity();
    bad.lambda(2, 2) = -1.0;
    EXPECT_THROW(compute_impulse({}, {}, bad, {}), NonPositiveDefiniteInertia);
    ImpactParams p;
    p.contact_normal = {0, 0, 1.1};
    EXPECT_THROW(compute_impulse({}, {}, EffectiveInertia::diagonal(3, 0.3), p), InvalidNormal);
    EXPECT_THROW(relative_normal_velocity({}, {}, {1, 1, 0}), InvalidNormal);
    ImpactParams e;
    e.restitution_e = 1.5;
    EXPECT_THROW(e.validate(), InvalidArgument);
}

TEST(Impact, RelativeNormalVelocity) {
    EXPECT_EQ(relative_normal_velocity(with_velocity({1, 2, 3}), with_velocity({1, 2, 3}), Eigen::Vector3d::UnitZ()), 0.0);
    EXPECT_NEAR(relative_normal_velocity(with_velocity({0, 0, -1}), with_velocity({0, 0, -2.3}), Eigen::Vector3d::UnitZ()),
                1.3, 1e-15);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
        const Eigen::Vector3d n = random_unit(rng);
        double brute = 0.0;
        for (int k = 0; k < 3; ++k) brute += (a[k] - b[k]) * n[k];
        EXPECT_NEAR(relative_normal_velocity(with_velocity(a), with_velocity(b), n), brute, 1e-12);
    }
}

TEST(FreeFall, SpeedAfterDrops) {
    for (const auto& [drop, expected, tol] : {std::tuple{0.27, 2.30, 0.01}, std::tuple{0.37, 2.694, 1e-3}}) {
        CartesianState s;
        s.position.z() = drop;
        const double t = std::sqrt(2.0 * drop / 9.81);
        const int steps = 1000;
        const auto states = free_fall_predict(s, 9.81, t / steps, steps);
        ASSERT_EQ(states.size(), static_cast<std::size_t>(steps + 1));
        EXPECT_NEAR(states.back().position.z(), 0.0, 1e-12);
        EXPECT_NEAR(-states.back().linear_velocity.z(), expected, tol);
        EXPECT_NEAR(-states.back().linear_velocity.z(), std::sqrt(2.0 * 9.81 * drop), 1e-12);
    }
}

TEST(FreeFall, ZeroGravityKeepsState) {
    CartesianState s;
    s.position = {0.1, 0.2, 0.3};
    const auto states = free_fall_predict(s, 0.0, 0.01, 20);
    for (const auto& x : states) {
        EXPECT_EQ(x.position, s.position);
        EXPECT_EQ(x.linear_velocity, s.linear_velocity);
    }
}

TEST(FreeFall, HorizontalMotionIsConstantVelocity) {
    CartesianState s;
    s.linear_velocity = {0.5, -0.25, 1.0};
    const auto states = free_fall_predict(s, 9.81, 0.01, 10);
    EXPECT_NEAR(states[10].position.x(), 0.05, 1e-15);
    EXPECT_NEAR(states[10].position.y(), -0.025, 1e-15);
    EXPECT_NEAR(states[10].position.z(), 0.1 - 0.5 * 9.81 * 0.01, 1e-15);
    EXPECT_THROW(free_fall_predict(s, 9.81, 0.0, 10), InvalidArgument);
    EXPECT_THROW(free_fall_predict(s, 9.81, 0.1, 0), InvalidArgument);
}

TEST(CartesianStateTest, OrientationMustBeUnit) {
    CartesianState s;
    s.orientation.coeffs() << 0, 0, 0, 2;
    EXPECT_THROW(s.validate(), InvalidArgument);
}
