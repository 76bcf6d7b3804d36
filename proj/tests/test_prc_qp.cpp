#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "catching/errors.hpp"
#include "catching/prc_qp.hpp"

using namespace catching;

namespace {

struct Instance {
    HorizonTrajectory prev;
    HorizonTrajectory object;
    QpWeights weights;
    MotionLimits limits = MotionLimits::defaults();
};

Instance random_instance(std::mt19937_64& rng, int steps, double fixed_dt = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0), s(-1.0, 1.0);
    Instance in;
    const double dt = fixed_dt > 0.0 ? fixed_dt : 1e-3 * (1.0 + 9.0 * u(rng));
    const MotionLimits& l = in.limits;
    in.prev.dt = in.object.dt = dt;
    in.prev.positions.resize(steps, 6);
    in.prev.velocities.resize(steps, 6);
    in.object.positions.resize(steps, 6);
    in.object.velocities.resize(steps, 6);
    for (int k = 0; k < steps; ++k)
        for (int j = 0; j < 6; ++j) {
            // keep x_R0 a full speed-limit step inside the box so the three boxes always intersect
            const double margin = dt * l.vel_max[j];
            in.prev.positions(k, j) = l.pos_min[j] + margin + u(rng) * (l.pos_max[j] - l.pos_min[j] - 2 * margin);
            in.prev.velocities(k, j) = 0.9 * l.vel_max[j] * s(rng);
            in.object.positions(k, j) = in.prev.positions(k, j) + 0.3 * s(rng);
            in.object.velocities(k, j) = 2.5 * s(rng);
        }
    in.weights.alpha = 0.01 + u(rng);
    in.weights.beta = u(rng) * 2.0;
    in.weights.gamma = in.weights.beta * u(rng);
    return in;
}

/// Tracking objective evaluated from the trajectories, independent of the QP coefficients.
double definitional_objective(const Instance& in, const Eigen::VectorXd& v) {
    const int T = in.prev.steps();
    double f = 0.0;
    for (int k = 0; k < T; ++k)
        for (int j = 0; j < 6; ++j) {
            const double vel = v[6 * k + j];
            const double x = in.prev.positions(k, j) + in.prev.dt * vel;
            const double ev = vel - in.object.velocities(k, j);
            const double ex = x - in.object.positions(k, j);
            f += in.weights.alpha * ev * ev + in.weights.beta * ex * ex - (j == 2 ? in.weights.gamma * x * x : 0.0);
        }
    return 0.5 * f;
}

}  // namespace

TEST(PrcQp, ZQuadraticCoefficientWithDefaultWeights) {
    std::mt19937_64 rng(1);
    Instance in = random_instance(rng, 4);
    in.prev.dt = in.object.dt = 1e-3;
    in.weights = {0.15, 1.0, 1.0};
    const QpProblem p = build_qp(in.prev, in.object, in.weights, in.limits);
    for (int k = 0; k < 4; ++k) {
        EXPECT_DOUBLE_EQ(p.hessian_diag[6 * k + 2], 0.15);
        EXPECT_DOUBLE_EQ(p.hessian_diag[6 * k + 0], 0.15 + 1e-6);
    }
}

TEST(PrcQp, StationaryMatchedObjectGivesZeroVelocity) {
    Vector6d pose;
    pose << 0.1, -0.2, 0.4, 0.0, 0.0, 0.0;
    const HorizonTrajectory prev = HorizonTrajectory::hold(pose, 5, 1e-3);
    const HorizonTrajectory obj = HorizonTrajectory::hold(pose, 5, 1e-3);
    const QpProblem p = build_qp(prev, obj, {0.15, 1.0, 0.0}, MotionLimits::defaults());
    const QpSolution s = solve_qp_clamp(p);
    EXPECT_EQ(s.v.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PrcQp, ClampMatchesIterativeSolver) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> steps(1, 10);
    double worst_obj = 0.0, worst_kkt_clamp = 0.0, worst_kkt_iter = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Instance in = random_instance(rng, steps(rng));
        const QpProblem p = build_qp(in.prev, in.object, in.weights, in.limits);
        const QpSolution a = solve_qp_clamp(p);
        const QpSolution b = solve_qp_projected_gradient(p);
        worst_obj = std::max(worst_obj, std::abs(a.objective - b.objective));
        worst_kkt_clamp = std::max(worst_kkt_clamp, kkt_residual(p, a.v));
        worst_kkt_iter = std::max(worst_kkt_iter, kkt_residual(p, b.v));
        // feasibility: every box exactly respected
        ASSERT_TRUE((a.v.array() >= p.lower.array()).all() && (a.v.array() <= p.upper.array()).all());
    }
    EXPECT_LT(worst_obj, 1e-10);
    EXPECT_LT(worst_kkt_clamp, 1e-8);
    EXPECT_LT(worst_kkt_iter, 1e-8);
}

TEST(PrcQp, ObjectiveMatchesDefinition) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.01);
    for (int i = 0; i < 50; ++i) {
        const Instance in = random_instance(rng, 3);
        const QpProblem p = build_qp(in.prev, in.object, in.weights, in.limits);
        Eigen::VectorXd v(p.size());
        for (int j = 0; j < v.size(); ++j) v[j] = n(rng);
        EXPECT_NEAR(p.objective(v), definitional_objective(in, v), 1e-9 * (1.0 + std::abs(p.objective(v))));
    }
}

TEST(PrcQp, GridSearchOracleSmallHorizon) {
    // Coordinate sweeps of the definitional objective over a 1e-3 grid of each box
    // side; the objective has no cross terms, so one sweep reaches the grid optimum.
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Instance in = random_instance(rng, 3, 0.05);  // wide boxes keep the grid non-trivial
        const QpProblem p = build_qp(in.prev, in.object, in.weights, in.limits);
        Eigen::VectorXd grid_v = p.lower;
        for (int j = 0; j < p.size(); ++j) {
            double best = definitional_objective(in, grid_v);
            double best_x = grid_v[j];
            const int cells = static_cast<int>(std::floor((p.upper[j] - p.lower[j]) / 1e-3));
            for (int c = 0; c <= cells + 1; ++c) {
                grid_v[j] = std::min(p.lower[j] + c * 1e-3, p.upper[j]);
                const double f = definitional_objective(in, grid_v);
                if (f < best) {
                    best = f;
                    best_x = grid_v[j];
                }
            }
            grid_v[j] = best_x;
        }
        const double grid_opt = definitional_objective(in, grid_v);
        const double solved = definitional_objective(in, solve_qp_clamp(p).v);
        EXPECT_LE(solved, grid_opt + 1e-12);
        EXPECT_LT(grid_opt - solved, 1e-5);
    }
}

TEST(PrcQp, InteriorAndFaceSolutions) {
    QpProblem p;
    p.steps = 1;
    p.dt = 1e-3;
    p.hessian_diag = Eigen::VectorXd::Constant(6, 2.0);
    p.linear = Eigen::VectorXd::Zero(6);
    p.linear << -1.0, 4.0, -10.0, 0.0, 0.0, 0.0;
    p.lower = Eigen::VectorXd::Constant(6, -1.0);
    p.upper = Eigen::VectorXd::Constant(6, 1.0);
    p.base_positions = Eigen::VectorXd::Zero(6);
    const QpSolution s = solve_qp_clamp(p);
    EXPECT_EQ(s.v[0], 0.5);   // interior
    EXPECT_EQ(s.v[1], -1.0);  // unconstrained -2 clamps to the lower face
    EXPECT_EQ(s.v[2], 1.0);   // unconstrained 5 clamps to the upper face
    EXPECT_GT(s.lower_multipliers[1], 0.0);
    EXPECT_EQ(s.upper_multipliers[1], 0.0);
    EXPECT_GT(s.upper_multipliers[2], 0.0);
    EXPECT_EQ(s.lower_multipliers[0] + s.upper_multipliers[0], 0.0);
    // stationarity: ∇f − μ_lo + μ_hi = 0
    const Eigen::VectorXd r = p.gradient(s.v) - s.lower_multipliers + s.upper_multipliers;
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PrcQp, ErrorsAndGuards) {
    QpWeights w{0.15, 0.5, 1.0};
    EXPECT_THROW(w.validate(), NonConvex);

    QpProblem p;
    p.hessian_diag = Eigen::VectorXd::Constant(2, 1.0);
    p.hessian_diag[1] = 0.0;
    p.linear = p.lower = p.upper = Eigen::VectorXd::Zero(2);
    EXPECT_THROW(solve_qp_clamp(p), NonConvex);
    EXPECT_THROW(solve_qp_projected_gradient(p), NonConvex);

    Vector6d pose;
    pose << 0.0, 0.0, 0.05, 0.0, 0.0, 0.0;
    HorizonTrajectory prev = HorizonTrajectory::hold(pose, 2, 1e-3);
    prev.velocities(0, 2) = -0.5;  // moving down while on the floor: box empties
    prev.positions(0, 2) = 0.0;
    EXPECT_THROW(build_qp(prev, HorizonTrajectory::hold(pose, 2, 1e-3), {}, MotionLimits::defaults()),
                 InfeasibleBox);
    EXPECT_THROW(build_qp(prev, HorizonTrajectory::hold(pose, 3, 1e-3), {}, MotionLimits::defaults()),
                 DimensionMismatch);
}

TEST(PrcQp, SelectionIsIdempotentProjector) {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(18, 1.0, 18.0);
    const Eigen::VectorXd once = apply_selection(v);
    EXPECT_EQ(apply_selection(once), once);
    for (int j = 0; j < 18; ++j) EXPECT_EQ(once[j], j % 6 == 2 ? v[j] : 0.0);
}

TEST(PrcQp, QpDumpRoundTrip) {
    std::mt19937_64 rng(4);
    const Instance in = random_instance(rng, 4);
    const QpProblem p = build_qp(in.prev, in.object, in.weights, in.limits);
    std::stringstream ss;
    write_qp_dump(ss, p);
    const QpProblem q = read_qp_dump(ss);
    EXPECT_EQ(q.steps, p.steps);
    EXPECT_EQ(q.dt, p.dt);
    EXPECT_EQ(q.constant, p.constant);
    EXPECT_EQ(q.hessian_diag, p.hessian_diag);
    EXPECT_EQ(q.linear, p.linear);
    EXPECT_EQ(q.lower, p.lower);
    EXPECT_EQ(q.upper, p.upper);
    EXPECT_EQ(q.base_positions, p.base_positions);
    std::stringstream bad("# qp-dump v0\n");
    EXPECT_THROW(read_qp_dump(bad), ParseError);
}

namespace {
struct DropSetup {
    CartesianState robot;
    CartesianState object;
    HorizonTrajectory prev;
    PlannerSettings settings;
};

DropSetup drop_setup(double drop) {
    DropSetup d;
    d.robot.position = {0.0, 0.0, 0.5};
    d.object.position = {0.0, 0.0, 0.5 + drop};
    const int T = default_horizon(d.object, d.settings.limits.pos_min.z(), 9.81, d.settings.dt, 300);
    d.prev = HorizonTrajectory::hold(pose_vector(d.robot), T, d.settings.dt);
    return d;
}
}  // namespace

TEST(PlanStep, FirstSolveFromRestIsAccelerationLimited) {
    DropSetup d = drop_setup(0.27);
    const PlanResult r = plan_step(d.robot, d.object, d.prev, d.settings);
    const double a_step = d.settings.dt * d.settings.limits.acc_max[2];
    // from rest the acceleration box is the binding one for every entry ...
    const HorizonTrajectory obj = object_horizon(d.object, 9.81, d.settings.dt, d.prev.steps());
    const QpProblem p = build_qp(d.prev, obj, d.settings.weights, d.settings.limits);
    for (int k = 0; k < p.steps; ++k) {
        EXPECT_DOUBLE_EQ(p.lower[6 * k + 2], -a_step);
        EXPECT_DOUBLE_EQ(p.upper[6 * k + 2], a_step);
    }
    // ... and the descending entries saturate at it; entries 0 and 1 see an object
    // that has barely started moving and stay interior
    for (int k = 2; k < r.plan.steps(); ++k) EXPECT_DOUBLE_EQ(r.plan.velocities(k, 2), -a_step);
    EXPECT_GT(r.plan.velocities(0, 2), -a_step);
    EXPECT_LT(r.plan.velocities(0, 2), a_step);
}

TEST(PlanStep, ReceedingPlanInterceptsBeforeFloorBelowSpeedLimit) {
    DropSetup d = drop_setup(0.27);
    CartesianState robot = d.robot, object = d.object;
    HorizonTrajectory prev = d.prev;
    std::optional<CatchPoint> catch_point;
    const double dt = d.settings.dt;
    double t = 0.0;
    // drive the robot exactly along the plan and the object along free fall
    for (int n = 0; n < 1000; ++n) {
        prev.start_time = t;
        const PlanResult r = plan_step(robot, object, prev, d.settings);
        if (r.catch_point && r.catch_point->t_c <= t + dt) {
            catch_point = r.catch_point;
            break;
        }
        robot.position.z() = r.plan.positions(0, 2);
        robot.linear_velocity.z() = r.plan.velocities(0, 2);
        object.position.z() += dt * object.linear_velocity.z() - 0.5 * 9.81 * dt * dt;
        object.linear_velocity.z() -= 9.81 * dt;
        prev = r.next_prev;
        t += dt;
    }
    ASSERT_TRUE(catch_point.has_value());
    EXPECT_GT(catch_point->x_c[2], d.settings.limits.pos_min[2]);
    EXPECT_LE(std::abs(catch_point->xdot_c[2]), 1.0 + 1e-12);
    EXPECT_LT(catch_point->xdot_c[2], 0.0);  // moving down with the ball
}

TEST(PlanStep, InterceptTimeMatchesOfflineRoot) {
    DropSetup d = drop_setup(0.27);
    const PlanResult r = plan_step(d.robot, d.object, d.prev, d.settings);
    ASSERT_TRUE(r.catch_point.has_value());
    // offline: bisection on z_obj(t) − z_robot(t), robot piecewise linear through the plan
    const double dt = d.settings.dt;
    auto z_robot = [&](double t) {
        const double s = t / dt;
        const int k = static_cast<int>(std::floor(s));
        const double z0 = k == 0 ? d.robot.position.z() : r.plan.positions(k - 1, 2);
        const double z1 = r.plan.positions(k, 2);
        return z0 + (s - k) * (z1 - z0);
    };
    auto gap = [&](double t) { return d.object.position.z() - 0.5 * 9.81 * t * t - z_robot(t); };
    double lo = 0.0, hi = (r.plan.steps() - 1) * dt;
    ASSERT_GT(gap(lo), 0.0);
    ASSERT_LT(gap(hi), 0.0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    EXPECT_NEAR(r.catch_point->t_c, lo, dt);
}

TEST(PlanStep, CatchAtCurrentPoseWhenAlreadyTouching) {
    CartesianState robot;
    robot.position = {0.0, 0.0, 0.4};
    CartesianState object = robot;
    PlannerSettings settings;
    const HorizonTrajectory prev = HorizonTrajectory::hold(pose_vector(robot), 10, settings.dt);
    const PlanResult r = plan_step(robot, object, prev, settings);
    ASSERT_TRUE(r.catch_point.has_value());
    EXPECT_EQ(r.catch_point->t_c, 0.0);
    EXPECT_EQ(r.catch_point->x_c, pose_vector(robot));
}

TEST(PlanStep, NoInterceptReported) {
    CartesianState robot;
    robot.position = {0.0, 0.0, 0.4};
    CartesianState object;
    object.position = {0.0, 0.0, 1.2};
    object.linear_velocity = {0.0, 0.0, 3.0};  // still rising over a short horizon
    PlannerSettings settings;
    const HorizonTrajectory prev = HorizonTrajectory::hold(pose_vector(robot), 5, settings.dt);
    const PlanResult r = plan_step(robot, object, prev, settings);
    EXPECT_FALSE(r.catch_point.has_value());
    const HorizonTrajectory obj = object_horizon(object, 9.81, settings.dt, 5);
    EXPECT_THROW(require_catch(robot, object, r.plan, obj), NoInterceptInHorizon);
}

TEST(PlanStep, ResolvingWithSameInputsIsIdentical) {
    DropSetup d = drop_setup(0.27);
    const PlanResult a = plan_step(d.robot, d.object, d.prev, d.settings);
    const PlanResult b = plan_step(d.robot, d.object, d.prev, d.settings);
    EXPECT_EQ(a.plan.velocities, b.plan.velocities);
    EXPECT_EQ(a.plan.positions, b.plan.positions);

    // at a fixed point (object stationary at the planned pose, no height reward)
    // re-solving from the previous solution reproduces it
    Vector6d pose;
    pose << 0.2, 0.1, 0.3, 0.0, 0.0, 0.0;
    PlannerSettings s;
    s.weights = {0.15, 1.0, 0.0};
    s.gravity = 0.0;
    CartesianState still;
    still.position = pose.head<3>();
    const HorizonTrajectory prev = HorizonTrajectory::hold(pose, 8, s.dt);
    const PlanResult first = plan_step(still, still, prev, s);
    const PlanResult again = plan_step(still, still, first.next_prev, s);
    EXPECT_EQ(first.plan.positions, again.plan.positions);
    EXPECT_EQ(first.plan.velocities, again.plan.velocities);
}

TEST(PlanStep, HorizontalPositionConvergesToStationaryObject) {
    // repeated re-planning drives x_R to x_O; each step contracts the gap by
    // β·dt²/(α + β·dt²), so a coarse planner step keeps the loop short
    Vector6d pose = Vector6d::Zero();
    pose[2] = 0.4;
    CartesianState robot;
    robot.position = pose.head<3>();
    CartesianState object = robot;
    object.position.x() = 0.05;
    PlannerSettings s;
    s.gravity = 0.0;
    s.dt = 0.05;
    HorizonTrajectory prev = HorizonTrajectory::hold(pose, 20, s.dt);
    double gap = 0.05;
    for (int n = 0; n < 5000; ++n) {
        prev = plan_step(robot, object, prev, s).next_prev;
        const double g = std::abs(prev.positions(prev.steps() - 1, 0) - 0.05);
        ASSERT_LE(g, gap + 1e-15) << n;
        gap = g;
    }
    EXPECT_NEAR(prev.positions(prev.steps() - 1, 0), 0.05, 1e-6);
}

TEST(PlanStep, LargerGammaNeverLowersCatchHeight) {
    double last = -1e9;
    for (double gamma : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        DropSetup d = drop_setup(0.27);
        d.settings.weights.gamma = gamma;
        const PlanResult r = plan_step(d.robot, d.object, d.prev, d.settings);
        ASSERT_TRUE(r.catch_point.has_value());
        EXPECT_GE(r.catch_point->x_c[2], last - 1e-12);
        last = r.catch_point->x_c[2];
    }
}

TEST(PlanStep, DefaultHorizonCoversFallToFloor) {
    CartesianState object;
    object.position.z() = 0.05 + 0.5 * 9.81 * 0.1 * 0.1;
    EXPECT_EQ(default_horizon(object, 0.05, 9.81, 1e-3, 300), 100);
    EXPECT_EQ(default_horizon(object, 0.05, 9.81, 1e-4, 300), 300);
}
