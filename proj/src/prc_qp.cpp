#include "catching/prc_qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "catching/errors.hpp"

namespace catching {

namespace {
constexpr int kDim = 6;
constexpr int kVertical = 2;

Eigen::VectorXd stack_rows(const Eigen::MatrixXd& m) {
    Eigen::VectorXd out(m.size());
    for (int k = 0; k < m.rows(); ++k) out.segment(k * m.cols(), m.cols()) = m.row(k).transpose();
    return out;
}

Eigen::MatrixXd unstack_rows(const Eigen::VectorXd& v, int cols) {
    const int rows = static_cast<int>(v.size()) / cols;
    Eigen::MatrixXd m(rows, cols);
    for (int k = 0; k < rows; ++k) m.row(k) = v.segment(k * cols, cols).transpose();
    return m;
}

void check_convex(const QpProblem& p) {
    for (int j = 0; j < p.size(); ++j)
        if (!(p.hessian_diag[j] > 0.0))
            throw NonConvex("Hessian entry " + std::to_string(j) + " is not positive");
}

Eigen::VectorXd read_vector(std::istream& is, const std::string& name, int n) {
    std::string tag;
    is >> tag;
    if (tag != name) throw ParseError("expected section '" + name + "', got '" + tag + "'");
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j)
        if (!(is >> v[j])) throw ParseError("truncated section '" + name + "'");
    return v;
}
}  // namespace

void HorizonTrajectory::validate() const {
    if (positions.rows() != velocities.rows() || positions.cols() != velocities.cols())
        throw DimensionMismatch("positions and velocities must share their shape");
    if (positions.cols() != kDim) throw DimensionMismatch("trajectories carry 6 columns");
    if (!(dt > 0.0)) throw InvalidArgument("trajectory dt must be positive");
}

HorizonTrajectory HorizonTrajectory::hold(const Vector6d& pose, int steps, double dt,
                                          double start_time) {
    HorizonTrajectory h;
    h.positions = pose.transpose().replicate(steps, 1);
    h.velocities = Eigen::MatrixXd::Zero(steps, kDim);
    h.dt = dt;
    h.start_time = start_time;
    return h;
}

void QpWeights::validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw InvalidArgument("QP weights must be >= 0");
    if (beta < gamma) throw NonConvex("beta must not be smaller than gamma");
}

MotionLimits MotionLimits::defaults() {
    MotionLimits l;
    l.pos_min << -0.8, -0.8, 0.05, -M_PI, -M_PI, -M_PI;
    l.pos_max << 0.8, 0.8, 1.2, M_PI, M_PI, M_PI;
    l.vel_max << 1.0, 1.0, 1.0, 2.5, 2.5, 2.5;
    l.acc_max << 6.0, 6.0, 6.0, 25.0, 25.0, 25.0;
    return l;
}

void MotionLimits::validate() const {
    if ((pos_min.array() >= pos_max.array()).any())
        throw InvalidArgument("pos_min must be below pos_max");
    if ((vel_max.array() <= 0.0).any() || (acc_max.array() <= 0.0).any())
        throw InvalidArgument("velocity and acceleration limits must be positive");
}

Eigen::VectorXd apply_selection(const Eigen::VectorXd& stacked) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(stacked.size());
    for (Eigen::Index j = kVertical; j < stacked.size(); j += kDim) out[j] = stacked[j];
    return out;
}

double QpProblem::objective(const Eigen::VectorXd& v) const {
    return 0.5 * v.dot(hessian_diag.cwiseProduct(v)) + linear.dot(v) + constant;
}

Eigen::VectorXd QpProblem::gradient(const Eigen::VectorXd& v) const {
    return hessian_diag.cwiseProduct(v) + linear;
}

Eigen::VectorXd QpProblem::project(const Eigen::VectorXd& v) const {
    return v.cwiseMax(lower).cwiseMin(upper);
}

QpProblem build_qp(const HorizonTrajectory& prev, const HorizonTrajectory& object_traj,
                   const QpWeights& weights, const MotionLimits& limits) {
    prev.validate();
    object_traj.validate();
    weights.validate();
    limits.validate();
    if (prev.steps() != object_traj.steps() || std::abs(prev.dt - object_traj.dt) > 1e-15)
        throw DimensionMismatch("previous plan and object trajectory must share T and dt");

    const int T = prev.steps();
    const int n = T * kDim;
    const double dt = prev.dt;
    const Eigen::VectorXd x0 = stack_rows(prev.positions);
    const Eigen::VectorXd v0 = stack_rows(prev.velocities);
    const Eigen::VectorXd xo = stack_rows(object_traj.positions);
    const Eigen::VectorXd vo = stack_rows(object_traj.velocities);

    QpProblem p;
    p.steps = T;
    p.dt = dt;
    p.base_positions = x0;
    p.hessian_diag.resize(n);
    p.linear.resize(n);
    p.lower.resize(n);
    p.upper.resize(n);

    double c = 0.0;
    for (int j = 0; j < n; ++j) {
        const int axis = j % kDim;
        const double g = axis == kVertical ? 1.0 : 0.0;
        p.hessian_diag[j] = weights.alpha + weights.beta * dt * dt - weights.gamma * g * dt * dt;
        p.linear[j] = -weights.alpha * vo[j] + weights.beta * dt * (x0[j] - xo[j]) -
                      weights.gamma * g * dt * x0[j];
        c += weights.alpha * vo[j] * vo[j] + weights.beta * (x0[j] - xo[j]) * (x0[j] - xo[j]) -
             weights.gamma * g * x0[j] * x0[j];

        const double lo = std::max({(limits.pos_min[axis] - x0[j]) / dt, -limits.vel_max[axis],
                                    v0[j] - dt * limits.acc_max[axis]});
        const double hi = std::min({(limits.pos_max[axis] - x0[j]) / dt, limits.vel_max[axis],
                                    v0[j] + dt * limits.acc_max[axis]});
        if (lo > hi) {
            std::ostringstream msg;
            msg << "step " << j / kDim << " axis " << axis << ": lower " << lo << " > upper " << hi;
            throw InfeasibleBox(msg.str());
        }
        p.lower[j] = lo;
        p.upper[j] = hi;
    }
    p.constant = 0.5 * c;
    return p;
}

QpSolution solve_qp_clamp(const QpProblem& problem) {
    check_convex(problem);
    QpSolution s;
    s.v = problem.project(-problem.linear.cwiseQuotient(problem.hessian_diag));
    const Eigen::VectorXd g = problem.gradient(s.v);
    s.lower_multipliers = Eigen::VectorXd::Zero(problem.size());
    s.upper_multipliers = Eigen::VectorXd::Zero(problem.size());
    for (int j = 0; j < problem.size(); ++j) {
        if (s.v[j] == problem.lower[j] && g[j] > 0.0) s.lower_multipliers[j] = g[j];
        if (s.v[j] == problem.upper[j] && g[j] < 0.0) s.upper_multipliers[j] = -g[j];
    }
    s.objective = problem.objective(s.v);
    return s;
}

QpSolution solve_qp_projected_gradient(const QpProblem& problem, double tol, int max_iterations) {
    check_convex(problem);
    const double step = 1.0 / problem.hessian_diag.maxCoeff();
    QpSolution s;
    s.v = problem.project(Eigen::VectorXd::Zero(problem.size()));
    for (s.iterations = 0; s.iterations < max_iterations; ++s.iterations) {
        if (kkt_residual(problem, s.v) < tol) break;
        s.v = problem.project(s.v - step * problem.gradient(s.v));
    }
    const Eigen::VectorXd g = problem.gradient(s.v);
    s.lower_multipliers = Eigen::VectorXd::Zero(problem.size());
    s.upper_multipliers = Eigen::VectorXd::Zero(problem.size());
    for (int j = 0; j < problem.size(); ++j) {
        if (s.v[j] <= problem.lower[j] && g[j] > 0.0) s.lower_multipliers[j] = g[j];
        if (s.v[j] >= problem.upper[j] && g[j] < 0.0) s.upper_multipliers[j] = -g[j];
    }
    s.objective = problem.objective(s.v);
    return s;
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& v) {
    return (v - problem.project(v - problem.gradient(v))).cwiseAbs().maxCoeff();
}

HorizonTrajectory to_trajectory(const QpProblem& problem, const Eigen::VectorXd& v,
                                double start_time) {
    HorizonTrajectory h;
    h.dt = problem.dt;
    h.start_time = start_time;
    h.velocities = unstack_rows(v, kDim);
    h.positions = unstack_rows(problem.base_positions + problem.dt * v, kDim);
    return h;
}

HorizonTrajectory solve_qp(const QpProblem& problem, double start_time) {
    return to_trajectory(problem, solve_qp_clamp(problem).v, start_time);
}

Vector6d pose_vector(const CartesianState& s) {
    const Eigen::AngleAxisd aa(s.orientation);
    Vector6d p;
    p << s.position, aa.angle() * aa.axis();
    return p;
}

HorizonTrajectory object_horizon(const CartesianState& object_contact, double gravity, double dt,
                                 int steps, double start_time) {
    const auto states = free_fall_predict(object_contact, gravity, dt, steps);
    HorizonTrajectory h;
    h.dt = dt;
    h.start_time = start_time;
    h.positions.resize(steps, kDim);
    h.velocities.resize(steps, kDim);
    for (int k = 0; k < steps; ++k) {
        h.positions.row(k) = pose_vector(states[k + 1]).transpose();
        Vector6d v = Vector6d::Zero();
        v.head<3>() = states[k].linear_velocity;
        h.velocities.row(k) = v.transpose();
    }
    return h;
}

std::optional<CatchPoint> detect_catch(const CartesianState& state,
                                       const CartesianState& object_contact,
                                       const HorizonTrajectory& plan,
                                       const HorizonTrajectory& object_traj) {
    const int T = plan.steps();
    if (object_traj.steps() != T) throw DimensionMismatch("plan and object horizon differ in T");

    auto robot_pose = [&](int k) -> Vector6d {
        return k == 0 ? pose_vector(state) : Vector6d(plan.positions.row(k - 1).transpose());
    };
    auto gap = [&](int k) {
        const double zo = k == 0 ? object_contact.position.z() : object_traj.positions(k - 1, kVertical);
        return zo - robot_pose(k)[kVertical];
    };

    double g_prev = gap(0);
    if (g_prev <= 0.0) return CatchPoint{plan.start_time, pose_vector(state), state.twist()};
    for (int k = 1; k <= T; ++k) {
        const double g = gap(k);
        if (g <= 0.0) {
            const double s = g_prev / (g_prev - g);
            CatchPoint c;
            c.t_c = plan.start_time + (k - 1 + s) * plan.dt;
            c.x_c = (1.0 - s) * robot_pose(k - 1) + s * robot_pose(k);
            c.xdot_c = plan.velocities.row(k - 1).transpose();
            return c;
        }
        g_prev = g;
    }
    return std::nullopt;
}

CatchPoint require_catch(const CartesianState& state, const CartesianState& object_contact,
                         const HorizonTrajectory& plan, const HorizonTrajectory& object_traj) {
    auto c = detect_catch(state, object_contact, plan, object_traj);
    if (!c) throw NoInterceptInHorizon("object and robot heights never cross in the horizon");
    return *c;
}

PlanResult plan_step(const CartesianState& state, const CartesianState& object_contact,
                     const HorizonTrajectory& prev, const PlannerSettings& settings) {
    const int T = prev.steps();
    const HorizonTrajectory object_traj =
        object_horizon(object_contact, settings.gravity, settings.dt, T, prev.start_time);
    HorizonTrajectory prev_aligned = prev;
    prev_aligned.dt = settings.dt;
    const QpProblem problem = build_qp(prev_aligned, object_traj, settings.weights, settings.limits);

    PlanResult r;
    r.plan = solve_qp(problem, prev.start_time);
    r.catch_point = detect_catch(state, object_contact, r.plan, object_traj);

    r.next_prev = r.plan;
    r.next_prev.start_time = prev.start_time + settings.dt;
    if (T > 1)
        r.next_prev.velocities.topRows(T - 1) = r.plan.velocities.bottomRows(T - 1).eval();
    return r;
}

int default_horizon(const CartesianState& object_contact, double floor_z, double gravity,
                    double dt, int cap) {
    const double h = object_contact.position.z() - floor_z;
    const double v = object_contact.linear_velocity.z();
    double t = 0.0;
    if (gravity > 0.0) {
        t = (v + std::sqrt(std::max(0.0, v * v + 2.0 * gravity * h))) / gravity;
    } else if (v < 0.0) {
        t = h / -v;
    } else {
        return cap;
    }
    const int steps = static_cast<int>(std::ceil(t / dt));
    return std::clamp(steps, 1, cap);
}

void write_qp_dump(std::ostream& os, const QpProblem& p) {
    os << "# qp-dump v1\n" << std::setprecision(17);
    os << "n " << p.size() << "\nsteps " << p.steps << "\ndt " << p.dt << "\nconstant "
       << p.constant << "\n";
    auto section = [&](const char* name, const Eigen::VectorXd& v) {
        os << name << "\n";
        for (int j = 0; j < v.size(); ++j) os << v[j] << "\n";
    };
    section("hessian_diag", p.hessian_diag);
    section("linear", p.linear);
    section("lower", p.lower);
    section("upper", p.upper);
    section("base_positions", p.base_positions);
}

QpProblem read_qp_dump(std::istream& is) {
    std::string line;
    std::getline(is, line);
    if (line != "# qp-dump v1") throw ParseError("unsupported QP dump header '" + line + "'");
    auto field = [&](const std::string& name) {
        std::string tag;
        double value = 0.0;
        if (!(is >> tag >> value) || tag != name) throw ParseError("expected field '" + name + "'");
        return value;
    };
    QpProblem p;
    const int n = static_cast<int>(field("n"));
    p.steps = static_cast<int>(field("steps"));
    p.dt = field("dt");
    p.constant = field("constant");
    p.hessian_diag = read_vector(is, "hessian_diag", n);
    p.linear = read_vector(is, "linear", n);
    p.lower = read_vector(is, "lower", n);
    p.upper = read_vector(is, "upper", n);
    p.base_positions = read_vector(is, "base_positions", n);
    return p;
}

}  // namespace catching
