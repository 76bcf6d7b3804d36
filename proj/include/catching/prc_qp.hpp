#pragma once

#include <iosfwd>
#include <optional>

#include <Eigen/Dense>

#include "catching/impact.hpp"

namespace catching {

/// Stacked T×6 position/velocity references over the prediction horizon.
///
/// Row k of `positions` is the pose at the end of interval k and row k of
/// `velocities` is the twist held during interval k; poses are
/// [x, y, z, rx, ry, rz] with a rotation-vector orientation.
struct HorizonTrajectory {
    Eigen::MatrixXd positions;
    Eigen::MatrixXd velocities;
    double dt = 1e-3;
    double start_time = 0.0;

    int steps() const { return static_cast<int>(positions.rows()); }
    void validate() const;

    /// Current pose repeated and zero velocity over `steps` rows.
    static HorizonTrajectory hold(const Vector6d& pose, int steps, double dt, double start_time = 0.0);
};

struct QpWeights {
    double alpha = 0.15;
    double beta = 1.0;
    double gamma = 1.0;

    void validate() const;
};

struct MotionLimits {
    Vector6d pos_min;
    Vector6d pos_max;
    Vector6d vel_max;
    Vector6d acc_max;

    /// 1 m/s, 2.5 rad/s, 6 m/s², 25 rad/s² with a workspace box around the origin.
    static MotionLimits defaults();
    void validate() const;
};

struct CatchPoint {
    double t_c = 0.0;
    Vector6d x_c = Vector6d::Zero();
    Vector6d xdot_c = Vector6d::Zero();
};

/// Selects the vertical component of a stacked pose vector.
Eigen::VectorXd apply_selection(const Eigen::VectorXd& stacked);

/// min ½ vᵀ diag(h) v + fᵀv + c  subject to lower ≤ v ≤ upper.
struct QpProblem {
    int steps = 0;
    double dt = 0.0;
    Eigen::VectorXd hessian_diag;
    Eigen::VectorXd linear;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double constant = 0.0;
    Eigen::VectorXd base_positions;  //!< x_R0 stacked row-major, used to rebuild positions

    int size() const { return static_cast<int>(hessian_diag.size()); }
    double objective(const Eigen::VectorXd& v) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& v) const;
    Eigen::VectorXd project(const Eigen::VectorXd& v) const;
};

struct QpSolution {
    Eigen::VectorXd v;
    Eigen::VectorXd lower_multipliers;
    Eigen::VectorXd upper_multipliers;
    double objective = 0.0;
    int iterations = 0;
};

QpProblem build_qp(const HorizonTrajectory& prev, const HorizonTrajectory& object_traj,
                   const QpWeights& weights, const MotionLimits& limits);

/// Closed-form solution: component-wise clamp of the unconstrained minimizer.
QpSolution solve_qp_clamp(const QpProblem& problem);

/// Projected gradient with a 1/L step; stops when the natural residual drops below `tol`.
QpSolution solve_qp_projected_gradient(const QpProblem& problem, double tol = 1e-13,
                                       int max_iterations = 200000);

/// ‖v − Π(v − ∇f(v))‖∞, zero exactly at the constrained minimizer.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& v);

/// Solves the problem and maps the velocities back to a trajectory.
HorizonTrajectory solve_qp(const QpProblem& problem, double start_time = 0.0);

HorizonTrajectory to_trajectory(const QpProblem& problem, const Eigen::VectorXd& v,
                                double start_time);

/// Object contact-point trajectory over the horizon: positions at k = 1..T,
/// velocities at k = 0..T−1 (ballistic).
HorizonTrajectory object_horizon(const CartesianState& object_contact, double gravity, double dt,
                                 int steps, double start_time = 0.0);

struct PlannerSettings {
    QpWeights weights;
    MotionLimits limits = MotionLimits::defaults();
    double dt = 1e-3;
    double gravity = 9.81;
};

struct PlanResult {
    HorizonTrajectory plan;       //!< solution of the current QP
    HorizonTrajectory next_prev;  //!< plan advanced by one step, used as x_R0/ẋ_R0 next time
    std::optional<CatchPoint> catch_point;
};

/// One receding-horizon iteration.  `object_contact` is the state of the
/// object point that will touch the end-effector.
PlanResult plan_step(const CartesianState& state, const CartesianState& object_contact,
                     const HorizonTrajectory& prev, const PlannerSettings& settings);

/// Earliest crossing of the object and robot heights, including the current
/// state at index 0.  Linear interpolation inside the crossing interval.
std::optional<CatchPoint> detect_catch(const CartesianState& state,
                                       const CartesianState& object_contact,
                                       const HorizonTrajectory& plan,
                                       const HorizonTrajectory& object_traj);

/// Same as detect_catch but throws NoInterceptInHorizon when nothing crosses.
CatchPoint require_catch(const CartesianState& state, const CartesianState& object_contact,
                         const HorizonTrajectory& plan, const HorizonTrajectory& object_traj);

/// Horizon length: time for the object to fall to `floor_z`, in planner steps, capped.
int default_horizon(const CartesianState& object_contact, double floor_z, double gravity,
                    double dt, int cap = 300);

Vector6d pose_vector(const CartesianState& s);

void write_qp_dump(std::ostream& os, const QpProblem& problem);
QpProblem read_qp_dump(std::istream& is);

}  // namespace catching
