#pragma once

#include <vector>

#include <Eigen/Dense>

namespace catching {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Pose and twist of a rigid body (end-effector or object).
struct CartesianState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d linear_velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();

    /// Stacked [linear; angular] velocity.
    Vector6d twist() const;
    void set_twist(const Vector6d& v);
    void validate() const;
};

/// Effective Cartesian inertia seen at the contact point.
struct EffectiveInertia {
    Matrix6d lambda = Matrix6d::Identity();

    static EffectiveInertia diagonal(double translational, double rotational);
    void validate() const;
};

struct ImpactParams {
    double restitution_e = 0.0;
    double object_mass = 0.5;
    Eigen::Vector3d contact_normal = Eigen::Vector3d::UnitZ();

    void validate() const;
};

struct ImpactOutcome {
    Vector6d impulse = Vector6d::Zero();
    Vector6d robot_velocity_after = Vector6d::Zero();
    Vector6d object_velocity_after = Vector6d::Zero();
};

/// Impulse exchanged at first contact and the resulting velocities.
///
/// With e = 0 this is the plastic formula (Λ⁻¹ + I/m_o)⁻¹(ẋ_o − ẋ).  For e > 0
/// the normal component of the linear relative velocity is amplified by
/// (1 + e) before the solve, so the post-impact normal relative velocity is
/// exactly −e times the pre-impact one.
ImpactOutcome compute_impulse(const CartesianState& robot, const CartesianState& object,
                              const EffectiveInertia& inertia, const ImpactParams& params);

/// (ẋ − ẋ_o)ᵀη using the linear components.
double relative_normal_velocity(const CartesianState& robot, const CartesianState& object,
                                const Eigen::Vector3d& normal);

/// Closed-form ballistic states at t = k·dt for k = 0..steps (steps + 1 entries).
std::vector<CartesianState> free_fall_predict(const CartesianState& initial, double gravity,
                                              double dt, int steps);

}  // namespace catching
