#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "catching/impact.hpp"
#include "catching/lfd.hpp"
#include "catching/prc_qp.hpp"
#include "catching/stiffness.hpp"

namespace catching {

struct ImpedanceGains {
    StiffnessMatrix stiffness;
    Eigen::Matrix3d damping = Eigen::Matrix3d::Zero();
    double damping_factor_zeta = 0.707;

    static ImpedanceGains from_stiffness(const StiffnessMatrix& k, double zeta);
};

/// diag(D) = 2ζ√diag(K).
Eigen::Matrix3d derive_damping(const StiffnessMatrix& stiffness, double zeta);

/// Translational spring-damper force K(x_d − x) + D(ẋ_d − ẋ); EE gravity is
/// compensated exactly, so it does not appear.
Eigen::Vector3d impedance_force(const ImpedanceGains& gains, const CartesianState& desired,
                                const CartesianState& actual);

struct ContactModel {
    double penalty_stiffness = 2e4;
    double penalty_damping = 200.0;
    double restitution_e = 0.0;
    bool render_impulse = true;  //!< add the impact impulse to the force signal as a half-sine pulse

    void validate() const;
};

enum class ControlMode { FixedPosition, VelocityMatchingIC, VelocityMatchingVIC };
enum class Phase { PRC = 0, IMPACT = 1, POC = 2 };

std::string to_string(ControlMode mode);
ControlMode parse_mode(const std::string& text);
std::string to_string(Phase phase);

/// Learned post-contact behaviour: relative trajectory reference and HVS.
struct PocModels {
    ReferenceTrajectory trajectory;  //!< outputs [p; v] relative to the touch point
    StiffnessProfile hvs;
};

struct SimConfig {
    ControlMode mode = ControlMode::VelocityMatchingVIC;
    double drop_height = 0.27;
    double object_mass = 0.5;
    double object_radius = 0.0475;
    bool release_object = true;
    Eigen::Vector3d ee_start = Eigen::Vector3d(0.0, 0.0, 0.5);
    EffectiveInertia inertia = EffectiveInertia::diagonal(3.0, 0.3);
    PlannerSettings planner;
    int horizon_cap = 300;
    double stiffness = 750.0;
    double zeta = 0.707;
    double rot_stiffness = 50.0;
    ContactModel contact;
    double trigger_force = 3.0;
    double dt_sim = 1e-4;
    double duration = 3.0;
    double rest_speed = 1e-4;
    double rest_time = 0.2;
    double safety_force = 150.0;  //!< reflected-load limit on |contact force|; <= 0 disables
    double blowup_bound = 1e3;
    KmpParams kmp;
    double via_variance = 1e-6;

    void validate() const;
};

struct TraceRow {
    double t = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d force = Eigen::Vector3d::Zero();  //!< contact force acting on the robot
    double k_z = 0.0;
    Phase phase = Phase::PRC;
    double object_z = 0.0;
    double object_vz = 0.0;
    Eigen::Vector3d desired_position = Eigen::Vector3d::Zero();
    Eigen::Vector3d desired_velocity = Eigen::Vector3d::Zero();
    double contact_work = 0.0;  //!< work of the penalty force on the robot during the step ending here
};

using SimTrace = std::vector<TraceRow>;

enum class StopReason { AtRest, Timeout, SafetyStop };

struct SimResult {
    SimTrace trace;
    StopReason stop = StopReason::Timeout;
    std::string message;
    std::optional<CatchPoint> catch_point;
    std::optional<ImpactOutcome> impact;
    Vector6d robot_twist_before_impact = Vector6d::Zero();
    double impact_time = -1.0;
    double pulse_duration = 0.0;
    double trigger_time = -1.0;
    double max_object_energy_residual = 0.0;  //!< per-step object energy balance error, penalty phase
};

/// Runs a single catching experiment.  `models` is required in the velocity
/// matching modes.  Throws NumericalBlowup or InfeasibleBox; a SafetyStop is
/// reported through SimResult::stop.
SimResult run_scenario(const SimConfig& config, const PocModels* models = nullptr);

/// Trace CSV `t,x,y,z,vx,vy,vz,fx,fy,fz,k_z,phase` preceded by a hash comment.
void write_trace_csv(std::ostream& os, const SimTrace& trace, const std::string& config_hash);

}  // namespace catching
