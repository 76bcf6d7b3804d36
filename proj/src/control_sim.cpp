#include "catching/control_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "catching/errors.hpp"

namespace catching {

namespace {

Eigen::Quaterniond exp_map(const Eigen::Vector3d& rv) {
    const double angle = rv.norm();
    if (angle < 1e-15) return Eigen::Quaterniond::Identity();
    return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rv / angle));
}

Eigen::Vector3d log_map(const Eigen::Quaterniond& q) {
    Eigen::AngleAxisd aa(q.normalized());
    double angle = aa.angle();
    if (angle > M_PI) angle -= 2.0 * M_PI;
    return angle * aa.axis();
}

struct State {
    Eigen::Vector3d p, v;
    Eigen::Quaterniond q;
    Eigen::Vector3d w;
    Eigen::Vector3d pb, vb;
};

struct Derivative {
    Vector6d robot_acc;
    Eigen::Vector3d ball_acc;
    double contact = 0.0;  //!< penalty force magnitude pushing the ball up
};

}  // namespace

ImpedanceGains ImpedanceGains::from_stiffness(const StiffnessMatrix& k, double zeta) {
    ImpedanceGains g;
    g.stiffness = k;
    g.damping = derive_damping(k, zeta);
    g.damping_factor_zeta = zeta;
    return g;
}

Eigen::Matrix3d derive_damping(const StiffnessMatrix& stiffness, double zeta) {
    const Eigen::Vector3d d = 2.0 * zeta * stiffness.k.diagonal().cwiseMax(0.0).cwiseSqrt();
    return d.asDiagonal();
}

Eigen::Vector3d impedance_force(const ImpedanceGains& gains, const CartesianState& desired,
                                const CartesianState& actual) {
    return gains.stiffness.k * (desired.position - actual.position) +
           gains.damping * (desired.linear_velocity - actual.linear_velocity);
}

void ContactModel::validate() const {
    if (!(penalty_stiffness > 0.0 && penalty_damping > 0.0))
        throw InvalidArgument("penalty parameters must be positive");
    if (!(restitution_e >= 0.0 && restitution_e <= 1.0))
        throw InvalidArgument("restitution must lie in [0, 1]");
}

std::string to_string(ControlMode mode) {
    switch (mode) {
        case ControlMode::FixedPosition: return "FP-IC";
        case ControlMode::VelocityMatchingIC: return "VM-IC";
        case ControlMode::VelocityMatchingVIC: return "VM-VIC";
    }
    return "?";
}

ControlMode parse_mode(const std::string& text) {
    if (text == "FP-IC") return ControlMode::FixedPosition;
    if (text == "VM-IC") return ControlMode::VelocityMatchingIC;
    if (text == "VM-VIC") return ControlMode::VelocityMatchingVIC;
    throw InvalidArgument("unknown mode '" + text + "' (expected FP-IC, VM-IC or VM-VIC)");
}

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::PRC: return "PRC";
        case Phase::IMPACT: return "IMPACT";
        case Phase::POC: return "POC";
    }
    return "?";
}

void SimConfig::validate() const {
    if (!(drop_height >= 0.0)) throw InvalidArgument("drop height must be non-negative");
    if (!(object_mass > 0.0 && object_radius >= 0.0)) throw InvalidArgument("invalid object parameters");
    inertia.validate();
    planner.weights.validate();
    planner.limits.validate();
    contact.validate();
    if (!(trigger_force > 0.0)) throw InvalidArgument("trigger force must be positive");
    if (!(dt_sim > 0.0) || dt_sim > planner.dt) throw InvalidArgument("dt_sim must lie in (0, planner dt]");
    const double ratio = planner.dt / dt_sim;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw InvalidArgument("planner dt must be a whole multiple of dt_sim");
    if (!(stiffness > 0.0 && zeta > 0.0 && rot_stiffness > 0.0)) throw InvalidArgument("invalid gains");
    if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
    if (horizon_cap < 1) throw InvalidArgument("horizon cap must be positive");
}

SimResult run_scenario(const SimConfig& cfg, const PocModels* models) {
    cfg.validate();
    const bool velocity_matching = cfg.mode != ControlMode::FixedPosition;
    if (velocity_matching && models == nullptr)
        throw InvalidArgument("velocity-matching modes need learned trajectory and stiffness models");

    const double dt = cfg.dt_sim;
    const double g = cfg.planner.gravity;
    const double m = cfg.object_mass;
    const double r = cfg.object_radius;
    const Matrix6d lambda_inv = cfg.inertia.lambda.llt().solve(Matrix6d::Identity());
    const int plan_every = static_cast<int>(std::lround(cfg.planner.dt / dt));
    const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();

    State s;
    s.p = cfg.ee_start;
    s.v.setZero();
    s.q = Eigen::Quaterniond::Identity();
    s.w.setZero();
    s.pb = cfg.ee_start + (r + cfg.drop_height) * up;
    s.vb.setZero();
    const Eigen::Quaterniond q_home = s.q;

    auto robot_state = [](const State& x) {
        CartesianState c;
        c.position = x.p;
        c.orientation = x.q;
        c.linear_velocity = x.v;
        c.angular_velocity = x.w;
        return c;
    };
    auto contact_state = [&](const State& x) {
        CartesianState c;
        c.position = x.pb - r * up;
        c.linear_velocity = x.vb;
        return c;
    };

    // pre-contact reference: start of the current plan segment and its velocity
    Eigen::Vector3d seg_pose = cfg.ee_start;
    Eigen::Vector3d seg_vel = Eigen::Vector3d::Zero();
    double seg_t = 0.0;
    HorizonTrajectory prev;
    if (velocity_matching && cfg.release_object) {
        const int horizon = default_horizon(contact_state(s), cfg.planner.limits.pos_min.z(), g,
                                            cfg.planner.dt, cfg.horizon_cap);
        prev = HorizonTrajectory::hold(pose_vector(robot_state(s)), horizon, cfg.planner.dt);
    }

    std::unique_ptr<KmpModel> kmp;
    Phase phase = Phase::PRC;
    bool impacted = false;
    bool triggered = false;
    double t_imp = 0.0;
    double z_catch = 0.0;
    Eigen::Vector3d impulse_lin = Eigen::Vector3d::Zero();

    ImpedanceGains gains =
        ImpedanceGains::from_stiffness(StiffnessMatrix{cfg.stiffness * Eigen::Matrix3d::Identity()}, cfg.zeta);
    const double rot_damping = 2.0 * cfg.zeta * std::sqrt(cfg.rot_stiffness);

    auto desired = [&](double t, Eigen::Vector3d& xd, Eigen::Vector3d& vd) {
        if (!velocity_matching || !cfg.release_object) {
            xd = cfg.ee_start;
            vd.setZero();
        } else if (!impacted) {
            xd = seg_pose + (t - seg_t) * seg_vel;
            vd = seg_vel;
        } else {
            const double q = std::clamp(t - t_imp, kmp->input_min(), kmp->input_max());
            const Eigen::VectorXd mu = kmp->predict_mean(q);
            xd = mu.head<3>();
            vd = mu.segment<3>(3).cwiseMax(-cfg.planner.limits.vel_max.head<3>())
                     .cwiseMin(cfg.planner.limits.vel_max.head<3>());
        }
    };

    auto penalty = [&](const State& x) {
        if (!impacted) return 0.0;
        const double pen = x.p.z() + r - x.pb.z();
        if (pen <= 0.0) return 0.0;
        return std::max(0.0, cfg.contact.penalty_stiffness * pen +
                                 cfg.contact.penalty_damping * (x.v.z() - x.vb.z()));
    };

    auto derivative = [&](const State& x, double t) {
        Eigen::Vector3d xd, vd;
        desired(t, xd, vd);
        Derivative d;
        d.contact = penalty(x);
        Vector6d wrench;
        wrench.head<3>() = gains.stiffness.k * (xd - x.p) + gains.damping * (vd - x.v) - d.contact * up;
        wrench.tail<3>() = cfg.rot_stiffness * log_map(q_home * x.q.inverse()) - rot_damping * x.w;
        d.robot_acc = lambda_inv * wrench;
        d.ball_acc = (cfg.release_object ? -g : 0.0) * up + (d.contact / m) * up;
        return d;
    };

    SimResult res;
    double pulse_tau = 0.0;
    auto recorded_force = [&](const State& x, double t) -> Eigen::Vector3d {
        Eigen::Vector3d f = -penalty(x) * up;
        if (impacted && cfg.contact.render_impulse && pulse_tau > 0.0) {
            const double sft = t - t_imp;
            if (sft >= 0.0 && sft <= pulse_tau)
                f += impulse_lin * (M_PI / (2.0 * pulse_tau)) * std::sin(M_PI * sft / pulse_tau);
        }
        return f;
    };

    auto make_row = [&](const State& x, double t, double work) {
        TraceRow row;
        row.t = t;
        row.position = x.p;
        row.velocity = x.v;
        row.force = recorded_force(x, t);
        row.k_z = gains.stiffness.k(2, 2);
        row.phase = phase;
        row.object_z = x.pb.z();
        row.object_vz = x.vb.z();
        desired(t, row.desired_position, row.desired_velocity);
        row.contact_work = work;
        return row;
    };

    res.trace.reserve(static_cast<std::size_t>(cfg.duration / dt) + 2);
    res.trace.push_back(make_row(s, 0.0, 0.0));

    const long max_steps = static_cast<long>(std::ceil(cfg.duration / dt - 1e-9));
    double rest_accum = 0.0;
    res.stop = StopReason::Timeout;

    for (long n = 0; n < max_steps; ++n) {
        const double t0 = n * dt;
        const double t1 = (n + 1) * dt;

        if (velocity_matching && cfg.release_object && !impacted && n % plan_every == 0) {
            PlannerSettings ps = cfg.planner;
            prev.start_time = t0;
            const PlanResult pr = plan_step(robot_state(s), contact_state(s), prev, ps);
            seg_pose = prev.positions.row(0).head<3>().transpose();
            seg_vel = pr.plan.velocities.row(0).head<3>().transpose();
            seg_t = t0;
            prev = pr.next_prev;
            if (pr.catch_point) res.catch_point = pr.catch_point;
        }

        // Heun predictor-corrector; positions use the corrected mean velocity
        const Derivative d0 = derivative(s, t0);
        State pred = s;
        pred.p = s.p + dt * s.v;
        pred.v = s.v + dt * d0.robot_acc.head<3>();
        pred.w = s.w + dt * d0.robot_acc.tail<3>();
        pred.q = (exp_map(dt * s.w) * s.q).normalized();
        pred.pb = s.pb + dt * s.vb;
        pred.vb = s.vb + dt * d0.ball_acc;
        const Derivative d1 = derivative(pred, t1);

        State next = s;
        next.v = s.v + 0.5 * dt * (d0.robot_acc.head<3>() + d1.robot_acc.head<3>());
        next.w = s.w + 0.5 * dt * (d0.robot_acc.tail<3>() + d1.robot_acc.tail<3>());
        next.p = s.p + 0.5 * dt * (s.v + next.v);
        next.q = (exp_map(0.5 * dt * (s.w + next.w)) * s.q).normalized();
        next.vb = s.vb + 0.5 * dt * (d0.ball_acc + d1.ball_acc);
        next.pb = s.pb + 0.5 * dt * (s.vb + next.vb);

        const double f_mean = 0.5 * (d0.contact + d1.contact);
        const double work = -f_mean * 0.5 * (s.v.z() + next.v.z()) * dt;
        if (impacted) {
            const double d_ke = 0.5 * m * (next.vb.squaredNorm() - s.vb.squaredNorm());
            const double d_pe = m * g * (next.pb.z() - s.pb.z());
            const double w_obj = f_mean * 0.5 * (s.vb.z() + next.vb.z()) * dt;
            res.max_object_energy_residual =
                std::max(res.max_object_energy_residual, std::abs(d_ke + d_pe - w_obj));
        }
        s = next;

        for (const auto* vec : {&s.p, &s.v, &s.w, &s.pb, &s.vb})
            if (!vec->allFinite() || vec->cwiseAbs().maxCoeff() > cfg.blowup_bound)
                throw NumericalBlowup("state left the sanity bounds at t = " + std::to_string(t1));

        if (phase == Phase::IMPACT) phase = Phase::POC;
        if (!impacted && cfg.release_object && s.pb.z() - r - s.p.z() <= 0.0) {
            ImpactParams ip;
            ip.restitution_e = cfg.contact.restitution_e;
            ip.object_mass = m;
            ip.contact_normal = up;
            CartesianState obj = contact_state(s);
            const CartesianState rob = robot_state(s);
            res.robot_twist_before_impact = rob.twist();
            const ImpactOutcome out = compute_impulse(rob, obj, cfg.inertia, ip);
            s.v = out.robot_velocity_after.head<3>();
            s.w = out.robot_velocity_after.tail<3>();
            s.vb = out.object_velocity_after.head<3>();
            res.impact = out;
            impacted = true;
            t_imp = t1;
            res.impact_time = t1;
            impulse_lin = out.impulse.head<3>();
            const double inv_meff = up.dot(lambda_inv.topLeftCorner<3, 3>() * up) + 1.0 / m;
            pulse_tau = M_PI * std::sqrt(1.0 / (inv_meff * cfg.contact.penalty_stiffness));
            res.pulse_duration = pulse_tau;
            phase = Phase::IMPACT;

            if (velocity_matching) {
                CatchPoint c;
                if (res.catch_point) {
                    c = *res.catch_point;
                } else {
                    c.t_c = t1;
                    c.x_c = pose_vector(rob);
                    c.xdot_c = rob.twist();
                }
                const ReferenceTrajectory shifted =
                    translate_reference(models->trajectory, c.x_c.head<3>());
                const Eigen::MatrixXd via_cov =
                    cfg.via_variance * Eigen::MatrixXd::Identity(shifted.output_dim(), shifted.output_dim());
                kmp = std::make_unique<KmpModel>(insert_via_point(shifted, c, via_cov), cfg.kmp);
            }
        }

        TraceRow row = make_row(s, t1, work);
        const double fmag = row.force.norm();
        if (impacted && !triggered && fmag >= cfg.trigger_force) {
            triggered = true;
            z_catch = s.p.z();
            res.trigger_time = t1;
        }
        if (triggered && cfg.mode == ControlMode::VelocityMatchingVIC) {
            gains = ImpedanceGains::from_stiffness(models->hvs.at(std::max(z_catch - s.p.z(), 0.0)), cfg.zeta);
            row.k_z = gains.stiffness.k(2, 2);
        }
        res.trace.push_back(row);

        if (cfg.safety_force > 0.0 && fmag > cfg.safety_force) {
            res.stop = StopReason::SafetyStop;
            res.message = "reflected load " + std::to_string(fmag) + " N exceeded the safety limit";
            return res;
        }
        if (impacted) {
            rest_accum = s.v.norm() < cfg.rest_speed ? rest_accum + dt : 0.0;
            if (rest_accum >= cfg.rest_time - 1e-12) {
                res.stop = StopReason::AtRest;
                return res;
            }
        }
    }
    return res;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace, const std::string& config_hash) {
    os << "# config_hash=" << config_hash << "\n";
    os << "t,x,y,z,vx,vy,vz,fx,fy,fz,k_z,phase\n";
    char buf[512];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n", r.t,
                      r.position.x(), r.position.y(), r.position.z(), r.velocity.x(), r.velocity.y(),
                      r.velocity.z(), r.force.x(), r.force.y(), r.force.z(), r.k_z, to_string(r.phase).c_str());
        os << buf;
    }
}

}  // namespace catching
