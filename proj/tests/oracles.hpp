#pragma once

// Independent reference computations shared by the acceptance runner.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "catching/impact.hpp"
#include "catching/lfd.hpp"
#include "catching/prc_qp.hpp"
#include "catching/stiffness.hpp"

namespace catching::oracle {

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
}

/// SPD 6x6 with eigenvalues in [0.1, 10].
inline EffectiveInertia random_inertia(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), ev(0.1, 10.0);
    Matrix6d a;
    for (int i = 0; i < 36; ++i) a(i) = u(rng);
    const Matrix6d q = Eigen::HouseholderQR<Matrix6d>(a).householderQ();
    Vector6d d;
    for (int i = 0; i < 6; ++i) d[i] = ev(rng);
    EffectiveInertia in;
    in.lambda = q * d.asDiagonal() * q.transpose();
    in.lambda = 0.5 * (in.lambda + in.lambda.transpose()).eval();
    return in;
}

struct QpInstance {
    HorizonTrajectory prev;
    HorizonTrajectory object;
    QpWeights weights;
    MotionLimits limits = MotionLimits::defaults();
};

inline QpInstance random_qp_instance(std::mt19937_64& rng, int steps, double fixed_dt = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0), s(-1.0, 1.0);
    QpInstance in;
    const double dt = fixed_dt > 0.0 ? fixed_dt : 1e-3 * (1.0 + 9.0 * u(rng));
    const MotionLimits& l = in.limits;
    in.prev.dt = in.object.dt = dt;
    in.prev.positions.resize(steps, 6);
    in.prev.velocities.resize(steps, 6);
    in.object.positions.resize(steps, 6);
    in.object.velocities.resize(steps, 6);
    for (int k = 0; k < steps; ++k)
        for (int j = 0; j < 6; ++j) {
            const double margin = dt * l.vel_max[j];
            in.prev.positions(k, j) = l.pos_min[j] + margin + u(rng) * (l.pos_max[j] - l.pos_min[j] - 2 * margin);
            in.prev.velocities(k, j) = 0.9 * l.vel_max[j] * s(rng);
            in.object.positions(k, j) = in.prev.positions(k, j) + 0.3 * s(rng);
            in.object.velocities(k, j) = 2.5 * s(rng);
        }
    in.weights.alpha = 0.01 + u(rng);
    in.weights.beta = 2.0 * u(rng);
    in.weights.gamma = in.weights.beta * u(rng);
    return in;
}

/// Tracking objective evaluated straight from the trajectories.
inline double qp_objective(const QpInstance& in, const Eigen::VectorXd& v) {
    double f = 0.0;
    for (int k = 0; k < in.prev.steps(); ++k)
        for (int j = 0; j < 6; ++j) {
            const double vel = v[6 * k + j];
            const double x = in.prev.positions(k, j) + in.prev.dt * vel;
            const double ev = vel - in.object.velocities(k, j);
            const double ex = x - in.object.positions(k, j);
            f += in.weights.alpha * ev * ev + in.weights.beta * ex * ex - (j == 2 ? in.weights.gamma * x * x : 0.0);
        }
    return 0.5 * f;
}

/// Best point on a `step` grid of the box, by coordinate sweeps (the objective is separable).
inline Eigen::VectorXd qp_grid_search(const QpInstance& in, const QpProblem& p, double step) {
    Eigen::VectorXd v = p.lower;
    for (int j = 0; j < p.size(); ++j) {
        double best = qp_objective(in, v), best_x = v[j];
        const int cells = static_cast<int>(std::floor((p.upper[j] - p.lower[j]) / step));
        for (int c = 0; c <= cells + 1; ++c) {
            v[j] = std::min(p.lower[j] + c * step, p.upper[j]);
            const double f = qp_objective(in, v);
            if (f < best) {
                best = f;
                best_x = v[j];
            }
        }
        v[j] = best_x;
    }
    return v;
}

inline ReferenceTrajectory sine_reference(int n, double var = 1e-3) {
    ReferenceTrajectory ref;
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        ref.inputs.push_back(s);
        Eigen::VectorXd m(2);
        m << std::sin(3.0 * s), 0.5 * s * s - 0.2;
        ref.means.push_back(m);
        ref.covariances.push_back(var * (1.0 + s) * Eigen::MatrixXd::Identity(2, 2));
    }
    return ref;
}

struct DenseKmp {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Kernelized prediction assembled element by element and solved with a full-pivot LU.
inline DenseKmp dense_kmp(const ReferenceTrajectory& ref, double h, double l1, double l2, double s) {
    const int n = ref.size(), o = ref.output_dim();
    auto k = [h](double a, double b) { return std::exp(-(a - b) * (a - b) / (2.0 * h * h)); };
    Eigen::MatrixXd kk = Eigen::MatrixXd::Zero(n * o, n * o), sig = Eigen::MatrixXd::Zero(n * o, n * o);
    Eigen::MatrixXd ks = Eigen::MatrixXd::Zero(o, n * o);
    Eigen::VectorXd mu(n * o);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < o; ++a) {
            mu[i * o + a] = ref.means[i][a];
            ks(a, i * o + a) = k(s, ref.inputs[i]);
            for (int b = 0; b < o; ++b) sig(i * o + a, i * o + b) = ref.covariances[i](a, b);
            for (int j = 0; j < n; ++j) kk(i * o + a, j * o + a) = k(ref.inputs[i], ref.inputs[j]);
        }
    DenseKmp d;
    d.mean = ks * Eigen::FullPivLU<Eigen::MatrixXd>(kk + l1 * sig).solve(mu);
    const Eigen::MatrixXd red = ks * Eigen::FullPivLU<Eigen::MatrixXd>(kk + l2 * sig).solve(ks.transpose());
    d.cov = (static_cast<double>(n) / l2) * (k(s, s) * Eigen::MatrixXd::Identity(o, o) - red);
    return d;
}

inline ArmConfiguration random_arm(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (;;) {
        ArmConfiguration a{Eigen::Vector3d(u(rng), u(rng), u(rng)), Eigen::Vector3d(u(rng), u(rng), u(rng)),
                           Eigen::Vector3d(u(rng), u(rng), u(rng))};
        if (a.r().cross(a.l()).norm() > 1e-3) return a;
    }
}

inline Eigen::Matrix3d random_spd(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), ev(1.0, 1000.0);
    Eigen::Matrix3d a;
    for (int i = 0; i < 9; ++i) a(i) = u(rng);
    const Eigen::Matrix3d q = Eigen::HouseholderQR<Eigen::Matrix3d>(a).householderQ();
    return q * Eigen::Vector3d(ev(rng), ev(rng), ev(rng)).asDiagonal() * q.transpose();
}

}  // namespace catching::oracle
