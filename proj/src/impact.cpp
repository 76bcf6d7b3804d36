#include "catching/impact.hpp"

#include <cmath>

#include "catching/errors.hpp"

namespace catching {

namespace {
constexpr double kNormalTol = 1e-9;

void check_normal(const Eigen::Vector3d& n) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > kNormalTol)
        throw InvalidNormal("contact normal must have unit length");
}
}  // namespace

Vector6d CartesianState::twist() const {
    Vector6d v;
    v << linear_velocity, angular_velocity;
    return v;
}

void CartesianState::set_twist(const Vector6d& v) {
    linear_velocity = v.head<3>();
    angular_velocity = v.tail<3>();
}

void CartesianState::validate() const {
    if (std::abs(orientation.norm() - 1.0) > 1e-9)
        throw InvalidArgument("orientation quaternion is not unit norm");
}

EffectiveInertia EffectiveInertia::diagonal(double translational, double rotational) {
    EffectiveInertia in;
    in.lambda.setZero();
    in.lambda.diagonal() << translational, translational, translational, rotational, rotational,
        rotational;
    return in;
}

void EffectiveInertia::validate() const {
    if (!lambda.allFinite() || (lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw NonPositiveDefiniteInertia("inertia matrix is not symmetric");
    Eigen::LLT<Matrix6d> llt(lambda);
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefiniteInertia("inertia matrix failed Cholesky factorization");
}

void ImpactParams::validate() const {
    if (!(restitution_e >= 0.0 && restitution_e <= 1.0))
        throw InvalidArgument("restitution must lie in [0, 1]");
    if (!(object_mass > 0.0)) throw InvalidArgument("object mass must be positive");
    check_normal(contact_normal);
}

ImpactOutcome compute_impulse(const CartesianState& robot, const CartesianState& object,
                              const EffectiveInertia& inertia, const ImpactParams& params) {
    inertia.validate();
    params.validate();

    Eigen::LLT<Matrix6d> llt(inertia.lambda);
    const Matrix6d lambda_inv = llt.solve(Matrix6d::Identity());
    const Matrix6d a = lambda_inv + Matrix6d::Identity() / params.object_mass;

    // the object is a point mass: no angular impulse acts on it afterwards
    const Vector6d xo = object.twist();
    const Vector6d x = robot.twist();

    Vector6d w = xo - x;
    const double vn = w.head<3>().dot(params.contact_normal);
    w.head<3>() += params.restitution_e * vn * params.contact_normal;

    ImpactOutcome out;
    out.impulse = a.ldlt().solve(w);
    out.robot_velocity_after = x + lambda_inv * out.impulse;
    out.object_velocity_after = object.twist();
    out.object_velocity_after.head<3>() -= out.impulse.head<3>() / params.object_mass;
    return out;
}

double relative_normal_velocity(const CartesianState& robot, const CartesianState& object,
                                const Eigen::Vector3d& normal) {
    check_normal(normal);
    return (robot.linear_velocity - object.linear_velocity).dot(normal);
}

std::vector<CartesianState> free_fall_predict(const CartesianState& initial, double gravity,
                                              double dt, int steps) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (steps < 1) throw InvalidArgument("steps must be at least 1");
    std::vector<CartesianState> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    const Eigen::Vector3d g(0.0, 0.0, -gravity);
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        CartesianState s = initial;
        s.position = initial.position + initial.linear_velocity * t + 0.5 * g * t * t;
        s.linear_velocity = initial.linear_velocity + g * t;
        out.push_back(s);
    }
    return out;
}

}  // namespace catching
