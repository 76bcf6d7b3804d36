#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace catching {

struct Demonstration;

/// Shoulder, elbow and hand positions of the human arm.
struct ArmConfiguration {
    Eigen::Vector3d shoulder = Eigen::Vector3d::Zero();
    Eigen::Vector3d elbow = Eigen::Vector3d::Zero();
    Eigen::Vector3d hand = Eigen::Vector3d::Zero();

    Eigen::Vector3d l() const { return hand - shoulder; }
    Eigen::Vector3d r() const { return elbow - shoulder; }
    void validate() const;
};

struct StiffnessModelParams {
    double c1 = 2033.325;
    double c2 = 140.606;
    double alpha1 = 0.255;
    double alpha2 = 2.815;

    void validate() const;
};

struct StiffnessMatrix {
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();

    void validate() const;
};

/// Columns [l̂, m̂, n̂] with n ∝ r × l and m ∝ n × l.
Eigen::Matrix3d principal_axes(const ArmConfiguration& config);

/// A_cc(p) = c1·p + c2.
double activation_gain(const StiffnessModelParams& params, double p);

/// Unit-determinant shape diag(1, α1/d1, α2·d2) / (α1/d1 · α2·d2)^(1/3).
///
/// d2 is the distance of the elbow from the major axis, measured along m̂.
Eigen::Matrix3d shape_matrix(const ArmConfiguration& config, const StiffnessModelParams& params);

/// A_cc(p) times the shape matrix.
Eigen::Matrix3d eigenvalue_shape(const ArmConfiguration& config, const StiffnessModelParams& params,
                                 double activation_p);

/// V·D·Vᵀ.
StiffnessMatrix estimate_stiffness(const ArmConfiguration& config, const StiffnessModelParams& params,
                                   double activation_p);

using CholeskyVector = Eigen::Matrix<double, 6, 1>;

/// Lower-triangular factor packed row-major: (L11, L21, L22, L31, L32, L33).
CholeskyVector cholesky_encode(const StiffnessMatrix& k);
StiffnessMatrix cholesky_decode(const CholeskyVector& packed);

/// Uniformly rescales k so that no diagonal entry exceeds `cap`.
StiffnessMatrix cap_stiffness(const StiffnessMatrix& k, double cap);

/// Stiffness indexed by vertical displacement below the catch point.
struct StiffnessProfile {
    std::vector<double> phase_grid;
    std::vector<StiffnessMatrix> matrices;
    double cap = 750.0;

    void validate() const;
    /// Linear interpolation between grid points, held constant outside the grid.
    StiffnessMatrix at(double phase) const;
};

struct HvsLearnOptions {
    int components = 5;
    int grid_points = 101;
    double cap = 750.0;
    std::uint64_t seed = 1;
};

/// GMR over packed Cholesky factors indexed by phase, decoded and capped.
StiffnessProfile learn_hvs(const std::vector<Demonstration>& demos, const HvsLearnOptions& options = {});

void write_profile_csv(std::ostream& os, const StiffnessProfile& profile);
StiffnessProfile read_profile_csv(std::istream& is);

}  // namespace catching
