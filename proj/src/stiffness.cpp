#include "catching/stiffness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "catching/errors.hpp"
#include "catching/lfd.hpp"

namespace catching {

namespace {
constexpr double kGeomTol = 1e-9;
}

void ArmConfiguration::validate() const {
    if (r().cross(l()).norm() <= kGeomTol)
        throw SingularArmConfiguration("shoulder, elbow and hand are collinear");
}

void StiffnessModelParams::validate() const {
    if (!(c1 > 0.0 && c2 > 0.0 && alpha1 > 0.0 && alpha2 > 0.0))
        throw InvalidArgument("stiffness model parameters must be positive");
}

void StiffnessMatrix::validate() const {
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw NotPositiveDefinite("stiffness matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(k, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw NotPositiveDefinite("stiffness matrix is not positive definite");
}

Eigen::Matrix3d principal_axes(const ArmConfiguration& config) {
    config.validate();
    const Eigen::Vector3d l = config.l();
    const Eigen::Vector3d n = config.r().cross(l);
    const Eigen::Vector3d m = n.cross(l);
    Eigen::Matrix3d v;
    v.col(0) = l.normalized();
    v.col(1) = m.normalized();
    v.col(2) = n.normalized();
    return v;
}

double activation_gain(const StiffnessModelParams& params, double p) {
    return params.c1 * p + params.c2;
}

Eigen::Matrix3d shape_matrix(const ArmConfiguration& config, const StiffnessModelParams& params) {
    params.validate();
    const Eigen::Matrix3d v = principal_axes(config);
    const double d1 = config.l().norm();
    // r·m̂ is never positive with m ∝ (r×l)×l, so the magnitude is used
    const double d2 = std::abs(config.r().dot(v.col(1)));
    if (d1 <= kGeomTol || d2 <= kGeomTol)
        throw DegenerateGeometry("elbow lies on the shoulder-hand axis");
    const double s2 = params.alpha1 / d1;
    const double s3 = params.alpha2 * d2;
    const double norm = std::cbrt(s2 * s3);
    return Eigen::Vector3d(1.0 / norm, s2 / norm, s3 / norm).asDiagonal();
}

Eigen::Matrix3d eigenvalue_shape(const ArmConfiguration& config, const StiffnessModelParams& params,
                                 double activation_p) {
    if (!(activation_p >= 0.0 && activation_p <= 1.0))
        throw InvalidArgument("activation must lie in [0, 1]");
    return activation_gain(params, activation_p) * shape_matrix(config, params);
}

StiffnessMatrix estimate_stiffness(const ArmConfiguration& config, const StiffnessModelParams& params,
                                   double activation_p) {
    const Eigen::Matrix3d v = principal_axes(config);
    const Eigen::Matrix3d d = eigenvalue_shape(config, params, activation_p);
    StiffnessMatrix out{v * d * v.transpose()};
    out.k = 0.5 * (out.k + out.k.transpose());
    return out;
}

CholeskyVector cholesky_encode(const StiffnessMatrix& k) {
    Eigen::LLT<Eigen::Matrix3d> llt(k.k);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("cannot factor a non-SPD stiffness");
    const Eigen::Matrix3d l = llt.matrixL();
    CholeskyVector v;
    v << l(0, 0), l(1, 0), l(1, 1), l(2, 0), l(2, 1), l(2, 2);
    return v;
}

StiffnessMatrix cholesky_decode(const CholeskyVector& v) {
    if (!(v[0] > 0.0 && v[2] > 0.0 && v[5] > 0.0))
        throw NotPositiveDefinite("packed Cholesky factor needs a positive diagonal");
    Eigen::Matrix3d l = Eigen::Matrix3d::Zero();
    l(0, 0) = v[0];
    l(1, 0) = v[1];
    l(1, 1) = v[2];
    l(2, 0) = v[3];
    l(2, 1) = v[4];
    l(2, 2) = v[5];
    return StiffnessMatrix{l * l.transpose()};
}

StiffnessMatrix cap_stiffness(const StiffnessMatrix& k, double cap) {
    const double top = k.k.diagonal().maxCoeff();
    if (top <= cap) return k;
    return StiffnessMatrix{k.k * (cap / top)};
}

void StiffnessProfile::validate() const {
    if (phase_grid.empty() || phase_grid.size() != matrices.size())
        throw DimensionMismatch("profile grid and matrices differ in length");
    for (std::size_t i = 1; i < phase_grid.size(); ++i)
        if (!(phase_grid[i] > phase_grid[i - 1])) throw InvalidArgument("profile grid must increase");
    for (const auto& m : matrices) {
        m.validate();
        if (m.k.diagonal().maxCoeff() > cap + 1e-9) throw InvalidArgument("profile entry exceeds cap");
    }
}

StiffnessMatrix StiffnessProfile::at(double phase) const {
    if (phase <= phase_grid.front()) return matrices.front();
    if (phase >= phase_grid.back()) return matrices.back();
    const auto it = std::upper_bound(phase_grid.begin(), phase_grid.end(), phase);
    const std::size_t i = static_cast<std::size_t>(it - phase_grid.begin()) - 1;
    const double s = (phase - phase_grid[i]) / (phase_grid[i + 1] - phase_grid[i]);
    return StiffnessMatrix{(1.0 - s) * matrices[i].k + s * matrices[i + 1].k};
}

StiffnessProfile learn_hvs(const std::vector<Demonstration>& demos, const HvsLearnOptions& options) {
    if (demos.empty()) throw InvalidArgument("no stiffness demonstrations");
    if (options.grid_points < 2) throw InvalidArgument("profile grid needs at least two points");
    double lo = demos.front().inputs(0, 0);
    double hi = lo;
    for (const auto& d : demos) {
        if (d.outputs.cols() != 6) throw DimensionMismatch("stiffness demos carry 6 Cholesky outputs");
        lo = std::min(lo, d.inputs.col(0).minCoeff());
        hi = std::max(hi, d.inputs.col(0).maxCoeff());
    }
    const GmmModel gmm = fit_gmm(demos, options.components, options.seed);

    StiffnessProfile p;
    p.cap = options.cap;
    for (int i = 0; i < options.grid_points; ++i) {
        const double phase = lo + (hi - lo) * i / (options.grid_points - 1);
        const GmrResult g = gmr_condition(gmm, Eigen::VectorXd::Constant(1, phase));
        p.phase_grid.push_back(phase);
        p.matrices.push_back(cap_stiffness(cholesky_decode(g.mean), options.cap));
    }
    return p;
}

void write_profile_csv(std::ostream& os, const StiffnessProfile& p) {
    os << std::setprecision(17) << "# cap=" << p.cap << "\n";
    os << "phase,k11,k21,k22,k31,k32,k33\n";
    for (std::size_t i = 0; i < p.phase_grid.size(); ++i) {
        const CholeskyVector v = cholesky_encode(p.matrices[i]);
        os << p.phase_grid[i];
        for (int j = 0; j < 6; ++j) os << "," << v[j];
        os << "\n";
    }
}

StiffnessProfile read_profile_csv(std::istream& is) {
    StiffnessProfile p;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("# cap=", 0) == 0) {
            p.cap = std::stod(line.substr(6));
            continue;
        }
        if (line[0] == '#') continue;
        if (!header) {
            if (line != "phase,k11,k21,k22,k31,k32,k33")
                throw ParseError("line " + std::to_string(lineno) + ": unexpected profile header");
            header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != 7) throw ParseError("line " + std::to_string(lineno) + ": expected 7 columns");
        CholeskyVector v;
        for (int j = 0; j < 6; ++j) v[j] = row[j + 1];
        p.phase_grid.push_back(row[0]);
        p.matrices.push_back(cholesky_decode(v));
    }
    p.validate();
    return p;
}

}  // namespace catching
