#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "catching/prc_qp.hpp"

namespace catching {

/// One demonstration: N samples of d_in inputs and O outputs.
struct Demonstration {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd outputs;

    int samples() const { return static_cast<int>(inputs.rows()); }
    void validate(bool temporal = true) const;
};

struct GmmModel {
    int input_dim = 1;
    Eigen::VectorXd priors;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;
    std::vector<double> fit_history;  //!< penalized log-likelihood per EM iteration

    int components() const { return static_cast<int>(priors.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
    int output_dim() const { return dim() - input_dim; }
    void validate() const;
    double log_likelihood(const Eigen::MatrixXd& data) const;
};

struct GmmFitOptions {
    int max_iterations = 500;
    double tolerance = 1e-8;
    double regularization = 1e-6;  //!< covariance floor, applied as a fixed inverse-Wishart-like prior
    int kmeans_iterations = 25;
};

/// EM fit of a full-covariance GMM over [inputs, outputs] stacked column-wise.
GmmModel fit_gmm(const std::vector<Demonstration>& demos, int n_components, std::uint64_t seed,
                 const GmmFitOptions& options = {});
GmmModel fit_gmm_data(const Eigen::MatrixXd& data, int input_dim, int n_components,
                      std::uint64_t seed, const GmmFitOptions& options = {});

struct GmrResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd weights;  //!< conditional mixture weights h_k(query)
};

GmrResult gmr_condition(const GmmModel& model, const Eigen::VectorXd& query);

struct ReferenceTrajectory {
    std::vector<double> inputs;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;

    int size() const { return static_cast<int>(inputs.size()); }
    int output_dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
    void validate() const;
};

ReferenceTrajectory build_reference(const GmmModel& model, const std::vector<double>& query_grid);

/// Shifts the reference so it starts at input 0, drops any point closer than
/// half a grid step to 0 and prepends (0, via_mean, via_covariance).
ReferenceTrajectory insert_via_point(const ReferenceTrajectory& ref, const Eigen::VectorXd& via_mean,
                                     const Eigen::MatrixXd& via_covariance);

/// Via point built from a catch point: translational [x_c; ẋ_c] for O = 6,
/// full [x_c; ẋ_c] for O = 12.
ReferenceTrajectory insert_via_point(const ReferenceTrajectory& ref, const CatchPoint& catch_point,
                                     const Eigen::MatrixXd& via_covariance);

/// Adds `offset` to the first offset.size() entries of every reference mean.
ReferenceTrajectory translate_reference(const ReferenceTrajectory& ref, const Eigen::VectorXd& offset);

struct KmpParams {
    double bandwidth = 0.0;  //!< 0 selects 0.1 × input range
    double lambda1 = 1.0;
    double lambda2 = 10.0;
};

/// Squared-exponential kernel exp(−(a−b)²/(2h²)).
double se_kernel(double a, double b, double h);

class KmpModel {
public:
    KmpModel(ReferenceTrajectory reference, const KmpParams& params = {});

    Eigen::VectorXd predict_mean(double s) const;
    Eigen::MatrixXd predict_covariance(double s) const;

    const ReferenceTrajectory& reference() const { return reference_; }
    double bandwidth() const { return bandwidth_; }
    const KmpParams& params() const { return params_; }
    double input_min() const { return reference_.inputs.front(); }
    double input_max() const { return reference_.inputs.back(); }

    /// Scalar Gram matrix k(s_i, s_j) (N × N).
    Eigen::MatrixXd gram() const;

private:
    Eigen::RowVectorXd kernel_row(double s) const;

    ReferenceTrajectory reference_;
    KmpParams params_;
    double bandwidth_ = 0.0;
    Eigen::MatrixXd alpha_;  //!< (K + λ1Σ)⁻¹μ reshaped N × O
    Eigen::LLT<Eigen::MatrixXd> cov_factor_;
};

inline Eigen::VectorXd kmp_predict_mean(const KmpModel& m, double s) { return m.predict_mean(s); }
inline Eigen::MatrixXd kmp_predict_covariance(const KmpModel& m, double s) {
    return m.predict_covariance(s);
}

/// Synthetic catching demonstrations: quintic descent from the touch point
/// that settles at the catch depth, plus a paired stiffness profile.
struct DemoGenConfig {
    int count = 4;
    int samples = 121;
    double duration = 0.6;
    double depth = 0.15;
    double initial_velocity = -1.0;
    double initial_acceleration = -22.3;
    double noise = 0.05;

    // stiffness shape along the normalised phase u = displacement / depth
    double k_plateau = 700.0;
    double k_valley = 250.0;
    double k_end = 800.0;
    double valley_phase = 0.3;
    Eigen::Matrix3d stiffness_shape = (Eigen::Matrix3d() << 0.9, 0.0, 0.05, 0.0, 0.9, 0.0, 0.05, 0.0, 1.0).finished();
};

struct DemoSet {
    std::vector<Demonstration> trajectories;  //!< input time, outputs [p; v] (relative positions)
    std::vector<Demonstration> stiffness;     //!< input phase, outputs packed Cholesky factor
};

DemoSet generate_synthetic_demos(const DemoGenConfig& config, std::uint64_t seed);

/// Noise-free generator curves, used as the reference for learned models.
double generator_stiffness(const DemoGenConfig& config, double phase);
std::pair<double, double> generator_trajectory(const DemoGenConfig& config, double t);

void write_demo_csv(std::ostream& os, const Demonstration& demo);
Demonstration read_demo_csv(std::istream& is);

void write_gmm(std::ostream& os, const GmmModel& model);
GmmModel read_gmm(std::istream& is);

}  // namespace catching
