#include "catching/lfd.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "catching/errors.hpp"
#include "catching/stiffness.hpp"

namespace catching {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

struct GaussianEval {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_norm = 0.0;

    explicit GaussianEval(const Eigen::MatrixXd& cov) : llt(cov) {
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance is not SPD");
        const Eigen::MatrixXd l = llt.matrixL();
        log_norm = -0.5 * cov.rows() * kLog2Pi - l.diagonal().array().log().sum();
    }
    double log_pdf(const Eigen::VectorXd& diff) const {
        const Eigen::VectorXd z = llt.matrixL().solve(diff);
        return log_norm - 0.5 * z.squaredNorm();
    }
};

Eigen::MatrixXd stack_demos(const std::vector<Demonstration>& demos) {
    if (demos.empty()) throw InvalidArgument("at least one demonstration is required");
    const int din = static_cast<int>(demos.front().inputs.cols());
    const int dout = static_cast<int>(demos.front().outputs.cols());
    int n = 0;
    for (const auto& d : demos) {
        d.validate(false);
        if (d.inputs.cols() != din || d.outputs.cols() != dout)
            throw DimensionMismatch("demonstrations differ in dimension");
        n += d.samples();
    }
    Eigen::MatrixXd data(n, din + dout);
    int row = 0;
    for (const auto& d : demos) {
        data.block(row, 0, d.samples(), din) = d.inputs;
        data.block(row, din, d.samples(), dout) = d.outputs;
        row += d.samples();
    }
    return data;
}

/// k-means++ seeding and a few Lloyd iterations on standardized data.
std::vector<int> kmeans_labels(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng,
                               int iterations) {
    const int n = static_cast<int>(data.rows());
    const Eigen::RowVectorXd mu = data.colwise().mean();
    Eigen::RowVectorXd sd = ((data.rowwise() - mu).array().square().colwise().sum() / n).sqrt();
    for (int j = 0; j < sd.size(); ++j)
        if (sd[j] < 1e-12) sd[j] = 1.0;
    const Eigen::MatrixXd z = (data.rowwise() - mu).array().rowwise() / sd.array();

    std::vector<Eigen::RowVectorXd> centers;
    std::uniform_int_distribution<int> pick(0, n - 1);
    centers.push_back(z.row(pick(rng)));
    Eigen::VectorXd d2(n);
    while (static_cast<int>(centers.size()) < k) {
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, (z.row(i) - c).squaredNorm());
            d2[i] = best;
        }
        const double total = d2.sum();
        int chosen = pick(rng);
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (int i = 0; i < n; ++i) {
                target -= d2[i];
                if (target <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.push_back(z.row(chosen));
    }

    std::vector<int> labels(n, 0);
    for (int it = 0; it < iterations; ++it) {
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (z.row(i) - centers[c]).squaredNorm();
                if (d < best) {
                    best = d;
                    labels[i] = c;
                }
            }
        }
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(z.cols());
            int count = 0;
            for (int i = 0; i < n; ++i)
                if (labels[i] == c) {
                    sum += z.row(i);
                    ++count;
                }
            if (count > 0) centers[c] = sum / count;
        }
    }
    // An empty cluster takes the point farthest from its own center; labels
    // stay a valid partition so the hard M-step never sees a zero weight.
    for (int c = 0; c < k; ++c) {
        if (std::count(labels.begin(), labels.end(), c) > 0) continue;
        int far = -1;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            if (std::count(labels.begin(), labels.end(), labels[i]) < 2) continue;
            const double d = (z.row(i) - centers[labels[i]]).squaredNorm();
            if (d > best) {
                best = d;
                far = i;
            }
        }
        if (far >= 0) labels[far] = c;
    }
    return labels;
}

/// M-step from responsibilities r (n × k).  Returns false if a weight collapsed.
bool m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& r, double rho, GmmModel& m) {
    const int n = static_cast<int>(data.rows());
    const int d = static_cast<int>(data.cols());
    const int k = static_cast<int>(r.cols());
    m.priors.resize(k);
    m.means.assign(k, Eigen::VectorXd::Zero(d));
    m.covariances.assign(k, Eigen::MatrixXd::Identity(d, d));
    bool ok = true;
    for (int c = 0; c < k; ++c) {
        const double nk = r.col(c).sum();
        m.priors[c] = nk / n;
        if (m.priors[c] < 1e-6) {
            ok = false;
            continue;
        }
        m.means[c] = (data.transpose() * r.col(c)) / nk;
        const Eigen::MatrixXd centered = data.rowwise() - m.means[c].transpose();
        Eigen::MatrixXd s = centered.transpose() * r.col(c).asDiagonal() * centered;
        s += rho * Eigen::MatrixXd::Identity(d, d);
        m.covariances[c] = 0.5 * (s + s.transpose()) / nk;
    }
    return ok;
}

/// E-step; returns the log-likelihood of the data under m.
double e_step(const Eigen::MatrixXd& data, const GmmModel& m, Eigen::MatrixXd& r) {
    const int n = static_cast<int>(data.rows());
    const int k = m.components();
    std::vector<GaussianEval> evals;
    evals.reserve(k);
    for (int c = 0; c < k; ++c) evals.emplace_back(m.covariances[c]);
    r.resize(n, k);
    double ll = 0.0;
    Eigen::VectorXd lp(k);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c)
            lp[c] = std::log(m.priors[c]) + evals[c].log_pdf(data.row(i).transpose() - m.means[c]);
        const double lse = log_sum_exp(lp);
        r.row(i) = (lp.array() - lse).exp().transpose();
        ll += lse;
    }
    return ll;
}

double prior_penalty(const GmmModel& m, double rho) {
    double p = 0.0;
    for (const auto& cov : m.covariances) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        p += llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols())).trace();
    }
    return -0.5 * rho * p;
}

GmmModel fit_once(const Eigen::MatrixXd& data, int input_dim, int k, std::uint64_t seed,
                  const GmmFitOptions& opt, bool& degenerate) {
    const int n = static_cast<int>(data.rows());
    const double rho = opt.regularization * static_cast<double>(n) / k;
    std::mt19937_64 rng(seed);
    const std::vector<int> labels = kmeans_labels(data, k, rng, opt.kmeans_iterations);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, k);
    for (int i = 0; i < n; ++i) r(i, labels[i]) = 1.0;

    GmmModel m;
    m.input_dim = input_dim;
    degenerate = !m_step(data, r, rho, m);
    if (degenerate) return m;

    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iterations; ++it) {
        const double ll = e_step(data, m, r);
        const double objective = ll + prior_penalty(m, rho);
        m.fit_history.push_back(objective);
        if (objective - prev < opt.tolerance) break;
        prev = objective;
        if (!m_step(data, r, rho, m)) {
            degenerate = true;
            return m;
        }
    }
    return m;
}

}  // namespace

void Demonstration::validate(bool temporal) const {
    if (inputs.rows() != outputs.rows()) throw DimensionMismatch("inputs and outputs differ in length");
    if (inputs.rows() < 2) throw InvalidArgument("a demonstration needs at least two samples");
    if (temporal && inputs.cols() == 1)
        for (Eigen::Index i = 1; i < inputs.rows(); ++i)
            if (!(inputs(i, 0) > inputs(i - 1, 0)))
                throw InvalidArgument("temporal inputs must be strictly increasing");
}

void GmmModel::validate() const {
    const int k = components();
    if (k == 0 || static_cast<int>(means.size()) != k || static_cast<int>(covariances.size()) != k)
        throw DimensionMismatch("GMM parameter counts disagree");
    if (std::abs(priors.sum() - 1.0) > 1e-9) throw InvalidArgument("GMM priors must sum to 1");
    for (const auto& c : covariances) {
        if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9)
            throw NotPositiveDefinite("GMM covariance is not symmetric");
        if (Eigen::LLT<Eigen::MatrixXd>(c).info() != Eigen::Success)
            throw NotPositiveDefinite("GMM covariance is not positive definite");
    }
}

double GmmModel::log_likelihood(const Eigen::MatrixXd& data) const {
    Eigen::MatrixXd r;
    return e_step(data, *this, r);
}

GmmModel fit_gmm_data(const Eigen::MatrixXd& data, int input_dim, int n_components,
                      std::uint64_t seed, const GmmFitOptions& options) {
    if (n_components < 1) throw InvalidArgument("need at least one component");
    if (data.rows() < 10 * n_components)
        throw InvalidArgument("need at least 10 samples per component");
    bool degenerate = false;
    GmmModel m = fit_once(data, input_dim, n_components, seed, options, degenerate);
    if (degenerate) {
        m = fit_once(data, input_dim, n_components, seed ^ 0x9e3779b97f4a7c15ULL, options, degenerate);
        if (degenerate) throw DegenerateComponent("a component weight fell below 1e-6 after reseeding");
    }
    return m;
}

GmmModel fit_gmm(const std::vector<Demonstration>& demos, int n_components, std::uint64_t seed,
                 const GmmFitOptions& options) {
    return fit_gmm_data(stack_demos(demos), static_cast<int>(demos.front().inputs.cols()),
                        n_components, seed, options);
}

GmrResult gmr_condition(const GmmModel& model, const Eigen::VectorXd& query) {
    const int di = model.input_dim;
    const int d = model.dim();
    const int dout = d - di;
    const int k = model.components();
    if (query.size() != di) throw DimensionMismatch("query dimension differs from model input");

    std::vector<Eigen::VectorXd> cond_mean(k);
    std::vector<Eigen::MatrixXd> cond_cov(k);
    Eigen::VectorXd logw(k);
    for (int c = 0; c < k; ++c) {
        const Eigen::MatrixXd& s = model.covariances[c];
        const Eigen::MatrixXd sii = s.topLeftCorner(di, di);
        const Eigen::MatrixXd soi = s.bottomLeftCorner(dout, di);
        const GaussianEval g(sii);
        const Eigen::VectorXd diff = query - model.means[c].head(di);
        logw[c] = std::log(model.priors[c]) + g.log_pdf(diff);
        cond_mean[c] = model.means[c].tail(dout) + soi * g.llt.solve(diff);
        cond_cov[c] = s.bottomRightCorner(dout, dout) - soi * g.llt.solve(soi.transpose());
    }
    GmrResult r;
    r.weights = (logw.array() - log_sum_exp(logw)).exp();
    r.mean = Eigen::VectorXd::Zero(dout);
    for (int c = 0; c < k; ++c) r.mean += r.weights[c] * cond_mean[c];
    r.covariance = Eigen::MatrixXd::Zero(dout, dout);
    for (int c = 0; c < k; ++c) {
        const Eigen::VectorXd dm = cond_mean[c] - r.mean;
        r.covariance += r.weights[c] * (cond_cov[c] + dm * dm.transpose());
    }
    r.covariance = 0.5 * (r.covariance + r.covariance.transpose());
    return r;
}

void ReferenceTrajectory::validate() const {
    if (inputs.empty() || means.size() != inputs.size() || covariances.size() != inputs.size())
        throw DimensionMismatch("reference trajectory sizes disagree");
    for (std::size_t i = 1; i < inputs.size(); ++i)
        if (!(inputs[i] > inputs[i - 1])) throw InvalidArgument("reference inputs must be sorted");
    const int o = output_dim();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (means[i].size() != o || covariances[i].rows() != o || covariances[i].cols() != o)
            throw DimensionMismatch("reference point has the wrong output dimension");
        if (Eigen::LLT<Eigen::MatrixXd>(covariances[i]).info() != Eigen::Success)
            throw NotPositiveDefinite("reference covariance is not SPD");
    }
}

ReferenceTrajectory build_reference(const GmmModel& model, const std::vector<double>& query_grid) {
    ReferenceTrajectory ref;
    for (double q : query_grid) {
        const GmrResult g = gmr_condition(model, Eigen::VectorXd::Constant(1, q));
        ref.inputs.push_back(q);
        ref.means.push_back(g.mean);
        ref.covariances.push_back(g.covariance);
    }
    return ref;
}

ReferenceTrajectory insert_via_point(const ReferenceTrajectory& ref, const Eigen::VectorXd& via_mean,
                                     const Eigen::MatrixXd& via_covariance) {
    if (ref.inputs.empty()) throw InvalidArgument("empty reference");
    const int o = ref.output_dim();
    if (via_mean.size() != o || via_covariance.rows() != o || via_covariance.cols() != o)
        throw DimensionMismatch("via point dimension differs from the reference output");
    const double origin = ref.inputs.front();
    const double step = ref.size() > 1 ? ref.inputs[1] - ref.inputs[0] : 1.0;

    ReferenceTrajectory out;
    out.inputs.push_back(0.0);
    out.means.push_back(via_mean);
    out.covariances.push_back(via_covariance);
    for (int i = 0; i < ref.size(); ++i) {
        const double s = ref.inputs[i] - origin;
        if (s < 0.5 * step) continue;
        out.inputs.push_back(s);
        out.means.push_back(ref.means[i]);
        out.covariances.push_back(ref.covariances[i]);
    }
    return out;
}

ReferenceTrajectory insert_via_point(const ReferenceTrajectory& ref, const CatchPoint& c,
                                     const Eigen::MatrixXd& via_covariance) {
    const int o = ref.output_dim();
    Eigen::VectorXd mean(o);
    if (o == 6) {
        mean << c.x_c.head<3>(), c.xdot_c.head<3>();
    } else if (o == 12) {
        mean << c.x_c, c.xdot_c;
    } else {
        throw DimensionMismatch("catch point via insertion needs 6 or 12 outputs");
    }
    return insert_via_point(ref, mean, via_covariance);
}

ReferenceTrajectory translate_reference(const ReferenceTrajectory& ref, const Eigen::VectorXd& offset) {
    ReferenceTrajectory out = ref;
    for (auto& m : out.means) m.head(offset.size()) += offset;
    return out;
}

double se_kernel(double a, double b, double h) {
    const double d = a - b;
    return std::exp(-d * d / (2.0 * h * h));
}

KmpModel::KmpModel(ReferenceTrajectory reference, const KmpParams& params)
    : reference_(std::move(reference)), params_(params) {
    reference_.validate();
    if (!(params_.lambda1 > 0.0) || !(params_.lambda2 > 0.0))
        throw InvalidArgument("KMP regularizers must be positive");
    bandwidth_ = params_.bandwidth;
    if (!(bandwidth_ > 0.0)) {
        const double range = reference_.inputs.back() - reference_.inputs.front();
        bandwidth_ = range > 0.0 ? 0.1 * range : 1.0;
    }

    const int n = reference_.size();
    const int o = reference_.output_dim();
    const Eigen::MatrixXd k = gram();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * o, n * o);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n * o, n * o);
    Eigen::VectorXd mu(n * o);
    for (int i = 0; i < n; ++i) {
        mu.segment(i * o, o) = reference_.means[i];
        sigma.block(i * o, i * o, o, o) = reference_.covariances[i];
        for (int j = 0; j < n; ++j) big.block(i * o, j * o, o, o).diagonal().setConstant(k(i, j));
    }

    Eigen::LLT<Eigen::MatrixXd> mean_factor(big + params_.lambda1 * sigma);
    if (mean_factor.info() != Eigen::Success)
        throw SingularSystem("K + lambda1*Sigma is not positive definite");
    const Eigen::VectorXd a = mean_factor.solve(mu);
    alpha_.resize(n, o);
    for (int i = 0; i < n; ++i) alpha_.row(i) = a.segment(i * o, o).transpose();

    cov_factor_.compute(big + params_.lambda2 * sigma);
    if (cov_factor_.info() != Eigen::Success)
        throw SingularSystem("K + lambda2*Sigma is not positive definite");
}

Eigen::MatrixXd KmpModel::gram() const {
    const int n = reference_.size();
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = se_kernel(reference_.inputs[i], reference_.inputs[j], bandwidth_);
    return k;
}

Eigen::RowVectorXd KmpModel::kernel_row(double s) const {
    Eigen::RowVectorXd row(reference_.size());
    for (int i = 0; i < reference_.size(); ++i) row[i] = se_kernel(s, reference_.inputs[i], bandwidth_);
    return row;
}

Eigen::VectorXd KmpModel::predict_mean(double s) const {
    return (kernel_row(s) * alpha_).transpose();
}

Eigen::MatrixXd KmpModel::predict_covariance(double s) const {
    const int n = reference_.size();
    const int o = reference_.output_dim();
    const Eigen::RowVectorXd kr = kernel_row(s);
    Eigen::MatrixXd kstar_t = Eigen::MatrixXd::Zero(n * o, o);
    for (int i = 0; i < n; ++i) kstar_t.block(i * o, 0, o, o).diagonal().setConstant(kr[i]);
    const Eigen::MatrixXd reduction = kstar_t.transpose() * cov_factor_.solve(kstar_t);
    Eigen::MatrixXd cov = (static_cast<double>(n) / params_.lambda2) *
                          (se_kernel(s, s, bandwidth_) * Eigen::MatrixXd::Identity(o, o) - reduction);
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw NotPositiveDefinite("KMP covariance has a negative eigenvalue");
    return cov;
}

double generator_stiffness(const DemoGenConfig& c, double phase) {
    auto smooth = [](double x) {
        x = std::clamp(x, 0.0, 1.0);
        return x * x * (3.0 - 2.0 * x);
    };
    const double u = c.depth > 0.0 ? phase / c.depth : 0.0;
    if (u < c.valley_phase)
        return c.k_valley + (c.k_plateau - c.k_valley) * smooth((c.valley_phase - u) / c.valley_phase);
    return c.k_valley + (c.k_end - c.k_valley) * smooth((u - c.valley_phase) / (1.0 - c.valley_phase));
}

namespace {
/// Quintic with p(0)=0, v(0)=v0, a(0)=a0, p(T)=−D, v(T)=a(T)=0.
struct Quintic {
    double v0, a0, c3, c4, c5, duration, depth;

    Quintic(double v0_, double a0_, double depth_, double t_end)
        : v0(v0_), a0(a0_), duration(t_end), depth(depth_) {
        const double t = t_end;
        Eigen::Matrix3d a;
        a << std::pow(t, 3), std::pow(t, 4), std::pow(t, 5), 3 * t * t, 4 * std::pow(t, 3),
            5 * std::pow(t, 4), 6 * t, 12 * t * t, 20 * std::pow(t, 3);
        const Eigen::Vector3d b(-depth - v0 * t - 0.5 * a0 * t * t, -v0 - a0 * t, -a0);
        const Eigen::Vector3d c = a.partialPivLu().solve(b);
        c3 = c[0];
        c4 = c[1];
        c5 = c[2];
    }
    std::pair<double, double> operator()(double t) const {
        if (t >= duration) return {-depth, 0.0};
        t = std::max(t, 0.0);
        const double p = v0 * t + 0.5 * a0 * t * t + c3 * t * t * t + c4 * std::pow(t, 4) + c5 * std::pow(t, 5);
        const double v = v0 + a0 * t + 3 * c3 * t * t + 4 * c4 * t * t * t + 5 * c5 * std::pow(t, 4);
        return {p, v};
    }
};
}  // namespace

std::pair<double, double> generator_trajectory(const DemoGenConfig& c, double t) {
    return Quintic(c.initial_velocity, c.initial_acceleration, c.depth, c.duration)(t);
}

DemoSet generate_synthetic_demos(const DemoGenConfig& config, std::uint64_t seed) {
    if (config.count < 1 || config.samples < 2) throw InvalidArgument("demo count and samples must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double nz = config.noise;

    DemoSet out;
    for (int d = 0; d < config.count; ++d) {
        DemoGenConfig c = config;
        c.depth *= 1.0 + nz * gauss(rng);
        c.duration *= 1.0 + nz * gauss(rng);
        c.initial_velocity *= 1.0 + nz * gauss(rng);
        c.initial_acceleration *= 1.0 + nz * gauss(rng);
        const double k_gain = 1.0 + nz * gauss(rng);
        const Quintic q(c.initial_velocity, c.initial_acceleration, c.depth, c.duration);

        Demonstration traj;
        traj.inputs.resize(config.samples, 1);
        traj.outputs.resize(config.samples, 6);
        Demonstration stiff;
        stiff.inputs.resize(config.samples, 1);
        stiff.outputs.resize(config.samples, 6);
        for (int i = 0; i < config.samples; ++i) {
            const double t = config.duration * i / (config.samples - 1);
            auto [p, v] = q(t);
            traj.inputs(i, 0) = t;
            traj.outputs.row(i) << nz * 1e-2 * gauss(rng), nz * 1e-2 * gauss(rng),
                p + nz * 1e-2 * gauss(rng), nz * 1e-1 * gauss(rng), nz * 1e-1 * gauss(rng),
                v + nz * 1e-1 * gauss(rng);

            const double phase = std::max(0.0, -p);
            const double k = k_gain * generator_stiffness(c, phase);
            stiff.inputs(i, 0) = phase;
            // sensor noise on the factor keeps the encoded samples full rank
            CholeskyVector packed = cholesky_encode(StiffnessMatrix{k * config.stiffness_shape});
            for (int j = 0; j < 6; ++j) packed[j] += nz * 1e-1 * gauss(rng);
            stiff.outputs.row(i) = packed.transpose();
        }
        out.trajectories.push_back(std::move(traj));
        out.stiffness.push_back(std::move(stiff));
    }
    return out;
}

void write_demo_csv(std::ostream& os, const Demonstration& demo) {
    os << std::setprecision(17) << "input";
    for (Eigen::Index j = 0; j < demo.outputs.cols(); ++j) os << ",dim_" << j;
    os << "\n";
    for (int i = 0; i < demo.samples(); ++i) {
        os << demo.inputs(i, 0);
        for (Eigen::Index j = 0; j < demo.outputs.cols(); ++j) os << "," << demo.outputs(i, j);
        os << "\n";
    }
}

Demonstration read_demo_csv(std::istream& is) {
    std::string line;
    int lineno = 1;
    while (std::getline(is, line) && line.rfind('#', 0) == 0) ++lineno;  // provenance comments
    if (!is || line.rfind("input", 0) != 0)
        throw ParseError("demonstration CSV must start with an 'input,dim_0,...' header");
    const long cols = std::count(line.begin(), line.end(), ',');
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (static_cast<long>(row.size()) != cols + 1)
            throw ParseError("line " + std::to_string(lineno) + ": wrong column count");
        rows.push_back(std::move(row));
    }
    Demonstration d;
    d.inputs.resize(static_cast<Eigen::Index>(rows.size()), 1);
    d.outputs.resize(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.inputs(i, 0) = rows[i][0];
        for (long j = 0; j < cols; ++j) d.outputs(i, j) = rows[i][j + 1];
    }
    return d;
}

void write_gmm(std::ostream& os, const GmmModel& m) {
    os << "# gmm v1\n" << std::setprecision(17);
    os << "components " << m.components() << "\ndim " << m.dim() << "\ninput_dim " << m.input_dim << "\n";
    os << "priors\n";
    for (int c = 0; c < m.components(); ++c) os << m.priors[c] << (c + 1 < m.components() ? " " : "\n");
    os << "means\n";
    for (const auto& mu : m.means) {
        for (int j = 0; j < mu.size(); ++j) os << mu[j] << (j + 1 < mu.size() ? " " : "\n");
    }
    os << "covariances\n";
    for (const auto& s : m.covariances) {
        for (int i = 0; i < s.rows(); ++i)
            for (int j = 0; j < s.cols(); ++j) os << s(i, j) << (j + 1 < s.cols() ? " " : "\n");
    }
}

GmmModel read_gmm(std::istream& is) {
    std::string line;
    while (std::getline(is, line) && line.rfind("# config_hash=", 0) == 0) {
    }
    if (line != "# gmm v1") throw ParseError("unsupported GMM header '" + line + "'");
    auto field = [&](const std::string& name) {
        std::string tag;
        int v = 0;
        if (!(is >> tag >> v) || tag != name) throw ParseError("expected field '" + name + "'");
        return v;
    };
    auto section = [&](const std::string& name) {
        std::string tag;
        if (!(is >> tag) || tag != name) throw ParseError("expected section '" + name + "'");
    };
    auto num = [&]() {
        double v = 0.0;
        if (!(is >> v)) throw ParseError("truncated GMM file");
        return v;
    };
    GmmModel m;
    const int k = field("components");
    const int d = field("dim");
    m.input_dim = field("input_dim");
    section("priors");
    m.priors.resize(k);
    for (int c = 0; c < k; ++c) m.priors[c] = num();
    section("means");
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd mu(d);
        for (int j = 0; j < d; ++j) mu[j] = num();
        m.means.push_back(mu);
    }
    section("covariances");
    for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd s(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s(i, j) = num();
        m.covariances.push_back(s);
    }
    m.validate();
    return m;
}

}  // namespace catching
