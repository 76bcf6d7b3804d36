#include <cmath>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "catching/errors.hpp"
#include "catching/scenario.hpp"

namespace py = pybind11;
using namespace catching;

namespace {

CartesianState make_state(const Eigen::Vector3d& p, const Eigen::Vector3d& v) {
    CartesianState s;
    s.position = p;
    s.linear_velocity = v;
    return s;
}

ScenarioConfig config_from_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is, "<python>");
}

/// Trace columns as a dict of numpy-friendly arrays.
py::dict trace_dict(const SimTrace& trace) {
    const Eigen::Index n = static_cast<Eigen::Index>(trace.size());
    Eigen::VectorXd t(n), kz(n), oz(n), work(n);
    Eigen::MatrixXd pos(n, 3), vel(n, 3), force(n, 3);
    Eigen::VectorXi phase(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const TraceRow& r = trace[static_cast<std::size_t>(i)];
        t[i] = r.t;
        kz[i] = r.k_z;
        oz[i] = r.object_z;
        work[i] = r.contact_work;
        pos.row(i) = r.position.transpose();
        vel.row(i) = r.velocity.transpose();
        force.row(i) = r.force.transpose();
        phase[i] = static_cast<int>(r.phase);
    }
    py::dict d;
    d["t"] = t;
    d["position"] = pos;
    d["velocity"] = vel;
    d["force"] = force;
    d["k_z"] = kz;
    d["phase"] = phase;
    d["object_z"] = oz;
    d["contact_work"] = work;
    return d;
}

py::dict report_dict(const MetricsReport& r) {
    py::dict d;
    d["loi"] = r.loi;
    d["dri"] = r.dri;
    d["bti"] = r.bti;
    d["energy"] = r.energy;
    d["f_max"] = r.f_max;
    d["steady"] = r.steady;
    return d;
}

const char* stop_name(StopReason s) {
    switch (s) {
        case StopReason::AtRest: return "at-rest";
        case StopReason::Timeout: return "timeout";
        case StopReason::SafetyStop: return "safety-stop";
    }
    return "unknown";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Catching simulator: interception planner, demonstration learning, stiffness, contact simulation and metrics";

    py::register_exception<Error>(m, "CatchingError", PyExc_RuntimeError);

    // impact
    m.def(
        "compute_impulse",
        [](const Eigen::Vector3d& robot_velocity, const Eigen::Vector3d& object_velocity,
           double translational_inertia, double rotational_inertia, double object_mass,
           double restitution) {
            ImpactParams p;
            p.object_mass = object_mass;
            p.restitution_e = restitution;
            const ImpactOutcome out =
                compute_impulse(make_state({0, 0, 0}, robot_velocity), make_state({0, 0, 0}, object_velocity),
                                EffectiveInertia::diagonal(translational_inertia, rotational_inertia), p);
            return py::make_tuple(out.impulse, out.robot_velocity_after, out.object_velocity_after);
        },
        py::arg("robot_velocity"), py::arg("object_velocity"), py::arg("translational_inertia") = 3.0,
        py::arg("rotational_inertia") = 0.3, py::arg("object_mass") = 0.5, py::arg("restitution") = 0.0,
        "Returns (impulse, robot twist after, object twist after).");
    m.def(
        "free_fall_velocity",
        [](double drop, double gravity) {
            const double t = std::sqrt(2.0 * drop / gravity);
            const auto states = free_fall_predict(CartesianState{}, gravity, t, 1);
            return -states.back().linear_velocity.z();
        },
        py::arg("drop"), py::arg("gravity") = 9.81, "Speed reached after falling `drop` metres.");

    // QP planner
    py::class_<QpProblem>(m, "QpProblem")
        .def(py::init<>())
        .def_readwrite("steps", &QpProblem::steps)
        .def_readwrite("dt", &QpProblem::dt)
        .def_readwrite("hessian_diag", &QpProblem::hessian_diag)
        .def_readwrite("linear", &QpProblem::linear)
        .def_readwrite("lower", &QpProblem::lower)
        .def_readwrite("upper", &QpProblem::upper)
        .def_readwrite("constant", &QpProblem::constant)
        .def_readwrite("base_positions", &QpProblem::base_positions)
        .def("objective", &QpProblem::objective);
    m.def(
        "solve_qp_clamp", [](const QpProblem& p) { return solve_qp_clamp(p).v; },
        "Closed-form minimizer of a box-constrained diagonal QP.");
    m.def(
        "solve_qp_iterative",
        [](const QpProblem& p, double tol) { return solve_qp_projected_gradient(p, tol).v; },
        py::arg("problem"), py::arg("tol") = 1e-13);
    m.def("kkt_residual", &kkt_residual);

    // learning from demonstration
    py::class_<KmpParams>(m, "KmpParams")
        .def(py::init<>())
        .def_readwrite("bandwidth", &KmpParams::bandwidth)
        .def_readwrite("lambda1", &KmpParams::lambda1)
        .def_readwrite("lambda2", &KmpParams::lambda2);
    py::class_<KmpModel>(m, "KmpModel")
        .def(py::init([](const std::vector<double>& inputs, const std::vector<Eigen::VectorXd>& means,
                         const std::vector<Eigen::MatrixXd>& covariances, const KmpParams& params) {
                 ReferenceTrajectory ref{inputs, means, covariances};
                 return KmpModel(std::move(ref), params);
             }),
             py::arg("inputs"), py::arg("means"), py::arg("covariances"), py::arg("params") = KmpParams{})
        .def("predict_mean", &KmpModel::predict_mean)
        .def("predict_covariance", &KmpModel::predict_covariance)
        .def_property_readonly("bandwidth", &KmpModel::bandwidth);

    // stiffness
    m.def(
        "estimate_stiffness",
        [](const Eigen::Vector3d& shoulder, const Eigen::Vector3d& elbow, const Eigen::Vector3d& hand,
           double activation) {
            ArmConfiguration arm{shoulder, elbow, hand};
            return estimate_stiffness(arm, StiffnessModelParams{}, activation).k;
        },
        py::arg("shoulder"), py::arg("elbow"), py::arg("hand"), py::arg("activation"));
    m.def("activation_gain", [](double p) { return activation_gain(StiffnessModelParams{}, p); });
    m.def("cholesky_encode", [](const Eigen::Matrix3d& k) { return Eigen::VectorXd(cholesky_encode({k})); });
    m.def("cholesky_decode", [](const Eigen::Matrix<double, 6, 1>& v) { return cholesky_decode(v).k; });

    // metrics
    m.def("dri_from_ratio", &dri_from_ratio);

    // scenarios
    m.def(
        "default_config", [] { return print_config(ScenarioConfig{}); },
        "Canonical text of the default scenario.");
    m.def(
        "config_hash", [](const std::string& text) { return config_hash(config_from_text(text)); },
        py::arg("config_text") = "");
    m.def(
        "run",
        [](const std::string& mode, double drop, const std::string& config_text) {
            ScenarioConfig c = config_from_text(config_text);
            c.sim.mode = parse_mode(mode);
            c.sim.drop_height = drop;
            const ExperimentResult r = run_experiment(c);
            py::dict d;
            d["metrics"] = report_dict(r.metrics);
            d["trace"] = trace_dict(r.sim.trace);
            d["stop"] = stop_name(r.sim.stop);
            d["config_hash"] = r.hash;
            return d;
        },
        py::arg("mode") = "VM-VIC", py::arg("drop") = 0.27, py::arg("config_text") = "",
        "Runs one experiment and returns metrics, trace arrays and stop reason.");
}
