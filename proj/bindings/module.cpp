#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mirrorsym/analysis.hpp"
#include "mirrorsym/data.hpp"
#include "mirrorsym/dcs.hpp"
#include "mirrorsym/experiment.hpp"
#include "mirrorsym/finite_diff.hpp"
#include "mirrorsym/linalg.hpp"
#include "mirrorsym/matrix.hpp"
#include "mirrorsym/mirror.hpp"
#include "mirrorsym/models.hpp"
#include "mirrorsym/optimize.hpp"
#include "mirrorsym/param.hpp"
#include "mirrorsym/rng.hpp"

namespace py = pybind11;
using namespace mirrorsym;

namespace {

// Factories hand out shared_ptr<const PerSampleLoss>; the python holder is
// the mutable form. Safe because the class only exposes const operations.
std::shared_ptr<PerSampleLoss> unconst(ModelPtr p) {
    return std::const_pointer_cast<PerSampleLoss>(std::move(p));
}

void check_index(const Matrix& a, std::size_t i, std::size_t j) {
    if (i >= a.rows() || j >= a.cols()) throw py::index_error("matrix index out of range");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "gradient dynamics toolkit for losses with mirror symmetries";

    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<Matrix>(m, "Matrix")
        .def(py::init<std::size_t, std::size_t>(), py::arg("rows"), py::arg("cols"))
        .def_property_readonly("rows", &Matrix::rows)
        .def_property_readonly("cols", &Matrix::cols)
        .def("__getitem__",
             [](const Matrix& a, std::pair<std::size_t, std::size_t> ij) {
                 check_index(a, ij.first, ij.second);
                 return a(ij.first, ij.second);
             })
        .def("__setitem__",
             [](Matrix& a, std::pair<std::size_t, std::size_t> ij, double v) {
                 check_index(a, ij.first, ij.second);
                 a(ij.first, ij.second) = v;
             })
        .def("col", &Matrix::col, py::arg("j"))
        .def("to_rows",
             [](const Matrix& a) {
                 std::vector<std::vector<double>> rows(a.rows(),
                                                       std::vector<double>(a.cols()));
                 for (std::size_t i = 0; i < a.rows(); ++i)
                     for (std::size_t j = 0; j < a.cols(); ++j) rows[i][j] = a(i, j);
                 return rows;
             })
        .def_static("identity", &Matrix::identity, py::arg("n"))
        .def_static("from_rows", [](const std::vector<std::vector<double>>& rows) {
            if (rows.empty()) return Matrix(0, 0);
            Matrix a(rows.size(), rows[0].size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows[0].size())
                    throw py::value_error("rows must have equal length");
                for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
            }
            return a;
        });

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed") = 0,
             py::arg("stream_id") = 0)
        .def("fork", &RngStream::fork, py::arg("key"))
        .def("uniform", [](RngStream& r) { return r.uniform(); })
        .def(
            "uniform", [](RngStream& r, double lo, double hi) { return r.uniform(lo, hi); },
            py::arg("lo"), py::arg("hi"))
        .def("gaussian", [](RngStream& r) { return r.gaussian(); })
        .def(
            "gaussian",
            [](RngStream& r, double mean, double sd) { return r.gaussian(mean, sd); },
            py::arg("mean"), py::arg("sd"))
        .def("index", &RngStream::index, py::arg("n"));

    py::class_<Sample>(m, "Sample")
        .def(py::init<>())
        .def(py::init([](std::vector<double> x, std::vector<double> y) {
                 return Sample{std::move(x), std::move(y)};
             }),
             py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Sample::x)
        .def_readwrite("y", &Sample::y);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("samples", &Dataset::samples)
        .def_readwrite("generator_tag", &Dataset::generator_tag)
        .def_readwrite("seed", &Dataset::seed)
        .def("size", &Dataset::size)
        .def("input_dim", &Dataset::input_dim)
        .def("target_dim", &Dataset::target_dim);

    py::class_<TaskSequence>(m, "TaskSequence")
        .def(py::init<>())
        .def_readwrite("tasks", &TaskSequence::tasks);

    m.def("gen_sparse_regression", &gen_sparse_regression, py::arg("d"), py::arg("n"),
          py::arg("noise_sd"), py::arg("rng"));
    m.def("gen_matfac", &gen_matfac, py::arg("d"), py::arg("n"), py::arg("mu"), py::arg("rng"));
    m.def("gen_continual_tasks", &gen_continual_tasks, py::arg("d"), py::arg("n_per_task"),
          py::arg("tasks"), py::arg("noise_sd"), py::arg("rng"));
    m.def("dataset_to_csv", &dataset_to_csv, py::arg("dataset"));

    py::class_<SampleSource>(m, "SampleSource")
        .def_static("fixed", &SampleSource::fixed, py::arg("dataset"))
        .def_static(
            "sparse_stream",
            [](std::size_t d, double noise_sd) {
                return SampleSource::stream(sparse_regression_draw(d, noise_sd));
            },
            py::arg("d"), py::arg("noise_sd"))
        .def_static(
            "matfac_stream",
            [](std::size_t d, double mu) { return SampleSource::stream(matfac_draw(d, mu)); },
            py::arg("d"), py::arg("mu"))
        .def("is_fixed", &SampleSource::is_fixed)
        .def("dataset", &SampleSource::dataset);

    py::class_<MirrorSymmetry>(m, "MirrorSymmetry")
        .def(py::init<Matrix, std::string>(), py::arg("frame"), py::arg("label") = "")
        .def_property_readonly("dim", &MirrorSymmetry::dim)
        .def_property_readonly("rank", &MirrorSymmetry::rank)
        .def_property_readonly("label",
                               [](const MirrorSymmetry& s) { return s.label(); })
        .def_property_readonly("frame",
                               [](const MirrorSymmetry& s) { return s.frame(); })
        .def("p_matrix", [](const MirrorSymmetry& s) { return s.p_matrix(); })
        .def("r_matrix", [](const MirrorSymmetry& s) { return s.r_matrix(); })
        .def("frame_coords", &MirrorSymmetry::frame_coords, py::arg("w"));

    m.def("make_mirror", &make_mirror, py::arg("columns"), py::arg("label") = "");
    m.def("reflect", &reflect, py::arg("sym"), py::arg("w"));
    m.def("project_symmetric", &project_symmetric, py::arg("sym"), py::arg("w"));
    m.def("mirror_residual", &mirror_residual, py::arg("sym"), py::arg("w"));

    py::class_<SymmetryCheckReport>(m, "SymmetryCheckReport")
        .def_readonly("max_abs_deviation", &SymmetryCheckReport::max_abs_deviation)
        .def_readonly("samples", &SymmetryCheckReport::samples)
        .def_readonly("tolerance", &SymmetryCheckReport::tolerance)
        .def_readonly("passed", &SymmetryCheckReport::pass);
    m.def("verify_loss_symmetry", &verify_loss_symmetry, py::arg("loss"), py::arg("sym"),
          py::arg("samples"), py::arg("rng"), py::arg("tolerance") = 1e-12);

    py::class_<ParamBlock>(m, "ParamBlock")
        .def_readonly("name", &ParamBlock::name)
        .def_readonly("offset", &ParamBlock::offset)
        .def_readonly("length", &ParamBlock::length);

    py::class_<PerSampleLoss, std::shared_ptr<PerSampleLoss>>(m, "PerSampleLoss")
        .def_property_readonly("name",
                               [](const PerSampleLoss& mdl) { return mdl.name(); })
        .def_property_readonly("dim", &PerSampleLoss::dim)
        .def("loss", &PerSampleLoss::loss, py::arg("theta"), py::arg("sample"))
        .def("grad", &PerSampleLoss::grad, py::arg("theta"), py::arg("sample"))
        .def("random_sample", &PerSampleLoss::random_sample, py::arg("rng"))
        .def("mirrors", [](const PerSampleLoss& mdl) { return mdl.mirrors(); })
        .def("unit_ranges", &PerSampleLoss::unit_ranges)
        .def("product_matrix", &PerSampleLoss::product_matrix, py::arg("theta"));

    m.def(
        "linear_regression", [](std::size_t d) { return unconst(linear_regression(d)); },
        py::arg("dim"));
    m.def(
        "hadamard_regression", [](std::size_t d) { return unconst(hadamard_regression(d)); },
        py::arg("dim"));
    m.def(
        "matrix_factorization",
        [](std::size_t d, bool residual) { return unconst(matrix_factorization(d, residual)); },
        py::arg("dim"), py::arg("residual") = false);
    m.def(
        "two_layer_tanh", [](std::size_t units) { return unconst(two_layer_tanh(units)); },
        py::arg("units"));
    m.def(
        "permutation_mlp",
        [](std::size_t width, std::size_t in_dim) {
            return unconst(permutation_mlp(width, in_dim));
        },
        py::arg("width"), py::arg("in_dim"));
    m.def("footnote_quadratic", [] { return unconst(footnote_quadratic()); });

    py::class_<NoRemoval>(m, "NoRemoval").def(py::init<>());
    py::class_<RandomBias>(m, "RandomBias")
        .def(py::init([](double scale) { return RandomBias{scale}; }), py::arg("scale"))
        .def_readwrite("scale", &RandomBias::scale);
    m.def(
        "apply_symmetry_removal",
        [](std::shared_ptr<PerSampleLoss> base, const SymmetryRemoval& kind, RngStream& rng) {
            return unconst(apply_symmetry_removal(std::move(base), kind, rng));
        },
        py::arg("base"), py::arg("kind"), py::arg("rng"));

    m.def("mean_loss", &mean_loss, py::arg("model"), py::arg("theta"), py::arg("samples"));
    m.def("mean_grad", &mean_grad, py::arg("model"), py::arg("theta"), py::arg("samples"));

    py::class_<Derivatives>(m, "Derivatives")
        .def_readonly("gradient", &Derivatives::gradient)
        .def_readonly("hessian", &Derivatives::hessian);
    m.def("fd_gradient", &fd_gradient, py::arg("f"), py::arg("w"), py::arg("step") = 0.0);
    m.def("finite_diff", &finite_diff, py::arg("f"), py::arg("w"), py::arg("step") = 0.0);

    py::class_<SymEigResult>(m, "SymEigResult")
        .def_readonly("eigenvalues", &SymEigResult::eigenvalues)
        .def_readonly("eigenvectors", &SymEigResult::eigenvectors);
    py::class_<SvdResult>(m, "SvdResult")
        .def_readonly("u", &SvdResult::u)
        .def_readonly("singular_values", &SvdResult::singular_values)
        .def_readonly("v", &SvdResult::v);
    m.def("sym_eig", &sym_eig, py::arg("a"));
    m.def("svd", &svd, py::arg("a"));
    m.def("numerical_rank", &numerical_rank, py::arg("singular_values"), py::arg("rel_tol"));

    py::enum_<Optimizer>(m, "Optimizer")
        .value("GD", Optimizer::GD)
        .value("SGD", Optimizer::SGD)
        .value("ADAPTIVE_NO_MOMENTUM", Optimizer::AdaptiveNoMomentum);
    m.def("optimizer_name", &optimizer_name, py::arg("optimizer"));
    m.def("parse_optimizer", &parse_optimizer, py::arg("name"));

    py::class_<GaussianInit>(m, "GaussianInit")
        .def(py::init([](double scale) { return GaussianInit{scale}; }),
             py::arg("scale") = -1.0)
        .def_readwrite("scale", &GaussianInit::scale);
    py::class_<ExplicitInit>(m, "ExplicitInit")
        .def(py::init([](ParamVector theta0) { return ExplicitInit{std::move(theta0)}; }),
             py::arg("theta0"))
        .def_readwrite("theta0", &ExplicitInit::theta0);

    py::class_<TrainerConfig>(m, "TrainerConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainerConfig::learning_rate)
        .def_readwrite("weight_decay", &TrainerConfig::weight_decay)
        .def_readwrite("batch_size", &TrainerConfig::batch_size)
        .def_readwrite("steps", &TrainerConfig::steps)
        .def_readwrite("optimizer", &TrainerConfig::optimizer)
        .def_readwrite("momentum", &TrainerConfig::momentum)
        .def_readwrite("grad_noise_sd", &TrainerConfig::grad_noise_sd)
        .def_readwrite("seed", &TrainerConfig::seed)
        .def_readwrite("stream_id", &TrainerConfig::stream_id)
        .def_readwrite("fork_key", &TrainerConfig::fork_key)
        .def_readwrite("record_every", &TrainerConfig::record_every)
        .def_readwrite("init", &TrainerConfig::init)
        .def_readwrite("dead_grad_tol", &TrainerConfig::dead_grad_tol);

    py::class_<MetricSpec>(m, "MetricSpec")
        .def(py::init<>())
        .def(
            "add",
            [](MetricSpec& spec, std::string name,
               std::function<double(const ParamVector&)> fn) {
                spec.add(std::move(name), std::move(fn));
            },
            py::arg("name"), py::arg("fn"));
    m.def(
        "mirror_residual_metrics",
        [](std::shared_ptr<PerSampleLoss> model) {
            return mirror_residual_metrics(ModelPtr(std::move(model)));
        },
        py::arg("model"));
    m.def(
        "add_loss_metric",
        [](MetricSpec& spec, std::shared_ptr<PerSampleLoss> model, const Dataset& data) {
            add_loss_metric(spec, ModelPtr(std::move(model)), data);
        },
        py::arg("spec"), py::arg("model"), py::arg("data"));

    py::class_<TrajectoryRow>(m, "TrajectoryRow")
        .def_readonly("step", &TrajectoryRow::step)
        .def_readonly("values", &TrajectoryRow::values);
    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("metric_names", &Trajectory::metric_names)
        .def_readonly("rows", &Trajectory::rows)
        .def_readonly("final_theta", &Trajectory::final_theta)
        .def_readonly("steps_run", &Trajectory::steps_run)
        .def_readonly("diverged", &Trajectory::diverged)
        .def_readonly("final_metrics", &Trajectory::final_metrics);

    m.def("train", &train, py::arg("model"), py::arg("data"), py::arg("config"),
          py::arg("metrics") = MetricSpec{});
    m.def("train_continual", &train_continual, py::arg("model"), py::arg("tasks"),
          py::arg("config"), py::arg("metrics") = MetricSpec{});
    m.def("dead_neuron_count", &dead_neuron_count, py::arg("model"), py::arg("theta"),
          py::arg("data"), py::arg("tol"));

    m.def("regularized_loss", &regularized_loss, py::arg("model"), py::arg("theta"),
          py::arg("samples"), py::arg("gamma"));
    m.def("gamma_threshold", &gamma_threshold, py::arg("model"), py::arg("sym"),
          py::arg("theta"), py::arg("samples"));

    py::class_<HessianReport>(m, "HessianReport")
        .def_readonly("hessian", &HessianReport::hessian)
        .def_readonly("block_residual", &HessianReport::block_residual)
        .def_readonly("eig", &HessianReport::eig);
    m.def("hessian_block_check", &hessian_block_check, py::arg("model"), py::arg("sym"),
          py::arg("theta"), py::arg("sample"));

    py::class_<DiscreteCurvature>(m, "DiscreteCurvature")
        .def(py::init([](std::vector<double> values, std::vector<double> weights) {
                 return DiscreteCurvature{std::move(values), std::move(weights)};
             }),
             py::arg("values"), py::arg("weights"))
        .def_readwrite("values", &DiscreteCurvature::values)
        .def_readwrite("weights", &DiscreteCurvature::weights);
    py::class_<GaussianCurvature>(m, "GaussianCurvature")
        .def(py::init([](double mean, double sd) { return GaussianCurvature{mean, sd}; }),
             py::arg("mean") = 0.0, py::arg("sd") = 1.0)
        .def_readwrite("mean", &GaussianCurvature::mean)
        .def_readwrite("sd", &GaussianCurvature::sd);
    py::class_<EmpiricalCurvature>(m, "EmpiricalCurvature")
        .def(py::init([](std::vector<double> values) {
                 return EmpiricalCurvature{std::move(values)};
             }),
             py::arg("values"))
        .def_readwrite("values", &EmpiricalCurvature::values);

    py::enum_<StabilityVerdict>(m, "StabilityVerdict")
        .value("COLLAPSE", StabilityVerdict::Collapse)
        .value("ESCAPE", StabilityVerdict::Escape)
        .value("INCONCLUSIVE", StabilityVerdict::Inconclusive);
    m.def("verdict_name", &verdict_name, py::arg("verdict"));

    py::class_<LyapunovEstimate>(m, "LyapunovEstimate")
        .def_readonly("lambda_exponent", &LyapunovEstimate::lambda_exponent)
        .def_readonly("std_error", &LyapunovEstimate::std_error)
        .def_readonly("n_samples", &LyapunovEstimate::n_samples)
        .def_readonly("excluded", &LyapunovEstimate::excluded)
        .def_readonly("verdict", &LyapunovEstimate::verdict);
    m.def("lyapunov_estimate", &lyapunov_estimate, py::arg("h"), py::arg("lam"),
          py::arg("gamma"), py::arg("n"), py::arg("rng"));
    m.def("critical_lr_second_order", &critical_lr_second_order, py::arg("h"),
          py::arg("gamma"));

    py::class_<LinearizedPath>(m, "LinearizedPath")
        .def_readonly("collapsed", &LinearizedPath::collapsed)
        .def_readonly("escaped", &LinearizedPath::escaped)
        .def_readonly("abs_z", &LinearizedPath::abs_z)
        .def_readonly("steps_run", &LinearizedPath::steps_run);
    m.def("simulate_linearized", &simulate_linearized, py::arg("h"), py::arg("lam"),
          py::arg("gamma"), py::arg("z0"), py::arg("steps"), py::arg("rng"));

    py::class_<StructureThresholds>(m, "StructureThresholds")
        .def(py::init<>())
        .def_readwrite("sparsity_tol", &StructureThresholds::sparsity_tol)
        .def_readwrite("rank_rel_tol", &StructureThresholds::rank_rel_tol)
        .def_readwrite("dead_grad_tol", &StructureThresholds::dead_grad_tol)
        .def_readwrite("cluster_rel_tol", &StructureThresholds::cluster_rel_tol);
    py::class_<StructureMetrics>(m, "StructureMetrics")
        .def_readonly("sparsity", &StructureMetrics::sparsity)
        .def_readonly("rank", &StructureMetrics::rank)
        .def_readonly("dead_neurons", &StructureMetrics::dead_neurons)
        .def_readonly("cluster_count", &StructureMetrics::cluster_count);
    m.def("structure_metrics", &structure_metrics, py::arg("model"), py::arg("theta"),
          py::arg("data"), py::arg("thresholds") = StructureThresholds{});
    m.def("sorted_unit_correlation", &sorted_unit_correlation, py::arg("model"),
          py::arg("theta"));

    py::class_<L1EquivalenceReport>(m, "L1EquivalenceReport")
        .def_readonly("right_derivative", &L1EquivalenceReport::right_derivative)
        .def_readonly("odd_part", &L1EquivalenceReport::odd_part)
        .def_readonly("residual_ratio", &L1EquivalenceReport::residual_ratio)
        .def_readonly("abs_ratio", &L1EquivalenceReport::abs_ratio)
        .def_readonly("linear_in_z", &L1EquivalenceReport::linear_in_z)
        .def_readonly("passed", &L1EquivalenceReport::pass);
    m.def("l1_equivalence_check", &l1_equivalence_check, py::arg("model"), py::arg("sym"),
          py::arg("theta0"), py::arg("n"), py::arg("samples"), py::arg("s_grid"));

    py::class_<DcsConfig>(m, "DcsConfig")
        .def(py::init([](Matrix projection, double alpha) {
                 return DcsConfig{std::move(projection), alpha};
             }),
             py::arg("projection"), py::arg("alpha") = 0.0)
        .def_readwrite("projection", &DcsConfig::projection)
        .def_readwrite("alpha", &DcsConfig::alpha);
    py::class_<DcsParams>(m, "DcsParams")
        .def(py::init<>())
        .def(py::init([](ParamVector w, ParamVector u, ParamVector v) {
                 return DcsParams{std::move(w), std::move(u), std::move(v)};
             }),
             py::arg("w"), py::arg("u"), py::arg("v"))
        .def_readwrite("w", &DcsParams::w)
        .def_readwrite("u", &DcsParams::u)
        .def_readwrite("v", &DcsParams::v);
    m.def("dcs_transform", &dcs_transform, py::arg("params"), py::arg("config"));
    m.def("dcs_extract", &dcs_extract, py::arg("params"), py::arg("config"));
    m.def("dcs_embed", &dcs_embed, py::arg("theta"), py::arg("config"));
    m.def(
        "dcs_wrap",
        [](std::shared_ptr<PerSampleLoss> base, const DcsConfig& cfg) {
            return unconst(dcs_wrap(ModelPtr(std::move(base)), cfg));
        },
        py::arg("base"), py::arg("config"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("name", &ExperimentConfig::name)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("replicates", &ExperimentConfig::replicates)
        .def_readwrite("threads", &ExperimentConfig::threads)
        .def_readwrite("out", &ExperimentConfig::out)
        .def_readwrite("dim", &ExperimentConfig::dim)
        .def_readwrite("points", &ExperimentConfig::points)
        .def_readwrite("points_per_task", &ExperimentConfig::points_per_task)
        .def_readwrite("tasks", &ExperimentConfig::tasks)
        .def_readwrite("noise_sd", &ExperimentConfig::noise_sd)
        .def_readwrite("mu", &ExperimentConfig::mu)
        .def_readwrite("learning_rate", &ExperimentConfig::learning_rate)
        .def_readwrite("weight_decay", &ExperimentConfig::weight_decay)
        .def_readwrite("batch_size", &ExperimentConfig::batch_size)
        .def_readwrite("steps", &ExperimentConfig::steps)
        .def_readwrite("optimizer", &ExperimentConfig::optimizer)
        .def_readwrite("momentum", &ExperimentConfig::momentum)
        .def_readwrite("grad_noise_sd", &ExperimentConfig::grad_noise_sd)
        .def_readwrite("init_scale", &ExperimentConfig::init_scale)
        .def_readwrite("bias_scale", &ExperimentConfig::bias_scale)
        .def_readwrite("lambda_grid", &ExperimentConfig::lambda_grid)
        .def_readwrite("gamma_grid", &ExperimentConfig::gamma_grid)
        .def_readwrite("mu_grid", &ExperimentConfig::mu_grid)
        .def_readwrite("rank_mode", &ExperimentConfig::rank_mode)
        .def_readwrite("rank_rel_tol", &ExperimentConfig::rank_rel_tol)
        .def_readwrite("curvature_kind", &ExperimentConfig::curvature_kind)
        .def_readwrite("curvature_values", &ExperimentConfig::curvature_values)
        .def_readwrite("curvature_weights", &ExperimentConfig::curvature_weights)
        .def_readwrite("curvature_mean", &ExperimentConfig::curvature_mean)
        .def_readwrite("curvature_sd", &ExperimentConfig::curvature_sd)
        .def_readwrite("gamma", &ExperimentConfig::gamma)
        .def_readwrite("mc_samples", &ExperimentConfig::mc_samples)
        .def_readwrite("sim_steps", &ExperimentConfig::sim_steps)
        .def_readwrite("z0", &ExperimentConfig::z0)
        .def_readwrite("mutation", &ExperimentConfig::mutation)
        .def("__eq__", [](const ExperimentConfig& a, const ExperimentConfig& b) {
            return a == b;
        });

    m.def("default_config", &default_config, py::arg("experiment"));
    m.def("parse_experiment_config", &parse_experiment_config, py::arg("text"));
    m.def("serialize_experiment_config", &serialize_experiment_config, py::arg("config"));

    m.def("run_sweep_sparsity", &run_sweep_sparsity, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_sweep_rank", &run_sweep_rank, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_continual", &run_continual, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_lyapunov", &run_lyapunov, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<VerifyReport>(m, "VerifyReport")
        .def_readonly("csv", &VerifyReport::csv)
        .def_readonly("ok", &VerifyReport::ok);
    m.def("run_verify", &run_verify, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "run_experiment",
        [](const ExperimentConfig& cfg) {
            bool ok = true;
            std::string csv;
            {
                py::gil_scoped_release release;
                csv = run_experiment(cfg, &ok);
            }
            return py::make_tuple(csv, ok);
        },
        py::arg("config"));
}
