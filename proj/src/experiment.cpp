#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mirrorsym/analysis.hpp"
#include "mirrorsym/data.hpp"
#include "mirrorsym/dcs.hpp"
#include "mirrorsym/experiment.hpp"
#include "mirrorsym/finite_diff.hpp"
#include "mirrorsym/models.hpp"
#include "mirrorsym/optimize.hpp"

namespace mirrorsym {

namespace {

// Auxiliary stream ids, far above anything sweep assigns (cell * replicates
// + replicate), so evaluation data never shares a stream with training.
constexpr std::uint64_t kEvalStream = 1000003;
constexpr std::uint64_t kDataStream = 1000033;
constexpr std::uint64_t kTaskStream = 1000037;
constexpr std::uint64_t kBiasStream = 1000039;

std::string echo(const ExperimentConfig& cfg) {
    std::istringstream in(serialize_experiment_config(cfg));
    std::string line, out;
    while (std::getline(in, line)) out += "# " + line + "\n";
    return out;
}

TrainerConfig base_trainer(const ExperimentConfig& cfg) {
    TrainerConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.weight_decay = cfg.weight_decay;
    tc.batch_size = cfg.batch_size;
    tc.steps = cfg.steps;
    tc.optimizer = parse_optimizer(cfg.optimizer);
    tc.momentum = cfg.momentum;
    tc.seed = cfg.seed;
    tc.init = GaussianInit{cfg.init_scale};
    return tc;
}

double sparsity_fraction(const ParamVector& theta, double tol) {
    if (theta.empty()) return 0.0;
    std::size_t zeros = 0;
    for (double t : theta)
        if (std::abs(t) < tol) ++zeros;
    return double(zeros) / double(theta.size());
}

std::string csv_count(double v) { return std::to_string(static_cast<long long>(std::llround(v))); }

}  // namespace

std::string run_sweep_sparsity(const ExperimentConfig& cfg) {
    const std::vector<std::pair<std::string, ModelPtr>> variants = {
        {"vanilla", linear_regression(cfg.dim)},
        {"hadamard", hadamard_regression(cfg.dim)},
    };
    std::vector<SweepCell> cells;
    for (const auto& [vname, model] : variants)
        for (double lam : cfg.lambda_grid) {
            TrainerConfig tc = base_trainer(cfg);
            tc.learning_rate = lam;
            cells.push_back({vname + "," + g17(lam), model,
                             SampleSource::stream(sparse_regression_draw(cfg.dim, cfg.noise_sd)),
                             tc,
                             {}});
        }
    const auto runs = sweep(cells, cfg.replicates, cfg.threads);

    RngStream eval_rng(cfg.seed, kEvalStream);
    const Dataset eval = gen_sparse_regression(cfg.dim, 256, cfg.noise_sd, eval_rng);
    const double tol = StructureThresholds{}.sparsity_tol;

    std::string out = echo(cfg);
    out += "model,lambda,replicate,final_sparsity,final_loss\n";
    for (const auto& r : runs) {
        const auto& model = cells[r.cell].model;
        out += r.label + "," + std::to_string(r.replicate) + "," +
               g17(sparsity_fraction(r.trajectory.final_theta, tol)) + "," +
               g17(mean_loss(*model, r.trajectory.final_theta, eval.samples)) + "\n";
    }
    return out;
}

std::string run_sweep_rank(const ExperimentConfig& cfg) {
    StructureThresholds thr;
    thr.rank_rel_tol = cfg.rank_rel_tol;
    std::string out = echo(cfg);

    if (cfg.rank_mode == "gamma") {
        RngStream data_rng(cfg.seed, kDataStream);
        const Dataset ds = gen_matfac(cfg.dim, cfg.points, cfg.mu, data_rng);
        const auto model = matrix_factorization(cfg.dim);
        std::vector<SweepCell> cells;
        for (double gam : cfg.gamma_grid) {
            TrainerConfig tc = base_trainer(cfg);
            tc.weight_decay = gam;
            cells.push_back({"vanilla," + g17(gam) + "," + g17(cfg.learning_rate), model,
                             SampleSource::fixed(ds), tc,
                             {}});
        }
        const auto runs = sweep(cells, cfg.replicates, cfg.threads);
        out += "variant,gamma,lambda,replicate,rank,final_loss\n";
        for (const auto& r : runs) {
            const auto m = structure_metrics(*model, r.trajectory.final_theta, ds, thr);
            out += r.label + "," + std::to_string(r.replicate) + "," + std::to_string(m.rank) +
                   "," + g17(mean_loss(*model, r.trajectory.final_theta, ds.samples)) + "\n";
        }
        return out;
    }

    // mu mode: fresh samples, so the optimizer must be stochastic
    if (parse_optimizer(cfg.optimizer) == Optimizer::GD)
        throw ConfigError(0, "sweep_rank in mu mode needs a stochastic optimizer");
    const std::vector<std::pair<std::string, ModelPtr>> variants = {
        {"vanilla", matrix_factorization(cfg.dim, false)},
        {"residual", matrix_factorization(cfg.dim, true)},
    };
    std::vector<SweepCell> cells;
    for (const auto& [vname, model] : variants)
        for (double m : cfg.mu_grid) {
            TrainerConfig tc = base_trainer(cfg);
            cells.push_back({vname + "," + g17(m) + "," + g17(cfg.learning_rate), model,
                             SampleSource::stream(matfac_draw(cfg.dim, m)), tc,
                             {}});
        }
    const auto runs = sweep(cells, cfg.replicates, cfg.threads);

    // one evaluation set per grid value, shared by both variants
    std::vector<Dataset> evals;
    for (std::size_t i = 0; i < cfg.mu_grid.size(); ++i) {
        RngStream eval_rng(cfg.seed, kEvalStream + i);
        evals.push_back(gen_matfac(cfg.dim, 64, cfg.mu_grid[i], eval_rng));
    }
    out += "variant,mu,lambda,replicate,rank,final_loss\n";
    for (const auto& r : runs) {
        const auto& model = cells[r.cell].model;
        const Dataset& eval = evals[r.cell % cfg.mu_grid.size()];
        const auto m = structure_metrics(*model, r.trajectory.final_theta, eval, thr);
        out += r.label + "," + std::to_string(r.replicate) + "," + std::to_string(m.rank) + "," +
               g17(mean_loss(*model, r.trajectory.final_theta, eval.samples)) + "\n";
    }
    return out;
}

std::string run_continual(const ExperimentConfig& cfg) {
    RngStream task_rng(cfg.seed, kTaskStream);
    const TaskSequence seq =
        gen_continual_tasks(cfg.dim, cfg.points_per_task, cfg.tasks, cfg.noise_sd, task_rng);

    RngStream bias_rng(cfg.seed, kBiasStream);
    struct Variant {
        std::string name;
        ModelPtr model;
        double noise;
    };
    const std::vector<Variant> variants = {
        {"vanilla", linear_regression(cfg.dim), 0.0},
        {"symmetric", hadamard_regression(cfg.dim), 0.0},
        {"symmetric_noise", hadamard_regression(cfg.dim), cfg.grad_noise_sd},
        {"symmetric_bias",
         apply_symmetry_removal(hadamard_regression(cfg.dim), RandomBias{cfg.bias_scale},
                                bias_rng),
         0.0},
    };

    std::string out = echo(cfg);
    out += "variant,task,dead_neurons\n";
    for (std::size_t i = 0; i < variants.size(); ++i) {
        TrainerConfig tc = base_trainer(cfg);
        tc.grad_noise_sd = variants[i].noise;
        tc.stream_id = i;
        const auto trajs = train_continual(*variants[i].model, seq, tc);
        for (std::size_t t = 0; t < trajs.size(); ++t)
            out += variants[i].name + "," + std::to_string(t + 1) + "," +
                   csv_count(trajs[t].final_metrics.at("dead_neurons")) + "\n";
    }
    return out;
}

std::string run_lyapunov(const ExperimentConfig& cfg) {
    const CurvatureDistribution dist =
        cfg.curvature_kind == "discrete"
            ? CurvatureDistribution(DiscreteCurvature{cfg.curvature_values, cfg.curvature_weights})
            : CurvatureDistribution(GaussianCurvature{cfg.curvature_mean, cfg.curvature_sd});

    double eq5 = std::numeric_limits<double>::quiet_NaN();
    try {
        eq5 = critical_lr_second_order(dist, cfg.gamma);
    } catch (const std::domain_error&) {
        // all curvature mass at -gamma: no second-order prediction
    }

    std::string out = echo(cfg);
    out += "lambda,gamma,lyapunov,stderr,verdict,eq5_threshold,simulated_verdict\n";
    for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
        const double lam = cfg.lambda_grid[i];
        RngStream est_rng(cfg.seed, 2 * i);
        const auto est = lyapunov_estimate(dist, lam, cfg.gamma, cfg.mc_samples, est_rng);
        RngStream sim_rng(cfg.seed, 2 * i + 1);
        const auto path = simulate_linearized(dist, lam, cfg.gamma, cfg.z0, cfg.sim_steps, sim_rng);
        const std::string sim_verdict =
            path.collapsed ? "collapse" : (path.escaped ? "escape" : "inconclusive");
        out += g17(lam) + "," + g17(cfg.gamma) + "," + g17(est.lambda_exponent) + "," +
               g17(est.std_error) + "," + verdict_name(est.verdict) + "," + g17(eq5) + "," +
               sim_verdict + "\n";
    }
    return out;
}

namespace {

// Harness-side fault injection: proves the gradient check would catch a
// sign error. Never part of the library models.
class SignFlippedGradient : public PerSampleLoss {
public:
    explicit SignFlippedGradient(ModelPtr base)
        : PerSampleLoss(base->name() + "_flipped", base->layout()), base_(std::move(base)) {}
    double loss(const ParamVector& t, const Sample& s) const override {
        return base_->loss(t, s);
    }
    ParamVector grad(const ParamVector& t, const Sample& s) const override {
        ParamVector g = base_->grad(t, s);
        g[0] = -g[0];
        return g;
    }
    Sample random_sample(RngStream& rng) const override { return base_->random_sample(rng); }

private:
    ModelPtr base_;
};

struct CheckRow {
    std::string name;
    bool pass;
    double residual;
    double tolerance;
};

ParamVector random_point(std::size_t dim, RngStream& rng) {
    ParamVector v(dim);
    for (auto& x : v) x = rng.gaussian();
    return v;
}

}  // namespace

VerifyReport run_verify(const ExperimentConfig& cfg) {
    std::vector<CheckRow> rows;
    auto push = [&rows](const std::string& name, double residual, double tol) {
        rows.push_back({name, residual <= tol, residual, tol});
    };

    const std::vector<ModelPtr> zoo = {
        linear_regression(3),    hadamard_regression(3), matrix_factorization(3),
        two_layer_tanh(3),       permutation_mlp(3, 2),  footnote_quadratic(),
    };

    // every registered mirror is a real symmetry of its loss
    {
        RngStream rng(cfg.seed, 1);
        double worst = 0.0;
        for (const auto& m : zoo)
            for (const auto& sym : m->mirrors())
                worst = std::max(worst,
                                 verify_loss_symmetry(*m, sym, 20, rng).max_abs_deviation);
        push("loss_symmetry", worst, 1e-12);
    }

    // analytic gradients against central differences
    {
        RngStream rng(cfg.seed, 2);
        double worst = 0.0;
        for (const auto& m : zoo) {
            ModelPtr model = m;
            if (cfg.mutation == "gradient_sign")
                model = std::make_shared<SignFlippedGradient>(m);
            for (int rep = 0; rep < 5; ++rep) {
                ParamVector theta = random_point(model->dim(), rng);
                Sample s = model->random_sample(rng);
                ParamVector g = model->grad(theta, s);
                ParamVector fd =
                    fd_gradient([&](const ParamVector& q) { return model->loss(q, s); }, theta);
                double scale = 1.0;
                for (double x : g) scale = std::max(scale, std::abs(x));
                for (std::size_t i = 0; i < g.size(); ++i)
                    worst = std::max(worst, std::abs(g[i] - fd[i]) / scale);
            }
        }
        push("analytic_gradient", worst, 1e-5);
    }

    // gradient tangency on every mirror's fixed set, with and without decay
    {
        RngStream rng(cfg.seed, 3);
        double worst = 0.0;
        for (const auto& m : zoo)
            for (const auto& sym : m->mirrors())
                for (double gam : {0.0, 0.1, 1.0})
                    for (int rep = 0; rep < 7; ++rep) {
                        ParamVector theta =
                            project_symmetric(sym, random_point(m->dim(), rng));
                        Sample s = m->random_sample(rng);
                        ParamVector g = m->grad(theta, s);
                        axpy(2.0 * gam, theta, g);
                        double denom = 1.0 + norm2(g);
                        for (double c : sym.frame_coords(g))
                            worst = std::max(worst, std::abs(c) / denom);
                    }
        push("tangent_gradient", worst, 1e-10);
    }

    // the Hessian splits into fixed-set and mirror blocks at symmetric points
    {
        RngStream rng(cfg.seed, 4);
        double worst = 0.0;
        for (const auto& m : {hadamard_regression(2), matrix_factorization(2),
                              two_layer_tanh(2)})
            for (const auto& sym : m->mirrors()) {
                ParamVector theta = project_symmetric(sym, random_point(m->dim(), rng));
                Sample s = m->random_sample(rng);
                const auto rep = hessian_block_check(*m, sym, theta, s);
                worst = std::max(worst,
                                 rep.block_residual / (1.0 + frobenius_norm(rep.hessian)));
            }
        push("hessian_split", worst, 1e-4);
    }

    // pairwise Hessian pattern of the tanh net at the origin: off-diagonal
    // blocks -x*y, everything else zero
    {
        const auto m = two_layer_tanh(3);
        const Sample s{{1.0}, {2.0}};
        const ParamVector origin(m->dim(), 0.0);
        const auto d2 =
            finite_diff([&](const ParamVector& q) { return m->loss(q, s); }, origin);
        double worst = 0.0;
        const std::size_t u = 3;  // units; layout is (w_0..w_2, u_0..u_2)
        for (std::size_t i = 0; i < 2 * u; ++i)
            for (std::size_t j = 0; j < 2 * u; ++j) {
                const bool pair = (i < u && j == u + i) || (j < u && i == u + j);
                const double want = pair ? -2.0 : 0.0;
                worst = std::max(worst, std::abs(d2.hessian(i, j) - want));
            }
        push("pair_hessian", worst, 1e-3);
    }

    // crossing the decay threshold flips the loss comparison
    {
        RngStream rng(cfg.seed, 5);
        std::size_t violations = 0;
        for (const auto& m : {hadamard_regression(3), two_layer_tanh(3)}) {
            std::vector<Sample> data;
            for (int i = 0; i < 8; ++i) data.push_back(m->random_sample(rng));
            for (const auto& sym : m->mirrors())
                for (int rep = 0; rep < 10; ++rep) {
                    ParamVector theta = random_point(m->dim(), rng);
                    if (mirror_residual(sym, theta) < 1e-6) continue;
                    const double g0 = gamma_threshold(*m, sym, theta, data);
                    const double g = 1.01 * std::max(0.0, g0);
                    ParamVector u = project_symmetric(sym, theta);
                    if (!(regularized_loss(*m, u, data, g) < regularized_loss(*m, theta, data, g)))
                        ++violations;
                }
        }
        push("decay_threshold", double(violations), 0.0);
    }

    // exact Lyapunov enumeration against closed forms, and agreement with
    // direct simulation of the linearized coordinate
    {
        const DiscreteCurvature two{{2.0, 0.0}, {1.0, 1.0}};
        const DiscreteCurvature one{{1.0}, {1.0}};
        RngStream rng(cfg.seed, 6);
        double worst = 0.0;
        worst = std::max(worst, std::abs(lyapunov_estimate(two, 0.4, 0.0, 0, rng).lambda_exponent -
                                         0.5 * std::log(0.2)));
        worst = std::max(worst, std::abs(lyapunov_estimate(two, 1.2, 0.0, 0, rng).lambda_exponent -
                                         0.5 * std::log(1.4)));
        worst = std::max(worst, std::abs(lyapunov_estimate(one, 0.5, 0.0, 0, rng).lambda_exponent -
                                         std::log(0.5)));
        push("lyapunov_closed_form", worst, 1e-12);

        std::size_t disagreements = 0;
        auto agree = [&](const CurvatureDistribution& d, double lam,
                         StabilityVerdict expected) {
            RngStream sim_rng(cfg.seed, 7);
            const auto est = lyapunov_estimate(d, lam, 0.0, 0, sim_rng);
            const auto path = simulate_linearized(d, lam, 0.0, 1.0, 200000, sim_rng);
            const StabilityVerdict sim = path.collapsed
                                             ? StabilityVerdict::Collapse
                                             : (path.escaped ? StabilityVerdict::Escape
                                                             : StabilityVerdict::Inconclusive);
            if (est.verdict != expected || sim != expected) ++disagreements;
        };
        agree(two, 0.4, StabilityVerdict::Collapse);
        agree(two, 1.2, StabilityVerdict::Escape);
        agree(one, 0.5, StabilityVerdict::Collapse);
        agree(one, 2.5, StabilityVerdict::Escape);
        push("lyapunov_simulation", double(disagreements), 0.0);
    }

    // constraint reparametrization: round-trip and embedded symmetry
    {
        RngStream rng(cfg.seed, 8);
        double worst = 0.0;
        Matrix sub(3, 3);
        sub(0, 0) = sub(2, 2) = 1.0;
        for (const Matrix& p : {Matrix::identity(3), sub}) {
            DcsConfig dcfg{p, 0.0};
            for (int rep = 0; rep < 10; ++rep) {
                ParamVector theta = random_point(3, rng);
                ParamVector back = dcs_transform(dcs_embed(theta, dcfg), dcfg);
                for (std::size_t i = 0; i < 3; ++i)
                    worst = std::max(worst, std::abs(back[i] - theta[i]));
            }
        }
        push("dcs_roundtrip", worst, 1e-10);

        auto wrapped = dcs_wrap(linear_regression(3), {sub, 0.1});
        push("dcs_symmetry",
             verify_loss_symmetry(*wrapped, wrapped->mirrors()[0], 20, rng).max_abs_deviation,
             1e-12);
    }

    // restricted loss is linear in squared distance for true mirrors and
    // fails for a planted fake
    {
        RngStream rng(cfg.seed, 9);
        std::size_t fails = 0;

        const auto tanh_m = two_layer_tanh(2);
        std::vector<Sample> tanh_data;
        for (int i = 0; i < 10; ++i) tanh_data.push_back(tanh_m->random_sample(rng));
        ParamVector n(4, 0.0);
        n[0] = n[2] = 1.0 / std::sqrt(2.0);
        if (!l1_equivalence_check(*tanh_m, tanh_m->mirrors()[0], ParamVector(4, 0.0), n,
                                  tanh_data, {0.01, 0.02, 0.04, 0.08})
                 .pass)
            ++fails;

        const auto had = hadamard_regression(2);
        std::vector<Sample> had_data;
        for (int i = 0; i < 10; ++i) had_data.push_back(had->random_sample(rng));
        const auto& psym = had->mirrors()[1];
        ParamVector theta0 = project_symmetric(psym, random_point(4, rng));
        if (!l1_equivalence_check(*had, psym, theta0, psym.frame().col(0), had_data,
                                  {0.01, 0.02, 0.04, 0.08})
                 .pass)
            ++fails;
        push("l1_equivalence", double(fails), 0.0);

        const auto lin = linear_regression(2);
        std::vector<Sample> lin_data;
        for (int i = 0; i < 10; ++i) lin_data.push_back(lin->random_sample(rng));
        Matrix col(2, 1);
        col(0, 0) = 1.0 / std::sqrt(2.0);
        col(1, 0) = -1.0 / std::sqrt(2.0);
        MirrorSymmetry fake(col);
        const auto rep = l1_equivalence_check(*lin, fake, {0.7, 0.7}, fake.frame().col(0),
                                              lin_data, {0.01, 0.02, 0.04});
        push("l1_negative_control", rep.pass ? 1.0 : 0.0, 0.0);
    }

    VerifyReport report;
    report.ok = true;
    report.csv = echo(cfg) + "check,pass,residual,tolerance\n";
    for (const auto& r : rows) {
        report.ok = report.ok && r.pass;
        report.csv += r.name + "," + (r.pass ? "1" : "0") + "," + g17(r.residual) + "," +
                      g17(r.tolerance) + "\n";
    }
    return report;
}

std::string run_experiment(const ExperimentConfig& cfg, bool* ok) {
    if (ok) *ok = true;
    if (cfg.name == "sweep_sparsity") return run_sweep_sparsity(cfg);
    if (cfg.name == "sweep_rank") return run_sweep_rank(cfg);
    if (cfg.name == "continual") return run_continual(cfg);
    if (cfg.name == "lyapunov") return run_lyapunov(cfg);
    if (cfg.name == "verify") {
        VerifyReport r = run_verify(cfg);
        if (ok) *ok = r.ok;
        return r.csv;
    }
    throw ConfigError(0, "unknown experiment '" + cfg.name + "'");
}

}  // namespace mirrorsym
