#include "mirrorsym/optimize.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mirrorsym/matrix.hpp"
#include "mirrorsym/mirror.hpp"

namespace mirrorsym {

std::string optimizer_name(Optimizer o) {
    switch (o) {
        case Optimizer::GD: return "gd";
        case Optimizer::SGD: return "sgd";
        case Optimizer::AdaptiveNoMomentum: return "adaptive_no_momentum";
    }
    throw std::logic_error("optimizer_name: bad enum");
}

Optimizer parse_optimizer(const std::string& name) {
    if (name == "gd") return Optimizer::GD;
    if (name == "sgd") return Optimizer::SGD;
    if (name == "adaptive_no_momentum") return Optimizer::AdaptiveNoMomentum;
    throw std::invalid_argument("unknown optimizer: " + name);
}

std::vector<std::pair<std::string, std::string>> trainer_config_kv(const TrainerConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("learning_rate", g17(c.learning_rate));
    kv.emplace_back("weight_decay", g17(c.weight_decay));
    kv.emplace_back("batch_size", std::to_string(c.batch_size));
    kv.emplace_back("steps", std::to_string(c.steps));
    kv.emplace_back("optimizer", optimizer_name(c.optimizer));
    kv.emplace_back("momentum", g17(c.momentum));
    kv.emplace_back("grad_noise_sd", g17(c.grad_noise_sd));
    kv.emplace_back("seed", std::to_string(c.seed));
    kv.emplace_back("stream_id", std::to_string(c.stream_id));
    kv.emplace_back("fork_key", std::to_string(c.fork_key));
    kv.emplace_back("record_every", std::to_string(c.record_every));
    if (const auto* g = std::get_if<GaussianInit>(&c.init))
        kv.emplace_back("init", "gaussian(" + g17(g->scale) + ")");
    else
        kv.emplace_back("init",
                        "explicit(" + std::to_string(std::get<ExplicitInit>(c.init).theta0.size()) + ")");
    kv.emplace_back("dead_grad_tol", g17(c.dead_grad_tol));
    return kv;
}

void MetricSpec::add(std::string name, std::function<double(const ParamVector&)> fn) {
    if (!fn) throw std::invalid_argument("MetricSpec::add: empty hook");
    items.push_back({std::move(name), std::move(fn)});
}

MetricSpec mirror_residual_metrics(const ModelPtr& model) {
    MetricSpec spec;
    const auto& ms = model->mirrors();
    for (std::size_t k = 0; k < ms.size(); ++k) {
        std::string name = ms[k].label().empty() ? "res_" + std::to_string(k)
                                                 : "res_" + ms[k].label();
        spec.add(std::move(name),
                 [model, k](const ParamVector& th) { return mirror_residual(model->mirrors()[k], th); });
    }
    return spec;
}

void add_loss_metric(MetricSpec& spec, const ModelPtr& model, const Dataset& data) {
    spec.add("loss", [model, samples = data.samples](const ParamVector& th) {
        return mean_loss(*model, th, samples);
    });
}

namespace {

void validate(const PerSampleLoss& model, const SampleSource& data, const TrainerConfig& c) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(c.learning_rate) || c.learning_rate < 0.0)
        throw std::invalid_argument("train: learning_rate must be finite and >= 0");
    if (!finite(c.weight_decay) || c.weight_decay < 0.0)
        throw std::invalid_argument("train: weight_decay must be finite and >= 0");
    if (!finite(c.momentum) || c.momentum < 0.0 || c.momentum >= 1.0)
        throw std::invalid_argument("train: momentum must be in [0, 1)");
    if (!finite(c.grad_noise_sd) || c.grad_noise_sd < 0.0)
        throw std::invalid_argument("train: grad_noise_sd must be finite and >= 0");
    if (c.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
    if (data.is_fixed() && c.batch_size > data.size())
        throw std::invalid_argument("train: batch_size exceeds dataset size");
    if (c.optimizer == Optimizer::GD && !data.is_fixed())
        throw std::invalid_argument("train: GD needs a fixed dataset");
    if (const auto* e = std::get_if<ExplicitInit>(&c.init)) {
        if (e->theta0.size() != model.dim())
            throw std::invalid_argument("train: explicit init has wrong dimension");
        if (!all_finite(e->theta0)) throw std::invalid_argument("train: non-finite init");
    }
}

ParamVector initial_theta(const PerSampleLoss& model, const TrainerConfig& c, RngStream& rng) {
    if (const auto* e = std::get_if<ExplicitInit>(&c.init)) return e->theta0;
    const double scale = std::get<GaussianInit>(c.init).scale;
    ParamVector theta(model.dim());
    for (const auto& block : model.layout().blocks()) {
        const double sd = scale < 0.0 ? 0.1 / std::sqrt(double(block.length)) : scale;
        for (std::size_t i = 0; i < block.length; ++i)
            theta[block.offset + i] = rng.gaussian(0.0, sd);
    }
    return theta;
}

}  // namespace

Trajectory train(const PerSampleLoss& model, const SampleSource& data,
                 const TrainerConfig& config, const MetricSpec& metrics) {
    validate(model, data, config);
    const std::size_t dim = model.dim();

    RngStream base = RngStream(config.seed, config.stream_id).fork(config.fork_key);
    RngStream init_rng = base.fork(1);
    RngStream batch_rng = base.fork(2);
    RngStream noise_rng = base.fork(3);

    Trajectory traj;
    for (const auto& item : metrics.items) traj.metric_names.push_back(item.name);

    ParamVector theta = initial_theta(model, config, init_rng);
    ParamVector theta_prev = theta;
    ParamVector g(dim), next(dim), v;
    if (config.optimizer == Optimizer::AdaptiveNoMomentum) v.assign(dim, 0.0);
    std::vector<Sample> batch;

    auto record = [&](std::size_t step) {
        TrajectoryRow row;
        row.step = step;
        row.values.reserve(metrics.items.size());
        for (const auto& item : metrics.items) row.values.push_back(item.fn(theta));
        traj.rows.push_back(std::move(row));
    };
    if (config.record_every > 0) record(0);

    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    constexpr double kDivergenceNorm = 1e12;
    double beta2_pow = 1.0;

    std::size_t t = 0;
    for (t = 1; t <= config.steps; ++t) {
        const std::vector<Sample>* samples;
        if (config.optimizer == Optimizer::GD) {
            samples = &data.dataset().samples;
        } else {
            data.draw_batch(config.batch_size, batch_rng, batch);
            samples = &batch;
        }

        std::fill(g.begin(), g.end(), 0.0);
        const double inv = 1.0 / double(samples->size());
        for (const auto& s : *samples) model.add_grad(theta, s, inv, g);
        if (config.weight_decay != 0.0) axpy(2.0 * config.weight_decay, theta, g);
        if (config.grad_noise_sd > 0.0)
            for (auto& gi : g) gi += noise_rng.gaussian(0.0, config.grad_noise_sd);

        if (config.optimizer == Optimizer::AdaptiveNoMomentum) {
            beta2_pow *= kBeta2;
            const double correction = 1.0 - beta2_pow;
            for (std::size_t i = 0; i < dim; ++i) {
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
                g[i] /= std::sqrt(v[i] / correction) + kEps;
            }
        }

        for (std::size_t i = 0; i < dim; ++i)
            next[i] = theta[i] - config.learning_rate * g[i] +
                      config.momentum * (theta[i] - theta_prev[i]);
        theta_prev.swap(theta);
        theta.swap(next);

        if (!all_finite(theta) || norm2(theta) > kDivergenceNorm) {
            traj.diverged = true;
            break;
        }
        if (config.record_every > 0 && t % config.record_every == 0 && t != config.steps)
            record(t);
    }
    traj.steps_run = traj.diverged ? t : config.steps;
    const bool already_recorded = !traj.rows.empty() && traj.rows.back().step == traj.steps_run;
    if (!traj.diverged && !already_recorded) record(traj.steps_run);
    traj.final_theta = std::move(theta);
    return traj;
}

std::size_t dead_neuron_count(const PerSampleLoss& model, const ParamVector& theta,
                              const Dataset& data, double tol) {
    ParamVector g = mean_grad(model, theta, data.samples);
    std::size_t dead = 0;
    for (double gi : g)
        if (std::abs(gi) < tol) ++dead;
    return dead;
}

std::vector<Trajectory> train_continual(const PerSampleLoss& model, const TaskSequence& tasks,
                                        const TrainerConfig& config, const MetricSpec& metrics) {
    if (tasks.tasks.empty()) throw std::invalid_argument("train_continual: no tasks");
    std::vector<Trajectory> out;
    out.reserve(tasks.tasks.size());
    TrainerConfig cfg = config;
    for (std::size_t j = 0; j < tasks.tasks.size(); ++j) {
        cfg.fork_key = config.fork_key + j;
        if (j > 0) cfg.init = ExplicitInit{out.back().final_theta};
        auto source = SampleSource::fixed(tasks.tasks[j]);
        Trajectory traj = train(model, source, cfg, metrics);
        traj.final_metrics["dead_neurons"] =
            double(dead_neuron_count(model, traj.final_theta, tasks.tasks[j], cfg.dead_grad_tol));
        traj.final_metrics["final_loss"] = mean_loss(model, traj.final_theta, tasks.tasks[j].samples);
        out.push_back(std::move(traj));
        if (out.back().diverged) break;  // nothing meaningful to hand to the next task
    }
    return out;
}

std::vector<RunSummary> sweep(const std::vector<SweepCell>& cells, std::size_t replicates,
                              std::size_t threads) {
    if (cells.empty()) throw std::invalid_argument("sweep: empty grid");
    if (replicates == 0) throw std::invalid_argument("sweep: replicates must be >= 1");
    const std::size_t total = cells.size() * replicates;
    std::vector<RunSummary> out(total);

    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t k = cursor.fetch_add(1);
            if (k >= total) return;
            const std::size_t c = k / replicates;
            const std::size_t r = k % replicates;
            try {
                TrainerConfig cfg = cells[c].config;
                cfg.stream_id = c * replicates + r;
                RunSummary& slot = out[k];
                slot.cell = c;
                slot.replicate = r;
                slot.label = cells[c].label;
                slot.trajectory = train(*cells[c].model, cells[c].source, cfg, cells[c].metrics);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, total));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

std::string sweep_to_csv(const std::vector<SweepCell>& cells,
                         const std::vector<RunSummary>& runs) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        out += "# cell " + std::to_string(c) + " label = " + cells[c].label + "\n";
        out += "# cell " + std::to_string(c) + " model = " + cells[c].model->name() + "\n";
        for (const auto& [k, v] : trainer_config_kv(cells[c].config))
            out += "# cell " + std::to_string(c) + " " + k + " = " + v + "\n";
    }
    out += "cell_id,replicate,step,metric_name,value\n";
    for (const auto& run : runs) {
        const std::string prefix =
            std::to_string(run.cell) + "," + std::to_string(run.replicate) + ",";
        for (const auto& row : run.trajectory.rows)
            for (std::size_t m = 0; m < run.trajectory.metric_names.size(); ++m)
                out += prefix + std::to_string(row.step) + "," + run.trajectory.metric_names[m] +
                       "," + g17(row.values[m]) + "\n";
        const std::string fin = std::to_string(run.trajectory.steps_run);
        for (const auto& [k, v] : run.trajectory.final_metrics)
            out += prefix + fin + "," + k + "," + g17(v) + "\n";
        out += prefix + fin + ",diverged," + (run.trajectory.diverged ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace mirrorsym
