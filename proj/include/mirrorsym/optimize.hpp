#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mirrorsym/data.hpp"
#include "mirrorsym/models.hpp"

namespace mirrorsym {

enum class Optimizer { GD, SGD, AdaptiveNoMomentum };

std::string optimizer_name(Optimizer o);
Optimizer parse_optimizer(const std::string& name);  // throws std::invalid_argument

// Gaussian init draws each block with sd = scale, or 0.1/sqrt(block length)
// when scale < 0 (the default).
struct GaussianInit {
    double scale = -1.0;
};
struct ExplicitInit {
    ParamVector theta0;
};
using InitSpec = std::variant<GaussianInit, ExplicitInit>;

struct TrainerConfig {
    double learning_rate = 0.01;
    double weight_decay = 0.0;  // gamma; enters the update as +2*gamma*theta
    std::size_t batch_size = 1;
    std::size_t steps = 100;
    Optimizer optimizer = Optimizer::SGD;
    double momentum = 0.0;      // heavy-ball coefficient in [0,1)
    double grad_noise_sd = 0.0; // sd of the per-coordinate gradient noise
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::uint64_t fork_key = 0; // sub-stream selector (continual tasks use it)
    std::size_t record_every = 0;  // 0: record only the final step
    InitSpec init = GaussianInit{};
    double dead_grad_tol = 1e-8;
};

// key=value view of a config, used for CSV header echoes
std::vector<std::pair<std::string, std::string>> trainer_config_kv(const TrainerConfig& c);

// Named scalar observables evaluated on theta during training.
struct MetricSpec {
    struct Item {
        std::string name;
        std::function<double(const ParamVector&)> fn;
    };
    std::vector<Item> items;

    void add(std::string name, std::function<double(const ParamVector&)> fn);
    bool empty() const { return items.empty(); }
};

// one "res_<mirror label>" metric per registered mirror
MetricSpec mirror_residual_metrics(const ModelPtr& model);
// dataset-averaged loss under the name "loss"
void add_loss_metric(MetricSpec& spec, const ModelPtr& model, const Dataset& data);

struct TrajectoryRow {
    std::size_t step;  // number of updates applied before evaluation
    std::vector<double> values;
};

struct Trajectory {
    std::vector<std::string> metric_names;
    std::vector<TrajectoryRow> rows;  // step strictly increasing
    ParamVector final_theta;
    std::size_t steps_run = 0;
    bool diverged = false;
    // summary values attached after the run (continual adds dead_neurons etc.)
    std::map<std::string, double> final_metrics;
};

// Runs the configured optimizer:
//   theta <- theta - lr * (g_hat + 2*gamma*theta + noise) + momentum * (theta - theta_prev)
// where g_hat is the minibatch-averaged gradient (GD: whole dataset), and
// AdaptiveNoMomentum divides by a bias-corrected running RMS of g
// (beta2 = 0.999, eps = 1e-8) before the learning rate is applied.
// Divergence (non-finite theta or |theta| > 1e12) stops the run and flags
// the trajectory instead of throwing.
Trajectory train(const PerSampleLoss& model, const SampleSource& data,
                 const TrainerConfig& config, const MetricSpec& metrics = {});

// Parameters whose dataset-averaged bare-loss gradient is below tol.
std::size_t dead_neuron_count(const PerSampleLoss& model, const ParamVector& theta,
                              const Dataset& data, double tol);

// Sequential tasks: each task's final theta initializes the next; task j
// trains on its own sub-stream (fork_key = j). Every returned trajectory
// carries final_metrics["dead_neurons"] and ["final_loss"] for its task.
std::vector<Trajectory> train_continual(const PerSampleLoss& model, const TaskSequence& tasks,
                                        const TrainerConfig& config,
                                        const MetricSpec& metrics = {});

// One grid point of a sweep. The sweep owns stream assignment: run
// (cell c, replicate r) trains with stream_id = c * replicates + r, so
// results do not depend on thread count or execution order.
struct SweepCell {
    std::string label;
    ModelPtr model;
    SampleSource source;
    TrainerConfig config;
    MetricSpec metrics;
};

struct RunSummary {
    std::size_t cell = 0;
    std::size_t replicate = 0;
    std::string label;
    Trajectory trajectory;
};

std::vector<RunSummary> sweep(const std::vector<SweepCell>& cells, std::size_t replicates,
                              std::size_t threads = 1);

// cell_id,replicate,step,metric_name,value rows, preceded by a "# "-prefixed
// key=value echo of every cell's trainer config.
std::string sweep_to_csv(const std::vector<SweepCell>& cells,
                         const std::vector<RunSummary>& runs);

}  // namespace mirrorsym
