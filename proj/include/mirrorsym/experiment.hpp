#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mirrorsym {

// Config problem with the offending line attached (0 when the error is not
// tied to a single line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// Everything a run needs beyond the binary itself. Parsed from a sectioned
// key=value file; defaults depend on the experiment name, so [experiment]
// name is resolved first and file values overlay the matching defaults.
// A run is fully determined by this struct.
struct ExperimentConfig {
    // [experiment]
    std::string name;  // sweep_sparsity | sweep_rank | continual | lyapunov | verify
    std::uint64_t seed = 0;
    std::size_t replicates = 3;
    std::size_t threads = 1;
    std::string out;  // empty: stdout

    // [model]
    std::size_t dim = 50;

    // [data]
    std::size_t points = 200;          // fixed-dataset experiments
    std::size_t points_per_task = 100; // continual
    std::size_t tasks = 10;
    double noise_sd = 0.5;             // regression label noise
    double mu = 0.5;                   // teacher mix for factorization data

    // [train]
    double learning_rate = 0.01;
    double weight_decay = 0.0;
    std::size_t batch_size = 1;
    std::size_t steps = 20000;
    std::string optimizer = "sgd";
    double momentum = 0.0;
    double grad_noise_sd = 0.0;  // noise-injection level where a variant uses it
    double init_scale = -1.0;    // -1: per-block default
    double bias_scale = 0.01;    // random-bias removal level (continual)

    // [sweep]
    std::vector<double> lambda_grid;
    std::vector<double> gamma_grid;
    std::vector<double> mu_grid;
    std::string rank_mode = "gamma";  // gamma | mu
    double rank_rel_tol = 1e-6;

    // [curvature]
    std::string curvature_kind = "discrete";  // discrete | gaussian
    std::vector<double> curvature_values{2.0, 0.0};
    std::vector<double> curvature_weights{1.0, 1.0};
    double curvature_mean = 0.0;
    double curvature_sd = 1.0;
    double gamma = 0.0;
    std::size_t mc_samples = 20000;
    std::size_t sim_steps = 100000;
    double z0 = 1.0;

    // [verify]
    std::string mutation = "none";  // none | gradient_sign

    bool operator==(const ExperimentConfig&) const = default;
};

// Defaults for one experiment. Throws ConfigError on an unknown name.
ExperimentConfig default_config(const std::string& experiment);

// Sectioned key=value text -> config. Unknown sections or keys, duplicate
// keys, and malformed values are ConfigErrors carrying the line number.
ExperimentConfig parse_experiment_config(const std::string& text);

// Canonical form: every section and key in a fixed order, doubles in
// full-precision decimal. parse(serialize(c)) == c.
std::string serialize_experiment_config(const ExperimentConfig& cfg);

// Experiment runners. Each returns a CSV string that starts with a
// "# "-prefixed echo of the canonical config (strip the prefix and the
// echo reparses to the config that produced the file), then a header row,
// then data rows. Output is byte-identical for identical configs,
// independent of thread count.
std::string run_sweep_sparsity(const ExperimentConfig& cfg);
std::string run_sweep_rank(const ExperimentConfig& cfg);
std::string run_continual(const ExperimentConfig& cfg);
std::string run_lyapunov(const ExperimentConfig& cfg);

// Theorem and consistency checks with measured residuals; ok is false when
// any row fails. cfg.mutation = "gradient_sign" flips one analytic gradient
// entry inside the harness to prove the gradient check catches it.
struct VerifyReport {
    std::string csv;
    bool ok = false;
};
VerifyReport run_verify(const ExperimentConfig& cfg);

// Dispatch on cfg.name. For verify, ok receives the gate result when given.
std::string run_experiment(const ExperimentConfig& cfg, bool* ok = nullptr);

}  // namespace mirrorsym
