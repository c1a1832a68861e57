#include <doctest.h>

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mirrorsym/experiment.hpp"

using namespace mirrorsym;

TEST_SUITE_BEGIN("cli");

namespace {

// config echoed at the top of every CSV, one "# " line per serialized line
std::string echoed_config(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) != 0) break;
        out += line.substr(2);
        out += '\n';
    }
    return out;
}

std::size_t data_rows(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::size_t n = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) continue;
        if (!seen_header) {
            seen_header = true;
            continue;
        }
        if (!line.empty()) ++n;
    }
    return n;
}

ExperimentConfig tiny_sparsity() {
    ExperimentConfig c = default_config("sweep_sparsity");
    c.dim = 6;
    c.steps = 300;
    c.replicates = 2;
    c.lambda_grid = {0.05, 0.5};
    return c;
}

}  // namespace

TEST_CASE("serialize/parse round-trips the defaults of every experiment") {
    for (const char* name :
         {"sweep_sparsity", "sweep_rank", "continual", "lyapunov", "verify"}) {
        ExperimentConfig cfg = default_config(name);
        ExperimentConfig back = parse_experiment_config(serialize_experiment_config(cfg));
        CHECK(back == cfg);
    }
    CHECK_THROWS_AS((void)default_config("frobnicate"), ConfigError);
}

TEST_CASE("parse accepts overrides, comments, and blank lines") {
    const std::string text =
        "# top comment\n"
        "\n"
        "[experiment]\n"
        "name = continual\n"
        "seed = 7\n"
        "\n"
        "[train]\n"
        "learning_rate = 0.5\n"
        "# mid comment\n"
        "steps = 12\n"
        "[sweep]\n"
        "lambda = 0.1, 0.2, 0.3\n";
    ExperimentConfig cfg = parse_experiment_config(text);
    CHECK(cfg.name == "continual");
    CHECK(cfg.seed == 7);
    CHECK(cfg.learning_rate == 0.5);
    CHECK(cfg.steps == 12);
    CHECK(cfg.lambda_grid == std::vector<double>{0.1, 0.2, 0.3});
    // untouched keys keep the experiment's defaults
    CHECK(cfg.dim == default_config("continual").dim);
}

TEST_CASE("parse errors carry the offending line number") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            (void)parse_experiment_config(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return 0;
    };

    // unknown key
    CHECK(line_of("[experiment]\nname = verify\n[train]\nwarp = 9\n") == 4);
    // duplicate key
    CHECK(line_of("[experiment]\nname = verify\nseed = 1\nseed = 2\n") == 4);
    // malformed value
    CHECK(line_of("[experiment]\nname = verify\nseed = banana\n") == 3);
    // key before any section
    CHECK(line_of("name = verify\n") == 1);
    // unterminated section header
    CHECK(line_of("[experiment\nname = verify\n") == 1);
    // missing '='
    CHECK(line_of("[experiment]\nname verify\n") == 2);
    // missing experiment name entirely
    CHECK_THROWS_AS((void)parse_experiment_config("[train]\nsteps = 5\n"), ConfigError);
    // unknown experiment name
    CHECK_THROWS_AS((void)parse_experiment_config("[experiment]\nname = nope\n"), ConfigError);
}

TEST_CASE("semantic validation rejects out-of-range settings") {
    auto with = [](const std::string& extra) {
        return "[experiment]\nname = sweep_sparsity\n" + extra;
    };
    CHECK_THROWS_AS((void)parse_experiment_config(with("[train]\nmomentum = 1.0\n")),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_experiment_config(with("[train]\nlearning_rate = -1\n")),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_experiment_config(with("[train]\noptimizer = newton\n")),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_experiment_config(with("[experiment]\nthreads = 0\n")),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_experiment_config(with("[sweep]\nlambda =\n")), ConfigError);
    CHECK_THROWS_AS(
        (void)parse_experiment_config("[experiment]\nname = sweep_rank\n[sweep]\nmu = 1.5\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_experiment_config("[experiment]\nname = sweep_rank\n[sweep]\nrank_mode = x\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_experiment_config("[experiment]\nname = lyapunov\n[sweep]\nlambda = 0, 1\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_experiment_config("[experiment]\nname = lyapunov\n[curvature]\nz0 = 0\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_experiment_config("[experiment]\nname = verify\n[verify]\nmutation = scramble\n"),
        ConfigError);
}

TEST_CASE("every runner echoes a config block that reparses to its input") {
    ExperimentConfig sp = tiny_sparsity();
    CHECK(parse_experiment_config(echoed_config(run_sweep_sparsity(sp))) == sp);

    ExperimentConfig ly = default_config("lyapunov");
    ly.lambda_grid = {0.5, 1.5};
    ly.mc_samples = 2000;
    ly.sim_steps = 2000;
    CHECK(parse_experiment_config(echoed_config(run_lyapunov(ly))) == ly);
}

TEST_CASE("runner output is deterministic and thread-count invariant") {
    ExperimentConfig ly = default_config("lyapunov");
    ly.lambda_grid = {0.5, 1.5};
    ly.mc_samples = 2000;
    ly.sim_steps = 2000;
    CHECK(run_lyapunov(ly) == run_lyapunov(ly));

    ExperimentConfig sp = tiny_sparsity();
    sp.threads = 1;
    const std::string one = run_sweep_sparsity(sp);
    sp.threads = 4;
    std::string four = run_sweep_sparsity(sp);
    // thread count is part of the echoed config; the data must match exactly
    const std::string tag1 = "threads = 1", tag4 = "threads = 4";
    four.replace(four.find(tag4), tag4.size(), tag1);
    CHECK(one == four);
}

TEST_CASE("sparsity runner emits one row per model/lambda/replicate") {
    ExperimentConfig sp = tiny_sparsity();
    const std::string csv = run_sweep_sparsity(sp);
    CHECK(csv.find("model,lambda,replicate,final_sparsity,final_loss") != std::string::npos);
    CHECK(data_rows(csv) == 2 * 2 * 2);
}

TEST_CASE("rank runner covers both sweep modes") {
    ExperimentConfig rk = default_config("sweep_rank");
    rk.dim = 8;
    rk.points = 40;
    rk.steps = 150;
    rk.replicates = 1;
    rk.gamma_grid = {0.0, 0.1};
    const std::string csv = run_sweep_rank(rk);
    CHECK(csv.find("variant,gamma,lambda,replicate,rank,final_loss") != std::string::npos);
    CHECK(data_rows(csv) == 2);

    rk.rank_mode = "mu";
    rk.mu_grid = {0.0, 1.0};
    // fixed-dataset descent cannot emulate the sampling noise this mode studies
    CHECK_THROWS_AS((void)run_sweep_rank(rk), ConfigError);
    rk.optimizer = "sgd";
    rk.learning_rate = 0.01;
    const std::string mu_csv = run_sweep_rank(rk);
    CHECK(mu_csv.find("variant,mu,lambda,replicate,rank,final_loss") != std::string::npos);
    CHECK(data_rows(mu_csv) == 2 * 2);
}

TEST_CASE("continual runner reports all four variants over all tasks") {
    ExperimentConfig ct = default_config("continual");
    ct.dim = 10;
    ct.points_per_task = 20;
    ct.tasks = 3;
    ct.steps = 200;
    const std::string csv = run_continual(ct);
    CHECK(csv.find("variant,task,dead_neurons") != std::string::npos);
    CHECK(data_rows(csv) == 4 * 3);
    for (const char* v : {"vanilla,1,", "symmetric,3,", "symmetric_noise,2,", "symmetric_bias,1,"})
        CHECK(csv.find(v) != std::string::npos);
}

TEST_CASE("lyapunov runner tabulates estimates against the closed forms") {
    ExperimentConfig ly = default_config("lyapunov");
    ly.lambda_grid = {0.25, 1.5};
    ly.mc_samples = 4000;
    ly.sim_steps = 4000;
    const std::string csv = run_lyapunov(ly);
    CHECK(csv.find("lambda,gamma,lyapunov,stderr,verdict,eq5_threshold,simulated_verdict") !=
          std::string::npos);
    CHECK(data_rows(csv) == 2);
    CHECK(csv.find(",collapse,") != std::string::npos);
    CHECK(csv.find(",escape,") != std::string::npos);
}

TEST_CASE("verification harness passes clean and flags a broken gradient") {
    ExperimentConfig vf = default_config("verify");
    VerifyReport clean = run_verify(vf);
    CHECK(clean.ok);
    CHECK(clean.csv.find("analytic_gradient,1,") != std::string::npos);

    vf.mutation = "gradient_sign";
    VerifyReport broken = run_verify(vf);
    CHECK_FALSE(broken.ok);
    CHECK(broken.csv.find("analytic_gradient,0,") != std::string::npos);
}

TEST_CASE("run_experiment dispatches on the configured name") {
    ExperimentConfig sp = tiny_sparsity();
    bool ok = false;
    CHECK(run_experiment(sp, &ok) == run_sweep_sparsity(sp));
    CHECK(ok);

    ExperimentConfig vf = default_config("verify");
    vf.mutation = "gradient_sign";
    (void)run_experiment(vf, &ok);
    CHECK_FALSE(ok);
}

TEST_SUITE_END();
