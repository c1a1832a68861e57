#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mirrorsym/experiment.hpp"

namespace {

// config file < MIRRORSYM_* environment < command-line flags
struct Overrides {
    CLI::App* cmd = nullptr;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t threads = 0;
};

void apply_env(mirrorsym::ExperimentConfig& cfg) {
    if (const char* v = std::getenv("MIRRORSYM_SEED")) cfg.seed = std::stoull(v);
    if (const char* v = std::getenv("MIRRORSYM_OUT")) cfg.out = v;
    if (const char* v = std::getenv("MIRRORSYM_THREADS")) cfg.threads = std::stoull(v);
}

mirrorsym::ExperimentConfig load(const Overrides& o, const std::string& experiment) {
    mirrorsym::ExperimentConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw mirrorsym::ConfigError(0, "cannot open config file " + o.config_path);
        std::ostringstream text;
        text << in.rdbuf();
        cfg = mirrorsym::parse_experiment_config(text.str());
        if (cfg.name != experiment)
            throw mirrorsym::ConfigError(0, "config is for experiment '" + cfg.name +
                                                "' but the subcommand is '" + experiment + "'");
    } else {
        cfg = mirrorsym::default_config(experiment);
    }
    apply_env(cfg);
    if (o.cmd->count("--seed")) cfg.seed = o.seed;
    if (o.cmd->count("--out")) cfg.out = o.out;
    if (o.cmd->count("--threads")) cfg.threads = o.threads;
    if (cfg.threads == 0) throw mirrorsym::ConfigError(0, "threads must be >= 1");
    return cfg;
}

void write_result(const mirrorsym::ExperimentConfig& cfg, const std::string& csv) {
    if (cfg.out.empty()) {
        std::cout << csv;
        return;
    }
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) throw mirrorsym::ConfigError(0, "cannot write output file " + cfg.out);
    out << csv;
}

Overrides* add_command(CLI::App& app, std::deque<Overrides>& slots, const std::string& name,
                       const std::string& help) {
    slots.push_back({});
    Overrides& o = slots.back();
    o.cmd = app.add_subcommand(name, help);
    o.cmd->add_option("--config", o.config_path, "experiment config file");
    o.cmd->add_option("--seed", o.seed, "master seed");
    o.cmd->add_option("--out", o.out, "output CSV path (default: stdout)");
    o.cmd->add_option("--threads", o.threads, "sweep worker threads");
    return &o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mirror-symmetry experiment driver"};
    app.require_subcommand(1);

    std::deque<Overrides> slots;
    struct Entry {
        Overrides* o;
        std::string experiment;
    };
    std::vector<Entry> entries = {
        {add_command(app, slots, "sweep-sparsity",
                     "learning-rate sweep of sparsity for plain and factored regression"),
         "sweep_sparsity"},
        {add_command(app, slots, "sweep-rank",
                     "weight-decay or teacher-noise sweep of factorization rank"),
         "sweep_rank"},
        {add_command(app, slots, "continual",
                     "sequential-task dead-neuron counts for four model variants"),
         "continual"},
        {add_command(app, slots, "lyapunov",
                     "stability exponents and verdicts over a learning-rate grid"),
         "lyapunov"},
        {add_command(app, slots, "verify", "theorem and consistency check suite"), "verify"},
    };

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& e : entries) {
            if (!e.o->cmd->parsed()) continue;
            const auto cfg = load(*e.o, e.experiment);
            bool ok = true;
            const std::string csv = mirrorsym::run_experiment(cfg, &ok);
            write_result(cfg, csv);
            if (!ok) {
                std::cerr << "verification failed\n";
                return 1;
            }
            return 0;
        }
    } catch (const mirrorsym::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
