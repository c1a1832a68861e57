#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mirrorsym/experiment.hpp"
#include "mirrorsym/matrix.hpp"
#include "mirrorsym/optimize.hpp"

namespace mirrorsym {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& v, std::size_t line, const std::string& key) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, "value of '" + key + "' is not a number: '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, std::size_t line, const std::string& key) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("");
        std::uint64_t x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, "value of '" + key + "' is not a non-negative integer: '" + v +
                                    "'");
    }
}

std::vector<double> parse_list(const std::string& v, std::size_t line, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError(line, "empty element in list '" + key + "'");
        out.push_back(parse_double(item, line, key));
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += g17(v[i]);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, std::size_t)>;

// One entry per legal "section.key". Anything else is rejected with its line.
const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.name",
         [](ExperimentConfig& c, const std::string& v, std::size_t) { c.name = v; }},
        {"experiment.seed",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.seed = parse_u64(v, l, "seed");
         }},
        {"experiment.replicates",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.replicates = parse_u64(v, l, "replicates");
         }},
        {"experiment.threads",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.threads = parse_u64(v, l, "threads");
         }},
        {"experiment.out",
         [](ExperimentConfig& c, const std::string& v, std::size_t) { c.out = v; }},
        {"model.dim",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.dim = parse_u64(v, l, "dim");
         }},
        {"data.points",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.points = parse_u64(v, l, "points");
         }},
        {"data.points_per_task",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.points_per_task = parse_u64(v, l, "points_per_task");
         }},
        {"data.tasks",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.tasks = parse_u64(v, l, "tasks");
         }},
        {"data.noise_sd",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.noise_sd = parse_double(v, l, "noise_sd");
         }},
        {"data.mu",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.mu = parse_double(v, l, "mu");
         }},
        {"train.learning_rate",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.learning_rate = parse_double(v, l, "learning_rate");
         }},
        {"train.weight_decay",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.weight_decay = parse_double(v, l, "weight_decay");
         }},
        {"train.batch_size",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.batch_size = parse_u64(v, l, "batch_size");
         }},
        {"train.steps",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.steps = parse_u64(v, l, "steps");
         }},
        {"train.optimizer",
         [](ExperimentConfig& c, const std::string& v, std::size_t) { c.optimizer = v; }},
        {"train.momentum",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.momentum = parse_double(v, l, "momentum");
         }},
        {"train.grad_noise_sd",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.grad_noise_sd = parse_double(v, l, "grad_noise_sd");
         }},
        {"train.init_scale",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.init_scale = parse_double(v, l, "init_scale");
         }},
        {"train.bias_scale",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.bias_scale = parse_double(v, l, "bias_scale");
         }},
        {"sweep.lambda",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.lambda_grid = parse_list(v, l, "lambda");
         }},
        {"sweep.gamma",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.gamma_grid = parse_list(v, l, "gamma");
         }},
        {"sweep.mu",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.mu_grid = parse_list(v, l, "mu");
         }},
        {"sweep.rank_mode",
         [](ExperimentConfig& c, const std::string& v, std::size_t) { c.rank_mode = v; }},
        {"sweep.rank_rel_tol",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.rank_rel_tol = parse_double(v, l, "rank_rel_tol");
         }},
        {"curvature.kind",
         [](ExperimentConfig& c, const std::string& v, std::size_t) { c.curvature_kind = v; }},
        {"curvature.values",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.curvature_values = parse_list(v, l, "values");
         }},
        {"curvature.weights",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.curvature_weights = parse_list(v, l, "weights");
         }},
        {"curvature.mean",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.curvature_mean = parse_double(v, l, "mean");
         }},
        {"curvature.sd",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.curvature_sd = parse_double(v, l, "sd");
         }},
        {"curvature.gamma",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.gamma = parse_double(v, l, "gamma");
         }},
        {"curvature.mc_samples",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.mc_samples = parse_u64(v, l, "mc_samples");
         }},
        {"curvature.sim_steps",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.sim_steps = parse_u64(v, l, "sim_steps");
         }},
        {"curvature.z0",
         [](ExperimentConfig& c, const std::string& v, std::size_t l) {
             c.z0 = parse_double(v, l, "z0");
         }},
        {"verify.mutation",
         [](ExperimentConfig& c, const std::string& v, std::size_t) { c.mutation = v; }},
    };
    return table;
}

struct Entry {
    std::string key;  // section.key
    std::string value;
    std::size_t line;
};

std::vector<Entry> tokenize(const std::string& text) {
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line_no, "unterminated section header: '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(line_no, "empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected 'key = value': '" + line + "'");
        if (section.empty())
            throw ConfigError(line_no, "key before any [section] header");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(line_no, "empty key");
        entries.push_back({section + "." + key, trim(line.substr(eq + 1)), line_no});
    }
    return entries;
}

void check_in(const std::string& value, const std::set<std::string>& allowed,
              const std::string& what) {
    if (!allowed.count(value))
        throw ConfigError(0, "unknown " + what + " '" + value + "'");
}

void validate(const ExperimentConfig& c) {
    if (c.replicates == 0) throw ConfigError(0, "replicates must be >= 1");
    if (c.threads == 0) throw ConfigError(0, "threads must be >= 1");
    if (c.dim == 0) throw ConfigError(0, "dim must be >= 1");
    if (c.batch_size == 0) throw ConfigError(0, "batch_size must be >= 1");
    if (c.steps == 0) throw ConfigError(0, "steps must be >= 1");
    if (!(c.learning_rate >= 0.0)) throw ConfigError(0, "learning_rate must be >= 0");
    if (!(c.weight_decay >= 0.0)) throw ConfigError(0, "weight_decay must be >= 0");
    if (!(c.momentum >= 0.0) || c.momentum >= 1.0)
        throw ConfigError(0, "momentum must be in [0, 1)");
    if (!(c.grad_noise_sd >= 0.0)) throw ConfigError(0, "grad_noise_sd must be >= 0");
    if (!(c.noise_sd >= 0.0)) throw ConfigError(0, "noise_sd must be >= 0");
    if (c.init_scale != -1.0 && !(c.init_scale > 0.0))
        throw ConfigError(0, "init_scale must be positive (or -1 for the default)");
    if (!(c.rank_rel_tol > 0.0)) throw ConfigError(0, "rank_rel_tol must be positive");
    try {
        parse_optimizer(c.optimizer);
    } catch (const std::exception& e) {
        throw ConfigError(0, e.what());
    }
    check_in(c.rank_mode, {"gamma", "mu"}, "rank_mode");
    check_in(c.curvature_kind, {"discrete", "gaussian"}, "curvature kind");
    check_in(c.mutation, {"none", "gradient_sign"}, "mutation");

    if (c.name == "sweep_sparsity" && c.lambda_grid.empty())
        throw ConfigError(0, "sweep_sparsity needs a sweep.lambda grid");
    if (c.name == "sweep_rank") {
        if (c.rank_mode == "gamma" && c.gamma_grid.empty())
            throw ConfigError(0, "sweep_rank in gamma mode needs a sweep.gamma grid");
        if (c.rank_mode == "mu" && c.mu_grid.empty())
            throw ConfigError(0, "sweep_rank in mu mode needs a sweep.mu grid");
        if (!(c.mu >= 0.0 && c.mu <= 1.0)) throw ConfigError(0, "data.mu must be in [0, 1]");
        for (double m : c.mu_grid)
            if (!(m >= 0.0 && m <= 1.0)) throw ConfigError(0, "sweep.mu values must be in [0, 1]");
        if (c.points == 0) throw ConfigError(0, "points must be >= 1");
    }
    if (c.name == "continual") {
        if (c.tasks == 0) throw ConfigError(0, "tasks must be >= 1");
        if (c.points_per_task == 0) throw ConfigError(0, "points_per_task must be >= 1");
        if (!(c.bias_scale > 0.0)) throw ConfigError(0, "bias_scale must be positive");
    }
    if (c.name == "lyapunov") {
        if (c.lambda_grid.empty()) throw ConfigError(0, "lyapunov needs a sweep.lambda grid");
        for (double l : c.lambda_grid)
            if (!(l > 0.0)) throw ConfigError(0, "lyapunov lambda values must be positive");
        if (!(c.gamma >= 0.0)) throw ConfigError(0, "curvature.gamma must be >= 0");
        if (c.curvature_kind == "discrete") {
            if (c.curvature_values.empty() ||
                c.curvature_values.size() != c.curvature_weights.size())
                throw ConfigError(0, "curvature values and weights must be equal-length and "
                                     "non-empty");
        } else {
            if (!(c.curvature_sd >= 0.0)) throw ConfigError(0, "curvature.sd must be >= 0");
            if (c.mc_samples < 2) throw ConfigError(0, "mc_samples must be >= 2");
        }
        if (c.sim_steps == 0) throw ConfigError(0, "sim_steps must be >= 1");
        if (c.z0 == 0.0) throw ConfigError(0, "z0 must be nonzero");
    }
}

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + message
                              : "config: " + message),
      line_(line) {}

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig c;
    c.name = experiment;
    if (experiment == "sweep_sparsity") {
        c.lambda_grid = {0.01, 0.03, 0.1, 0.3, 1.0};
    } else if (experiment == "sweep_rank") {
        c.optimizer = "gd";
        c.learning_rate = 0.2;
        c.steps = 3000;
        c.init_scale = 0.15;
        c.gamma_grid = {0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
        c.mu_grid = {0.0, 0.5, 1.0};
    } else if (experiment == "continual") {
        c.dim = 100;
        c.noise_sd = 0.1;
        c.optimizer = "adaptive_no_momentum";
        c.learning_rate = 0.01;
        c.weight_decay = 0.003;
        c.batch_size = 16;
        c.steps = 25000;
        c.grad_noise_sd = 0.01;
        c.replicates = 1;
    } else if (experiment == "lyapunov") {
        c.lambda_grid = {0.25, 0.75, 0.9, 0.95, 1.05, 1.1, 1.25, 1.5};
    } else if (experiment == "verify") {
        // struct defaults
    } else {
        throw ConfigError(0, "unknown experiment '" + experiment + "'");
    }
    return c;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    const std::vector<Entry> entries = tokenize(text);

    std::string name;
    std::size_t name_line = 0;
    for (const auto& e : entries)
        if (e.key == "experiment.name") {
            if (name_line) throw ConfigError(e.line, "duplicate key 'experiment.name'");
            name = e.value;
            name_line = e.line;
        }
    if (!name_line) throw ConfigError(0, "missing [experiment] name");

    ExperimentConfig cfg;
    try {
        cfg = default_config(name);
    } catch (const ConfigError&) {
        throw ConfigError(name_line, "unknown experiment '" + name + "'");
    }

    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (!seen.insert(e.key).second)
            throw ConfigError(e.line, "duplicate key '" + e.key + "'");
        auto it = setters().find(e.key);
        if (it == setters().end())
            throw ConfigError(e.line, "unknown key '" + e.key + "'");
        it->second(cfg, e.value, e.line);
    }
    validate(cfg);
    return cfg;
}

std::string serialize_experiment_config(const ExperimentConfig& c) {
    std::string s;
    s += "[experiment]\n";
    s += "name = " + c.name + "\n";
    s += "seed = " + std::to_string(c.seed) + "\n";
    s += "replicates = " + std::to_string(c.replicates) + "\n";
    s += "threads = " + std::to_string(c.threads) + "\n";
    s += "out = " + c.out + "\n";
    s += "[model]\n";
    s += "dim = " + std::to_string(c.dim) + "\n";
    s += "[data]\n";
    s += "points = " + std::to_string(c.points) + "\n";
    s += "points_per_task = " + std::to_string(c.points_per_task) + "\n";
    s += "tasks = " + std::to_string(c.tasks) + "\n";
    s += "noise_sd = " + g17(c.noise_sd) + "\n";
    s += "mu = " + g17(c.mu) + "\n";
    s += "[train]\n";
    s += "learning_rate = " + g17(c.learning_rate) + "\n";
    s += "weight_decay = " + g17(c.weight_decay) + "\n";
    s += "batch_size = " + std::to_string(c.batch_size) + "\n";
    s += "steps = " + std::to_string(c.steps) + "\n";
    s += "optimizer = " + c.optimizer + "\n";
    s += "momentum = " + g17(c.momentum) + "\n";
    s += "grad_noise_sd = " + g17(c.grad_noise_sd) + "\n";
    s += "init_scale = " + g17(c.init_scale) + "\n";
    s += "bias_scale = " + g17(c.bias_scale) + "\n";
    s += "[sweep]\n";
    s += "lambda = " + join(c.lambda_grid) + "\n";
    s += "gamma = " + join(c.gamma_grid) + "\n";
    s += "mu = " + join(c.mu_grid) + "\n";
    s += "rank_mode = " + c.rank_mode + "\n";
    s += "rank_rel_tol = " + g17(c.rank_rel_tol) + "\n";
    s += "[curvature]\n";
    s += "kind = " + c.curvature_kind + "\n";
    s += "values = " + join(c.curvature_values) + "\n";
    s += "weights = " + join(c.curvature_weights) + "\n";
    s += "mean = " + g17(c.curvature_mean) + "\n";
    s += "sd = " + g17(c.curvature_sd) + "\n";
    s += "gamma = " + g17(c.gamma) + "\n";
    s += "mc_samples = " + std::to_string(c.mc_samples) + "\n";
    s += "sim_steps = " + std::to_string(c.sim_steps) + "\n";
    s += "z0 = " + g17(c.z0) + "\n";
    s += "[verify]\n";
    s += "mutation = " + c.mutation + "\n";
    return s;
}

}  // namespace mirrorsym
