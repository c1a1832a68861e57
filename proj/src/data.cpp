#include "mirrorsym/data.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mirrorsym/matrix.hpp"

namespace mirrorsym {

namespace {

Sample draw_sparse(std::size_t d, double noise_sd, RngStream& rng) {
    Sample s;
    s.x.resize(d);
    double sum = 0.0;
    for (auto& v : s.x) {
        v = rng.gaussian();
        sum += v;
    }
    s.y = {sum / double(d) + rng.gaussian(0.0, noise_sd)};
    return s;
}

Sample draw_matfac(std::size_t d, double mu, RngStream& rng) {
    Sample s;
    s.x.resize(d);
    s.y.resize(d);
    for (auto& v : s.x) v = rng.gaussian();
    for (std::size_t i = 0; i < d; ++i) {
        double eps = rng.gaussian(0.0, std::sqrt(2.0 / double(i + 1)));
        s.y[i] = mu * s.x[i] + (1.0 - mu) * eps;
    }
    return s;
}

}  // namespace

Dataset gen_sparse_regression(std::size_t d, std::size_t n, double noise_sd, RngStream& rng) {
    if (d < 1 || n < 1) throw std::invalid_argument("gen_sparse_regression: d and n must be >= 1");
    Dataset ds;
    ds.generator_tag = "sparse_regression";
    ds.seed = rng.seed();
    ds.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) ds.samples.push_back(draw_sparse(d, noise_sd, rng));
    return ds;
}

Dataset gen_matfac(std::size_t d, std::size_t n, double mu, RngStream& rng) {
    if (d < 1 || n < 1) throw std::invalid_argument("gen_matfac: d and n must be >= 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("gen_matfac: mu must be in [0,1]");
    Dataset ds;
    ds.generator_tag = "matfac";
    ds.seed = rng.seed();
    ds.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) ds.samples.push_back(draw_matfac(d, mu, rng));
    return ds;
}

TaskSequence gen_continual_tasks(std::size_t d, std::size_t n_per_task, std::size_t tasks,
                                 double noise_sd, RngStream& rng) {
    if (tasks < 1) throw std::invalid_argument("gen_continual_tasks: tasks must be >= 1");
    TaskSequence seq;
    seq.tasks.reserve(tasks);
    for (std::size_t t = 0; t < tasks; ++t)
        seq.tasks.push_back(gen_sparse_regression(d, n_per_task, noise_sd, rng));
    return seq;
}

SampleDraw sparse_regression_draw(std::size_t d, double noise_sd) {
    return [d, noise_sd](RngStream& rng) { return draw_sparse(d, noise_sd, rng); };
}

SampleDraw matfac_draw(std::size_t d, double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("matfac_draw: mu must be in [0,1]");
    return [d, mu](RngStream& rng) { return draw_matfac(d, mu, rng); };
}

SampleSource SampleSource::fixed(Dataset ds) {
    if (ds.samples.empty()) throw std::invalid_argument("SampleSource::fixed: empty dataset");
    SampleSource src;
    src.dataset_ = std::move(ds);
    return src;
}

SampleSource SampleSource::stream(SampleDraw draw) {
    if (!draw) throw std::invalid_argument("SampleSource::stream: empty draw function");
    SampleSource src;
    src.draw_ = std::move(draw);
    return src;
}

const Dataset& SampleSource::dataset() const {
    if (!is_fixed()) throw std::logic_error("SampleSource: no dataset in stream mode");
    return dataset_;
}

void SampleSource::draw_batch(std::size_t batch_size, RngStream& rng,
                              std::vector<Sample>& out) const {
    out.clear();
    out.reserve(batch_size);
    if (is_fixed()) {
        for (std::size_t k = 0; k < batch_size; ++k)
            out.push_back(dataset_.samples[rng.index(dataset_.samples.size())]);
    } else {
        for (std::size_t k = 0; k < batch_size; ++k) out.push_back(draw_(rng));
    }
}

std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    const std::size_t d = ds.input_dim();
    const std::size_t m = ds.target_dim();
    for (std::size_t j = 0; j < d; ++j) {
        if (j > 0) out += ',';
        out += "x_" + std::to_string(j);
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (d + j > 0) out += ',';
        out += "y_" + std::to_string(j);
    }
    out += '\n';
    for (const auto& s : ds.samples) {
        for (std::size_t j = 0; j < d; ++j) {
            if (j > 0) out += ',';
            out += g17(s.x[j]);
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (d + j > 0) out += ',';
            out += g17(s.y[j]);
        }
        out += '\n';
    }
    return out;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    f << dataset_to_csv(ds);
}

}  // namespace mirrorsym
