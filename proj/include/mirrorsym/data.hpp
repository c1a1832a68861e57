#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mirrorsym/models.hpp"
#include "mirrorsym/rng.hpp"

namespace mirrorsym {

// A generated training set. Regenerating with the same generator arguments
// and the same stream identity yields identical samples.
struct Dataset {
    std::vector<Sample> samples;
    std::string generator_tag;
    std::uint64_t seed = 0;

    std::size_t size() const { return samples.size(); }
    std::size_t input_dim() const { return samples.empty() ? 0 : samples[0].x.size(); }
    std::size_t target_dim() const { return samples.empty() ? 0 : samples[0].y.size(); }
};

// Ordered tasks for continual training. Tasks share the input dimension;
// each carries its own independently drawn target noise.
struct TaskSequence {
    std::vector<Dataset> tasks;
};

// x ~ N(0, I_d), y = mean(x) + eps with eps ~ N(0, noise_sd^2).
Dataset gen_sparse_regression(std::size_t d, std::size_t n, double noise_sd, RngStream& rng);

// x ~ N(0, I_d), y_i = mu x_i + (1 - mu) eps_i with eps_i ~ N(0, 2/i),
// index i counted from 1. Throws std::invalid_argument unless mu is in [0,1].
Dataset gen_matfac(std::size_t d, std::size_t n, double mu, RngStream& rng);

// `tasks` independent draws of gen_sparse_regression, consumed sequentially
// from one stream: tasks=1 reproduces a single gen_sparse_regression call.
TaskSequence gen_continual_tasks(std::size_t d, std::size_t n_per_task, std::size_t tasks,
                                 double noise_sd, RngStream& rng);

// One fresh sample per call, same label rules as the dataset generators.
using SampleDraw = std::function<Sample(RngStream&)>;
SampleDraw sparse_regression_draw(std::size_t d, double noise_sd);
SampleDraw matfac_draw(std::size_t d, double mu);

// Where training batches come from: either a fixed dataset sampled with
// replacement (full-batch reads see it whole), or fresh draws per step.
class SampleSource {
public:
    static SampleSource fixed(Dataset ds);
    static SampleSource stream(SampleDraw draw);

    bool is_fixed() const { return !dataset_.samples.empty() || !draw_; }
    // Throws std::logic_error in stream mode.
    const Dataset& dataset() const;
    std::size_t size() const { return dataset_.samples.size(); }

    // Replaces `out` with batch_size samples: with-replacement indices into
    // the fixed dataset, or fresh draws from the stream.
    void draw_batch(std::size_t batch_size, RngStream& rng, std::vector<Sample>& out) const;

private:
    SampleSource() = default;
    Dataset dataset_;
    SampleDraw draw_;
};

// header x_0,..,x_{d-1},y_0,..; one row per sample, full double precision
std::string dataset_to_csv(const Dataset& ds);
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace mirrorsym
