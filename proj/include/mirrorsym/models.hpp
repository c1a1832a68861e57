#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mirrorsym/matrix.hpp"
#include "mirrorsym/mirror.hpp"
#include "mirrorsym/param.hpp"
#include "mirrorsym/rng.hpp"

namespace mirrorsym {

// One training example. Scalar-output models use y of length 1;
// the data-free toy objective uses empty x and y.
struct Sample {
    std::vector<double> x;
    std::vector<double> y;
};

// Contract for a per-sample objective l(theta, x): pure loss and analytic
// gradient over a flat parameter vector, a sampler for generic test inputs,
// and the list of mirror symmetries the loss provably carries. Implementations
// are immutable after construction; loss/grad are safe to call concurrently.
class PerSampleLoss {
public:
    virtual ~PerSampleLoss() = default;

    const std::string& name() const { return name_; }
    const ParamLayout& layout() const { return layout_; }
    std::size_t dim() const { return layout_.dim(); }

    virtual double loss(const ParamVector& theta, const Sample& s) const = 0;
    virtual ParamVector grad(const ParamVector& theta, const Sample& s) const = 0;
    // out += scale * grad(theta, s). Overridden where the default's
    // temporary allocation would dominate the training loop.
    virtual void add_grad(const ParamVector& theta, const Sample& s, double scale,
                          ParamVector& out) const;
    virtual Sample random_sample(RngStream& rng) const = 0;

    // Mirror symmetries certified for this loss. Built lazily: experiment-scale
    // instances never pay for the dense frames.
    const std::vector<MirrorSymmetry>& mirrors() const;

    // The linear map realized by factorized models, if any (used for rank
    // metrics).
    virtual std::optional<Matrix> product_matrix(const ParamVector& theta) const;
    // Exchangeable unit blocks (for cluster counting); empty when units are
    // not interchangeable.
    virtual std::vector<ParamBlock> unit_ranges() const;

protected:
    PerSampleLoss(std::string name, ParamLayout layout);
    virtual std::vector<MirrorSymmetry> build_mirrors() const;
    void check_theta(const ParamVector& theta) const;

private:
    std::string name_;
    ParamLayout layout_;
    mutable std::once_flag mirrors_once_;
    mutable std::vector<MirrorSymmetry> mirrors_cache_;
};

using ModelPtr = std::shared_ptr<const PerSampleLoss>;

// l = 1/2 (v.x - y)^2 over block (v). No mirrors.
ModelPtr linear_regression(std::size_t dim);

// l = 1/2 ((u*w).x - y)^2 over blocks (u, w), elementwise product.
// Mirrors: whole-pair sign flip, and both scalar-pair directions per index.
ModelPtr hadamard_regression(std::size_t dim);

// l = 1/2 |W U x - y|^2 over blocks (W, U), both dim x dim row-major.
// With residual=true the map is (I+W)(I+U)x, which destroys the rotation
// symmetry, so no mirrors are registered there. Without residual the
// registered mirrors are the joint factor rotations: the coordinate basis of
// the inner index plus two random rank-1 directions.
ModelPtr matrix_factorization(std::size_t dim, bool residual = false);

// Scalar-input two-layer net l = 1/2 (sum_i u_i tanh(w_i x) - y)^2 over
// blocks (w, u). Mirrors: per-unit sign flip of (w_i, u_i).
ModelPtr two_layer_tanh(std::size_t units);

// Width-way MLP l = 1/2 (sum_a u_a tanh(w_a.x) - y)^2, one block per unit
// (w_a then u_a, length in_dim+1). Mirrors: all pairwise unit swaps.
ModelPtr permutation_mlp(std::size_t width, std::size_t in_dim);

// Data-free toy objective l = ((w1 + w2) - 1)^2 over blocks (w1, w2).
// Mirror: the swap of w1 and w2.
ModelPtr footnote_quadratic();

// Symmetry-removal wrappers. RandomBias shifts every parameter by a fixed
// draw beta ~ N(0, scale^2), evaluated once at wrap time; the wrapped model
// registers no mirrors. NoRemoval returns the base model unchanged.
struct NoRemoval {};
struct RandomBias {
    double scale;
};
using SymmetryRemoval = std::variant<NoRemoval, RandomBias>;

ModelPtr apply_symmetry_removal(ModelPtr base, const SymmetryRemoval& kind, RngStream& rng);

// Dataset-averaged loss and gradient.
double mean_loss(const PerSampleLoss& model, const ParamVector& theta,
                 const std::vector<Sample>& samples);
ParamVector mean_grad(const PerSampleLoss& model, const ParamVector& theta,
                      const std::vector<Sample>& samples);

}  // namespace mirrorsym
