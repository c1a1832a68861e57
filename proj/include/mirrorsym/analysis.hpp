#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mirrorsym/data.hpp"
#include "mirrorsym/linalg.hpp"
#include "mirrorsym/mirror.hpp"
#include "mirrorsym/models.hpp"
#include "mirrorsym/rng.hpp"

namespace mirrorsym {

// dataset-averaged loss plus gamma * |theta|^2
double regularized_loss(const PerSampleLoss& model, const ParamVector& theta,
                        const std::vector<Sample>& samples, double gamma);

struct HessianReport {
    Matrix hessian;         // finite-difference Hessian of the bare loss at theta
    double block_residual;  // max |m^T H n|, m spanning ker(O^T), n spanning im(P)
    SymEigResult eig;
};

// At a symmetric point the Hessian cannot mix the symmetric subspace with the
// mirror subspace; block_residual measures the leak. Throws
// std::invalid_argument when theta is not symmetric (residual > 1e-10).
HessianReport hessian_block_check(const PerSampleLoss& model, const MirrorSymmetry& sym,
                                  const ParamVector& theta, const Sample& s);

// Decay strength above which dropping the mirror component pays for itself:
// gamma0 = (L0(u) - L0(theta)) / s^2 with u = (I-P)theta, s = |P theta|.
// For every gamma > max(0, gamma0), L_gamma(u) < L_gamma(theta), exactly.
// Throws std::invalid_argument at symmetric points (s = 0).
double gamma_threshold(const PerSampleLoss& model, const MirrorSymmetry& sym,
                       const ParamVector& theta, const std::vector<Sample>& samples);

// Distribution of the per-sample curvature h seen by the linearized update
// z <- (1 - lambda (h + gamma)) z.
struct DiscreteCurvature {
    std::vector<double> values;
    std::vector<double> weights;  // positive; normalized internally
};
struct GaussianCurvature {
    double mean = 0.0;
    double sd = 1.0;
};
struct EmpiricalCurvature {
    std::vector<double> values;  // equal-weight atoms
};
using CurvatureDistribution = std::variant<DiscreteCurvature, GaussianCurvature, EmpiricalCurvature>;

enum class StabilityVerdict { Collapse, Escape, Inconclusive };
std::string verdict_name(StabilityVerdict v);

struct LyapunovEstimate {
    double lambda_exponent = 0.0;  // E[log|1 - lambda (h + gamma)|]
    double std_error = 0.0;        // 0 for exact enumeration
    std::size_t n_samples = 0;
    std::size_t excluded = 0;      // draws/atoms hitting the log singularity
    StabilityVerdict verdict = StabilityVerdict::Inconclusive;
};

// Exact enumeration over discrete/empirical atoms (std_error 0), Monte Carlo
// over n draws for the Gaussian case. Verdict: Collapse iff
// lambda_exponent + 2 std_error < 0, Escape iff lambda_exponent - 2 std_error
// > 0, else Inconclusive. Atoms where 1 - lambda (h + gamma) = 0 are excluded
// from the average and counted; if nothing remains the exponent is -inf and
// the verdict Collapse.
LyapunovEstimate lyapunov_estimate(const CurvatureDistribution& h, double lambda, double gamma,
                                   std::size_t n, RngStream& rng);

// Second-order-in-lambda stability threshold -2 E[h+gamma] / E[(h+gamma)^2].
// An approximation to the exact log criterion; accurate when lambda (h+gamma)
// stays small. Throws std::domain_error when the second moment vanishes.
double critical_lr_second_order(const CurvatureDistribution& h, double gamma);

struct LinearizedPath {
    bool collapsed = false;
    bool escaped = false;
    std::vector<double> abs_z;  // |z_t| for t = 0.., until a verdict or steps
    std::size_t steps_run = 0;
};

// Runs z_{t+1} = (1 - lambda (h_t + gamma)) z_t with h_t i.i.d. from the
// distribution. Collapse when |z| < 1e-12 |z0|, escape when |z| > 1e12 |z0|.
LinearizedPath simulate_linearized(const CurvatureDistribution& h, double lambda, double gamma,
                                   double z0, std::size_t steps, RngStream& rng);

struct StructureThresholds {
    double sparsity_tol = 1e-6;    // |theta_i| below this counts as zero
    double rank_rel_tol = 1e-6;    // singular values below rel_tol * s_max are rank-void
    double dead_grad_tol = 1e-8;
    double cluster_rel_tol = 1e-3; // units closer than tol*(1+|theta_a|) merge
};

struct StructureMetrics {
    double sparsity = 0.0;
    std::size_t rank = 0;          // 0 when the model has no product matrix
    std::size_t dead_neurons = 0;
    std::size_t cluster_count = 0; // 0 when the model has no unit blocks
};

StructureMetrics structure_metrics(const PerSampleLoss& model, const ParamVector& theta,
                                   const Dataset& data,
                                   const StructureThresholds& tol = {});

// Unit-by-unit cosine similarity of parameter blocks, rows and columns
// reordered by the leading eigenvector of the similarity matrix, so merged
// units appear as contiguous blocks. Empty when the model has no units.
Matrix sorted_unit_correlation(const PerSampleLoss& model, const ParamVector& theta);

struct L1EquivalenceReport {
    double right_derivative = 0.0;  // d/dz of L(theta0 + s n) at z = s^2 -> 0+
    double odd_part = 0.0;          // max |L(theta0+sn) - L(theta0-sn)| over the grid
    double residual_ratio = 0.0;    // shrink factor of the linear-fit residual per s-halving
    double abs_ratio = 0.0;         // same for the unnormalized residual
    bool linear_in_z = false;       // residuals at rounding level; ratios meaningless
    bool pass = false;
};

// Checks that the restriction of the averaged loss to theta0 + s n is an
// even, differentiable function of z = s^2 at 0+: the even part must fit
// a + b z with residual O(z^2) (ratio about 4 under s-halving) and the odd
// part must vanish. s_grid must be >= 3 points, each twice the previous.
// theta0 must be symmetric and n a unit vector in the mirror subspace.
L1EquivalenceReport l1_equivalence_check(const PerSampleLoss& model, const MirrorSymmetry& sym,
                                         const ParamVector& theta0, const ParamVector& n,
                                         const std::vector<Sample>& samples,
                                         const std::vector<double>& s_grid);

}  // namespace mirrorsym
