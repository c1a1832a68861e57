#include "mirrorsym/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mirrorsym/finite_diff.hpp"
#include "mirrorsym/optimize.hpp"

namespace mirrorsym {

double regularized_loss(const PerSampleLoss& model, const ParamVector& theta,
                        const std::vector<Sample>& samples, double gamma) {
    return mean_loss(model, theta, samples) + gamma * sq_norm(theta);
}

namespace {

// Orthonormal basis of ker(O^T): coordinate directions projected off im(P)
// and off each other, keeping the d - k independent survivors.
Matrix kernel_basis(const MirrorSymmetry& sym) {
    const std::size_t d = sym.dim();
    const std::size_t k = sym.rank();
    const Matrix& frame = sym.frame();
    std::vector<std::vector<double>> picked;
    picked.reserve(d - k);
    for (std::size_t i = 0; i < d && picked.size() < d - k; ++i) {
        std::vector<double> v(d, 0.0);
        v[i] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < k; ++c) {
                double proj = 0.0;
                for (std::size_t r = 0; r < d; ++r) proj += frame(r, c) * v[r];
                for (std::size_t r = 0; r < d; ++r) v[r] -= proj * frame(r, c);
            }
            for (const auto& p : picked) {
                double proj = 0.0;
                for (std::size_t r = 0; r < d; ++r) proj += p[r] * v[r];
                for (std::size_t r = 0; r < d; ++r) v[r] -= proj * p[r];
            }
        }
        double nv = norm2(v);
        if (nv > 1e-8) {
            for (auto& x : v) x /= nv;
            picked.push_back(std::move(v));
        }
    }
    if (picked.size() != d - k)
        throw std::logic_error("kernel_basis: completion failed");
    Matrix out(d, d - k);
    for (std::size_t c = 0; c < picked.size(); ++c)
        for (std::size_t r = 0; r < d; ++r) out(r, c) = picked[c][r];
    return out;
}

}  // namespace

HessianReport hessian_block_check(const PerSampleLoss& model, const MirrorSymmetry& sym,
                                  const ParamVector& theta, const Sample& s) {
    if (mirror_residual(sym, theta) > 1e-10)
        throw std::invalid_argument("hessian_block_check: theta is not a symmetric point");
    HessianReport report;
    report.hessian =
        finite_diff([&](const ParamVector& t) { return model.loss(t, s); }, theta).hessian;

    report.block_residual = 0.0;
    if (sym.rank() > 0 && sym.rank() < sym.dim()) {
        Matrix ho = report.hessian * sym.frame();       // d x k
        Matrix mixed = transpose(kernel_basis(sym)) * ho;  // (d-k) x k
        report.block_residual = max_abs(mixed);
    }
    report.eig = sym_eig(report.hessian);
    return report;
}

double gamma_threshold(const PerSampleLoss& model, const MirrorSymmetry& sym,
                       const ParamVector& theta, const std::vector<Sample>& samples) {
    const double s = mirror_residual(sym, theta);
    if (s <= 1e-14 * (1.0 + norm2(theta)))
        throw std::invalid_argument("gamma_threshold: theta is already symmetric");
    ParamVector u = project_symmetric(sym, theta);
    return (mean_loss(model, u, samples) - mean_loss(model, theta, samples)) / (s * s);
}

std::string verdict_name(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::Collapse: return "collapse";
        case StabilityVerdict::Escape: return "escape";
        case StabilityVerdict::Inconclusive: return "inconclusive";
    }
    throw std::logic_error("verdict_name: bad enum");
}

namespace {

void validate_discrete(const std::vector<double>& values, const std::vector<double>& weights) {
    if (values.empty()) throw std::invalid_argument("curvature distribution: no atoms");
    if (values.size() != weights.size())
        throw std::invalid_argument("curvature distribution: values/weights size mismatch");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("curvature distribution: weights must be positive");
}

StabilityVerdict classify(double exponent, double se) {
    if (exponent + 2.0 * se < 0.0) return StabilityVerdict::Collapse;
    if (exponent - 2.0 * se > 0.0) return StabilityVerdict::Escape;
    return StabilityVerdict::Inconclusive;
}

LyapunovEstimate enumerate_atoms(const std::vector<double>& values,
                                 const std::vector<double>& weights, double lambda,
                                 double gamma) {
    validate_discrete(values, weights);
    double acc = 0.0, kept_weight = 0.0;
    std::size_t excluded = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = 1.0 - lambda * (values[i] + gamma);
        if (f == 0.0) {
            ++excluded;
            continue;
        }
        acc += weights[i] * std::log(std::abs(f));
        kept_weight += weights[i];
    }
    LyapunovEstimate est;
    est.n_samples = values.size();
    est.excluded = excluded;
    est.std_error = 0.0;
    est.lambda_exponent =
        kept_weight > 0.0 ? acc / kept_weight : -std::numeric_limits<double>::infinity();
    est.verdict = classify(est.lambda_exponent, est.std_error);
    return est;
}

double draw_curvature(const CurvatureDistribution& h, RngStream& rng) {
    if (const auto* d = std::get_if<DiscreteCurvature>(&h)) {
        double total = std::accumulate(d->weights.begin(), d->weights.end(), 0.0);
        double u = rng.uniform() * total;
        for (std::size_t i = 0; i < d->values.size(); ++i) {
            u -= d->weights[i];
            if (u < 0.0) return d->values[i];
        }
        return d->values.back();
    }
    if (const auto* g = std::get_if<GaussianCurvature>(&h)) return rng.gaussian(g->mean, g->sd);
    const auto& e = std::get<EmpiricalCurvature>(h);
    return e.values[rng.index(e.values.size())];
}

}  // namespace

LyapunovEstimate lyapunov_estimate(const CurvatureDistribution& h, double lambda, double gamma,
                                   std::size_t n, RngStream& rng) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lyapunov_estimate: lambda must be positive");
    if (!std::isfinite(gamma)) throw std::invalid_argument("lyapunov_estimate: bad gamma");

    if (const auto* d = std::get_if<DiscreteCurvature>(&h))
        return enumerate_atoms(d->values, d->weights, lambda, gamma);
    if (const auto* e = std::get_if<EmpiricalCurvature>(&h)) {
        std::vector<double> w(e->values.size(), 1.0);
        return enumerate_atoms(e->values, w, lambda, gamma);
    }

    const auto& g = std::get<GaussianCurvature>(h);
    if (n < 2) throw std::invalid_argument("lyapunov_estimate: need n >= 2 Monte-Carlo draws");
    double mean = 0.0, m2 = 0.0;
    std::size_t kept = 0, excluded = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = 1.0 - lambda * (rng.gaussian(g.mean, g.sd) + gamma);
        if (f == 0.0) {
            ++excluded;
            continue;
        }
        const double x = std::log(std::abs(f));
        ++kept;
        const double delta = x - mean;
        mean += delta / double(kept);
        m2 += delta * (x - mean);
    }
    LyapunovEstimate est;
    est.n_samples = n;
    est.excluded = excluded;
    if (kept == 0) {
        est.lambda_exponent = -std::numeric_limits<double>::infinity();
        est.std_error = 0.0;
    } else {
        est.lambda_exponent = mean;
        est.std_error = kept > 1 ? std::sqrt(m2 / double(kept - 1) / double(kept)) : 0.0;
    }
    est.verdict = classify(est.lambda_exponent, est.std_error);
    return est;
}

double critical_lr_second_order(const CurvatureDistribution& h, double gamma) {
    double m1 = 0.0, m2 = 0.0;
    if (const auto* g = std::get_if<GaussianCurvature>(&h)) {
        m1 = g->mean + gamma;
        m2 = m1 * m1 + g->sd * g->sd;
    } else {
        const std::vector<double>* values;
        std::vector<double> unit;
        const std::vector<double>* weights;
        if (const auto* d = std::get_if<DiscreteCurvature>(&h)) {
            validate_discrete(d->values, d->weights);
            values = &d->values;
            weights = &d->weights;
        } else {
            const auto& e = std::get<EmpiricalCurvature>(h);
            unit.assign(e.values.size(), 1.0);
            validate_discrete(e.values, unit);
            values = &e.values;
            weights = &unit;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < values->size(); ++i) {
            const double x = (*values)[i] + gamma;
            m1 += (*weights)[i] * x;
            m2 += (*weights)[i] * x * x;
            total += (*weights)[i];
        }
        m1 /= total;
        m2 /= total;
    }
    if (m2 == 0.0) throw std::domain_error("critical_lr_second_order: zero second moment");
    return -2.0 * m1 / m2;
}

LinearizedPath simulate_linearized(const CurvatureDistribution& h, double lambda, double gamma,
                                   double z0, std::size_t steps, RngStream& rng) {
    if (z0 == 0.0 || !std::isfinite(z0))
        throw std::invalid_argument("simulate_linearized: z0 must be nonzero");
    if (const auto* d = std::get_if<DiscreteCurvature>(&h)) validate_discrete(d->values, d->weights);

    LinearizedPath path;
    const double collapse_at = 1e-12 * std::abs(z0);
    const double escape_at = 1e12 * std::abs(z0);
    double z = z0;
    path.abs_z.push_back(std::abs(z));
    for (std::size_t t = 1; t <= steps; ++t) {
        z *= 1.0 - lambda * (draw_curvature(h, rng) + gamma);
        path.abs_z.push_back(std::abs(z));
        path.steps_run = t;
        if (std::abs(z) < collapse_at) {
            path.collapsed = true;
            break;
        }
        if (std::abs(z) > escape_at) {
            path.escaped = true;
            break;
        }
    }
    return path;
}

namespace {

std::vector<double> unit_slice(const ParamVector& theta, const ParamBlock& b) {
    return std::vector<double>(theta.begin() + long(b.offset),
                               theta.begin() + long(b.offset + b.length));
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

StructureMetrics structure_metrics(const PerSampleLoss& model, const ParamVector& theta,
                                   const Dataset& data, const StructureThresholds& tol) {
    StructureMetrics m;
    std::size_t small = 0;
    for (double v : theta)
        if (std::abs(v) < tol.sparsity_tol) ++small;
    m.sparsity = theta.empty() ? 0.0 : double(small) / double(theta.size());

    if (auto pm = model.product_matrix(theta))
        m.rank = numerical_rank(svd(*pm).singular_values, tol.rank_rel_tol);

    m.dead_neurons = dead_neuron_count(model, theta, data, tol.dead_grad_tol);

    const auto units = model.unit_ranges();
    if (!units.empty()) {
        UnionFind uf(units.size());
        for (std::size_t a = 0; a < units.size(); ++a) {
            auto ua = unit_slice(theta, units[a]);
            for (std::size_t b = a + 1; b < units.size(); ++b) {
                auto ub = unit_slice(theta, units[b]);
                double dist2 = 0.0;
                for (std::size_t i = 0; i < ua.size(); ++i)
                    dist2 += (ua[i] - ub[i]) * (ua[i] - ub[i]);
                if (std::sqrt(dist2) < tol.cluster_rel_tol * (1.0 + norm2(ua))) uf.unite(a, b);
            }
        }
        std::size_t roots = 0;
        for (std::size_t i = 0; i < units.size(); ++i)
            if (uf.find(i) == i) ++roots;
        m.cluster_count = roots;
    }
    return m;
}

Matrix sorted_unit_correlation(const PerSampleLoss& model, const ParamVector& theta) {
    const auto units = model.unit_ranges();
    const std::size_t m = units.size();
    if (m == 0) return Matrix();

    std::vector<std::vector<double>> vecs(m);
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        vecs[i] = unit_slice(theta, units[i]);
        norms[i] = norm2(vecs[i]);
    }
    Matrix corr(m, m);
    for (std::size_t a = 0; a < m; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < m; ++b) {
            double c = 0.0;
            if (norms[a] > 0.0 && norms[b] > 0.0) {
                c = dot(vecs[a], vecs[b]) / (norms[a] * norms[b]);
            }
            corr(a, b) = corr(b, a) = c;
        }
    }

    auto eig = sym_eig(corr);
    const std::size_t lead = m - 1;  // ascending order: last column is leading
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return eig.eigenvectors(a, lead) < eig.eigenvectors(b, lead);
    });

    Matrix sorted(m, m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) sorted(a, b) = corr(order[a], order[b]);
    return sorted;
}

L1EquivalenceReport l1_equivalence_check(const PerSampleLoss& model, const MirrorSymmetry& sym,
                                         const ParamVector& theta0, const ParamVector& n,
                                         const std::vector<Sample>& samples,
                                         const std::vector<double>& s_grid) {
    if (mirror_residual(sym, theta0) > 1e-10 * (1.0 + norm2(theta0)))
        throw std::invalid_argument("l1_equivalence_check: theta0 is not symmetric");
    if (std::abs(norm2(n) - 1.0) > 1e-8)
        throw std::invalid_argument("l1_equivalence_check: n must be a unit vector");
    ParamVector residual = n;
    axpy(-1.0, reflect(sym, n), residual);  // n in im(P) means R n = -n
    if (norm2(residual) / 2.0 < 1.0 - 1e-8)
        throw std::invalid_argument("l1_equivalence_check: n is not in the mirror subspace");
    if (s_grid.size() < 3)
        throw std::invalid_argument("l1_equivalence_check: need at least 3 grid points");
    for (std::size_t i = 0; i + 1 < s_grid.size(); ++i) {
        if (!(s_grid[i] > 0.0) ||
            std::abs(s_grid[i + 1] / s_grid[i] - 2.0) > 1e-3)
            throw std::invalid_argument("l1_equivalence_check: grid must double at each point");
    }

    const double l0 = mean_loss(model, theta0, samples);
    std::vector<double> q(s_grid.size()), even(s_grid.size());
    double odd = 0.0, scale = 1.0 + std::abs(l0);
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        ParamVector plus = theta0, minus = theta0;
        axpy(s_grid[i], n, plus);
        axpy(-s_grid[i], n, minus);
        const double lp = mean_loss(model, plus, samples);
        const double lm = mean_loss(model, minus, samples);
        odd = std::max(odd, std::abs(lp - lm));
        scale = std::max(scale, 1.0 + std::abs(lp) + std::abs(lm));
        even[i] = 0.5 * (lp + lm) - l0;
        q[i] = even[i] / (s_grid[i] * s_grid[i]);
    }

    L1EquivalenceReport rep;
    rep.odd_part = odd;
    // Richardson step: the q(s) ~ a + b s^2 error cancels between the two
    // smallest grid points
    rep.right_derivative = (4.0 * q[0] - q[1]) / 3.0;

    std::vector<double> r(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) r[i] = q[i] - rep.right_derivative;
    const std::size_t k = q.size() - 1;
    const double tiny = 1e-11 * (1.0 + std::abs(rep.right_derivative));
    if (std::abs(r[k - 1]) <= tiny && std::abs(r[k]) <= tiny) {
        rep.linear_in_z = true;
        rep.residual_ratio = 0.0;
        rep.abs_ratio = 0.0;
    } else {
        rep.residual_ratio = r[k] / r[k - 1];
        const double zk = s_grid[k] * s_grid[k];
        const double zk1 = s_grid[k - 1] * s_grid[k - 1];
        rep.abs_ratio = (r[k] * zk) / (r[k - 1] * zk1);
    }

    const bool even_ok = odd <= 1e-10 * scale;
    const bool ratio_ok = rep.linear_in_z || std::abs(rep.residual_ratio - 4.0) <= 2.0;
    rep.pass = even_ok && ratio_ok && std::isfinite(rep.right_derivative);
    return rep;
}

}  // namespace mirrorsym
