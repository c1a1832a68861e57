#include "mirrorsym/dcs.hpp"

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mirrorsym/linalg.hpp"
#include "mirrorsym/mirror.hpp"

namespace mirrorsym {

namespace {

void check_config(const DcsConfig& cfg, std::size_t dim) {
    const Matrix& p = cfg.projection;
    if (p.rows() != dim || p.cols() != dim)
        throw std::invalid_argument("dcs: projection must be " + std::to_string(dim) + " x " +
                                    std::to_string(dim));
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha))
        throw std::invalid_argument("dcs: alpha must be finite and >= 0");
    const Matrix pp = p * p;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            if (std::abs(p(i, j) - p(j, i)) > 1e-10)
                throw std::invalid_argument("dcs: projection is not symmetric");
            if (std::abs(pp(i, j) - p(i, j)) > 1e-10)
                throw std::invalid_argument("dcs: projection is not idempotent");
        }
}

void check_dims(const DcsParams& p, const DcsConfig& cfg) {
    const std::size_t d = cfg.projection.rows();
    if (p.w.size() != d || p.u.size() != d || p.v.size() != d)
        throw std::invalid_argument("dcs: w, u, v must match the projection dimension");
}

// base(T(w,u,v), sample) + alpha (||w||^2 + ||u||^2) over the concatenated
// (w, u, v) vector.
class DcsWrapped : public PerSampleLoss {
public:
    DcsWrapped(ModelPtr base, DcsConfig cfg)
        : PerSampleLoss("dcs_" + base->name(),
                        ParamLayout({{"w", 0, base->dim()},
                                     {"u", base->dim(), base->dim()},
                                     {"v", 2 * base->dim(), base->dim()}})),
          base_(std::move(base)),
          cfg_(std::move(cfg)) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        const std::size_t d = base_->dim();
        DcsParams p = split(theta, d);
        double penalty = cfg_.alpha * (sq_norm(p.w) + sq_norm(p.u));
        return base_->loss(dcs_transform(p, cfg_), s) + penalty;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        const std::size_t d = base_->dim();
        DcsParams p = split(theta, d);
        const ParamVector pw = cfg_.projection * p.w;
        const ParamVector pu = cfg_.projection * p.u;
        ParamVector t = p.v;
        {
            const ParamVector pv = cfg_.projection * p.v;
            for (std::size_t i = 0; i < d; ++i) t[i] += pw[i] * pu[i] - pv[i];
        }
        const ParamVector g = base_->grad(t, s);

        // dT/dw^T g = P ((Pu) .* g), dT/du^T g = P ((Pw) .* g),
        // dT/dv^T g = (I - P) g
        ParamVector gw(d), gu(d);
        for (std::size_t i = 0; i < d; ++i) {
            gw[i] = pu[i] * g[i];
            gu[i] = pw[i] * g[i];
        }
        gw = cfg_.projection * gw;
        gu = cfg_.projection * gu;
        const ParamVector pg = cfg_.projection * g;

        ParamVector out(3 * d);
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = gw[i] + 2.0 * cfg_.alpha * p.w[i];
            out[d + i] = gu[i] + 2.0 * cfg_.alpha * p.u[i];
            out[2 * d + i] = g[i] - pg[i];
        }
        return out;
    }

    Sample random_sample(RngStream& rng) const override { return base_->random_sample(rng); }

protected:
    std::vector<MirrorSymmetry> build_mirrors() const override {
        // Orthonormal basis of im(P): eigenvectors of P with eigenvalue 1.
        const auto eig = sym_eig(cfg_.projection);
        const std::size_t d = base_->dim();
        std::vector<std::size_t> range_cols;
        for (std::size_t j = 0; j < d; ++j)
            if (eig.eigenvalues[j] > 0.5) range_cols.push_back(j);
        if (range_cols.empty()) return {};

        // Stack two copies: the flip negates (Pw, Pu) jointly and fixes v.
        Matrix frame(3 * d, 2 * range_cols.size());
        for (std::size_t k = 0; k < range_cols.size(); ++k)
            for (std::size_t i = 0; i < d; ++i) {
                frame(i, k) = eig.eigenvectors(i, range_cols[k]);
                frame(d + i, range_cols.size() + k) = eig.eigenvectors(i, range_cols[k]);
            }
        return {make_mirror(frame, "constraint_flip")};
    }

private:
    static DcsParams split(const ParamVector& theta, std::size_t d) {
        DcsParams p;
        p.w.assign(theta.begin(), theta.begin() + d);
        p.u.assign(theta.begin() + d, theta.begin() + 2 * d);
        p.v.assign(theta.begin() + 2 * d, theta.end());
        return p;
    }

    ModelPtr base_;
    DcsConfig cfg_;
};

}  // namespace

ParamVector dcs_transform(const DcsParams& p, const DcsConfig& cfg) {
    check_dims(p, cfg);
    const std::size_t d = p.v.size();
    const ParamVector pw = cfg.projection * p.w;
    const ParamVector pu = cfg.projection * p.u;
    const ParamVector pv = cfg.projection * p.v;
    ParamVector theta(d);
    for (std::size_t i = 0; i < d; ++i) theta[i] = p.v[i] - pv[i] + pw[i] * pu[i];
    return theta;
}

std::pair<ParamVector, double> dcs_extract(const DcsParams& p, const DcsConfig& cfg) {
    ParamVector theta = dcs_transform(p, cfg);
    return {theta, norm2(cfg.projection * theta)};
}

DcsParams dcs_embed(const ParamVector& theta, const DcsConfig& cfg) {
    if (theta.size() != cfg.projection.rows())
        throw std::invalid_argument("dcs: theta must match the projection dimension");
    const ParamVector pt = cfg.projection * theta;
    DcsParams p;
    p.v = theta;
    p.w.resize(theta.size());
    p.u.resize(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        p.w[i] = std::sqrt(std::abs(pt[i]));
        p.u[i] = (pt[i] < 0.0 ? -1.0 : 1.0) * p.w[i];
    }
    return p;
}

ModelPtr dcs_wrap(ModelPtr base, const DcsConfig& cfg) {
    if (!base) throw std::invalid_argument("dcs: base model is null");
    check_config(cfg, base->dim());
    return std::make_shared<DcsWrapped>(std::move(base), cfg);
}

}  // namespace mirrorsym
