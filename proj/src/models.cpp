#include "mirrorsym/models.hpp"

#include <cmath>
#include <stdexcept>

namespace mirrorsym {

PerSampleLoss::PerSampleLoss(std::string name, ParamLayout layout)
    : name_(std::move(name)), layout_(std::move(layout)) {}

void PerSampleLoss::add_grad(const ParamVector& theta, const Sample& s, double scale,
                             ParamVector& out) const {
    ParamVector g = grad(theta, s);
    axpy(scale, g, out);
}

const std::vector<MirrorSymmetry>& PerSampleLoss::mirrors() const {
    std::call_once(mirrors_once_, [this] { mirrors_cache_ = build_mirrors(); });
    return mirrors_cache_;
}

std::optional<Matrix> PerSampleLoss::product_matrix(const ParamVector&) const {
    return std::nullopt;
}

std::vector<ParamBlock> PerSampleLoss::unit_ranges() const { return {}; }

std::vector<MirrorSymmetry> PerSampleLoss::build_mirrors() const { return {}; }

void PerSampleLoss::check_theta(const ParamVector& theta) const {
    if (theta.size() != dim())
        throw std::invalid_argument(name_ + ": parameter vector has wrong length");
}

namespace {

void check_sample(const Sample& s, std::size_t xdim, std::size_t ydim, const std::string& who) {
    if (s.x.size() != xdim || s.y.size() != ydim)
        throw std::invalid_argument(who + ": sample has wrong shape");
}

std::vector<double> gaussian_vec(std::size_t n, RngStream& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.gaussian();
    return v;
}

class LinearRegression final : public PerSampleLoss {
public:
    explicit LinearRegression(std::size_t d)
        : PerSampleLoss("linear_regression(dim=" + std::to_string(d) + ")",
                        ParamLayout({{"v", 0, d}})),
          d_(d) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, d_, 1, name());
        double r = residual(theta, s);
        return 0.5 * r * r;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        ParamVector g(d_, 0.0);
        add_grad(theta, s, 1.0, g);
        return g;
    }

    void add_grad(const ParamVector& theta, const Sample& s, double scale,
                  ParamVector& out) const override {
        check_theta(theta);
        check_sample(s, d_, 1, name());
        double r = scale * residual(theta, s);
        for (std::size_t i = 0; i < d_; ++i) out[i] += r * s.x[i];
    }

    Sample random_sample(RngStream& rng) const override {
        return {gaussian_vec(d_, rng), gaussian_vec(1, rng)};
    }

private:
    double residual(const ParamVector& theta, const Sample& s) const {
        double f = 0.0;
        for (std::size_t i = 0; i < d_; ++i) f += theta[i] * s.x[i];
        return f - s.y[0];
    }

    std::size_t d_;
};

class HadamardRegression final : public PerSampleLoss {
public:
    explicit HadamardRegression(std::size_t d)
        : PerSampleLoss("hadamard_regression(dim=" + std::to_string(d) + ")",
                        ParamLayout({{"u", 0, d}, {"w", d, d}})),
          d_(d) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, d_, 1, name());
        double r = residual(theta, s);
        return 0.5 * r * r;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        ParamVector g(2 * d_, 0.0);
        add_grad(theta, s, 1.0, g);
        return g;
    }

    void add_grad(const ParamVector& theta, const Sample& s, double scale,
                  ParamVector& out) const override {
        check_theta(theta);
        check_sample(s, d_, 1, name());
        double r = scale * residual(theta, s);
        for (std::size_t i = 0; i < d_; ++i) {
            out[i] += r * s.x[i] * theta[d_ + i];       // d l / d u_i
            out[d_ + i] += r * s.x[i] * theta[i];        // d l / d w_i
        }
    }

    Sample random_sample(RngStream& rng) const override {
        return {gaussian_vec(d_, rng), gaussian_vec(1, rng)};
    }

protected:
    std::vector<MirrorSymmetry> build_mirrors() const override {
        std::vector<MirrorSymmetry> ms;
        ms.push_back(make_standard_mirror(RescalingSignFlip{"u", "w"}, layout()));
        for (std::size_t i = 0; i < d_; ++i) {
            ms.push_back(make_standard_mirror(RescalingScalarPair{i, d_ + i, -1}, layout()));
            ms.push_back(make_standard_mirror(RescalingScalarPair{i, d_ + i, +1}, layout()));
        }
        return ms;
    }

private:
    double residual(const ParamVector& theta, const Sample& s) const {
        double f = 0.0;
        for (std::size_t i = 0; i < d_; ++i) f += theta[i] * theta[d_ + i] * s.x[i];
        return f - s.y[0];
    }

    std::size_t d_;
};

class MatrixFactorization final : public PerSampleLoss {
public:
    MatrixFactorization(std::size_t d, bool residual)
        : PerSampleLoss(std::string(residual ? "matrix_factorization_residual"
                                             : "matrix_factorization") +
                            "(dim=" + std::to_string(d) + ")",
                        ParamLayout({{"W", 0, d * d}, {"U", d * d, d * d}})),
          d_(d), residual_(residual) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, d_, d_, name());
        std::vector<double> z, f;
        forward(theta, s.x, z, f);
        double acc = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            double r = f[i] - s.y[i];
            acc += r * r;
        }
        return 0.5 * acc;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        ParamVector g(dim(), 0.0);
        add_grad(theta, s, 1.0, g);
        return g;
    }

    void add_grad(const ParamVector& theta, const Sample& s, double scale,
                  ParamVector& out) const override {
        check_theta(theta);
        check_sample(s, d_, d_, name());
        std::vector<double> z, f;
        forward(theta, s.x, z, f);
        std::vector<double> r(d_);
        for (std::size_t i = 0; i < d_; ++i) r[i] = f[i] - s.y[i];

        const double* w = theta.data();
        double* gw = out.data();
        double* gu = out.data() + d_ * d_;
        // dW(i,k) = r_i z_k
        for (std::size_t i = 0; i < d_; ++i) {
            double ri = scale * r[i];
            for (std::size_t k = 0; k < d_; ++k) gw[i * d_ + k] += ri * z[k];
        }
        // vanilla: dU(k,j) = (W^T r)_k x_j; residual: ((I+W)^T r)_k x_j
        std::vector<double> wtr(d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) {
            double ri = r[i];
            const double* wrow = w + i * d_;
            for (std::size_t k = 0; k < d_; ++k) wtr[k] += wrow[k] * ri;
        }
        if (residual_)
            for (std::size_t k = 0; k < d_; ++k) wtr[k] += r[k];
        for (std::size_t k = 0; k < d_; ++k) {
            double wk = scale * wtr[k];
            for (std::size_t j = 0; j < d_; ++j) gu[k * d_ + j] += wk * s.x[j];
        }
    }

    Sample random_sample(RngStream& rng) const override {
        return {gaussian_vec(d_, rng), gaussian_vec(d_, rng)};
    }

    std::optional<Matrix> product_matrix(const ParamVector& theta) const override {
        check_theta(theta);
        Matrix w(d_, d_, {theta.begin(), theta.begin() + d_ * d_});
        Matrix u(d_, d_, {theta.begin() + d_ * d_, theta.end()});
        if (residual_) {
            Matrix id = Matrix::identity(d_);
            return (id + w) * (id + u);
        }
        return w * u;
    }

protected:
    std::vector<MirrorSymmetry> build_mirrors() const override {
        std::vector<MirrorSymmetry> ms;
        if (residual_) return ms;
        for (std::size_t i = 0; i < d_; ++i) {
            Matrix pi(d_, d_);
            pi(i, i) = 1.0;
            ms.push_back(make_factor_rotation_mirror(
                pi, layout(), "W", d_, "U", d_,
                "factor_rotation(axis=" + std::to_string(i) + ")"));
        }
        // two reproducible non-axis directions
        RngStream rng(0xD1CE, d_);
        for (int k = 0; k < 2; ++k) {
            std::vector<double> n = gaussian_vec(d_, rng);
            double nn = norm2(n);
            Matrix pi(d_, d_);
            for (std::size_t i = 0; i < d_; ++i)
                for (std::size_t j = 0; j < d_; ++j) pi(i, j) = n[i] * n[j] / (nn * nn);
            ms.push_back(make_factor_rotation_mirror(
                pi, layout(), "W", d_, "U", d_,
                "factor_rotation(random=" + std::to_string(k) + ")"));
        }
        return ms;
    }

private:
    void forward(const ParamVector& theta, const std::vector<double>& x,
                 std::vector<double>& z, std::vector<double>& f) const {
        const double* w = theta.data();
        const double* u = theta.data() + d_ * d_;
        z.assign(d_, 0.0);
        for (std::size_t k = 0; k < d_; ++k) {
            const double* urow = u + k * d_;
            double acc = 0.0;
            for (std::size_t j = 0; j < d_; ++j) acc += urow[j] * x[j];
            z[k] = acc;
        }
        if (residual_)
            for (std::size_t k = 0; k < d_; ++k) z[k] += x[k];
        f.assign(d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) {
            const double* wrow = w + i * d_;
            double acc = 0.0;
            for (std::size_t k = 0; k < d_; ++k) acc += wrow[k] * z[k];
            f[i] = acc;
        }
        if (residual_)
            for (std::size_t i = 0; i < d_; ++i) f[i] += z[i];
    }

    std::size_t d_;
    bool residual_;
};

class TwoLayerTanh final : public PerSampleLoss {
public:
    explicit TwoLayerTanh(std::size_t d)
        : PerSampleLoss("two_layer_tanh(units=" + std::to_string(d) + ")",
                        ParamLayout({{"w", 0, d}, {"u", d, d}})),
          d_(d) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, 1, 1, name());
        double r = residual(theta, s);
        return 0.5 * r * r;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, 1, 1, name());
        double x = s.x[0];
        double r = residual(theta, s);
        ParamVector g(2 * d_);
        for (std::size_t i = 0; i < d_; ++i) {
            double t = std::tanh(theta[i] * x);
            g[i] = r * theta[d_ + i] * (1.0 - t * t) * x;
            g[d_ + i] = r * t;
        }
        return g;
    }

    Sample random_sample(RngStream& rng) const override {
        return {gaussian_vec(1, rng), gaussian_vec(1, rng)};
    }

protected:
    std::vector<MirrorSymmetry> build_mirrors() const override {
        std::vector<MirrorSymmetry> ms;
        for (std::size_t i = 0; i < d_; ++i) {
            Matrix cols(2 * d_, 2);
            cols(i, 0) = 1.0;
            cols(d_ + i, 1) = 1.0;
            ms.push_back(make_mirror(cols, "unit_sign_flip(" + std::to_string(i) + ")"));
        }
        return ms;
    }

private:
    double residual(const ParamVector& theta, const Sample& s) const {
        double f = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
            f += theta[d_ + i] * std::tanh(theta[i] * s.x[0]);
        return f - s.y[0];
    }

    std::size_t d_;
};

class PermutationMlp final : public PerSampleLoss {
public:
    PermutationMlp(std::size_t width, std::size_t in_dim)
        : PerSampleLoss("permutation_mlp(width=" + std::to_string(width) +
                            ",in_dim=" + std::to_string(in_dim) + ")",
                        make_layout(width, in_dim)),
          width_(width), in_(in_dim) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, in_, 1, name());
        double r = residual(theta, s);
        return 0.5 * r * r;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, in_, 1, name());
        double r = residual(theta, s);
        ParamVector g(dim());
        const std::size_t stride = in_ + 1;
        for (std::size_t a = 0; a < width_; ++a) {
            const double* wa = theta.data() + a * stride;
            double ua = wa[in_];
            double pre = 0.0;
            for (std::size_t j = 0; j < in_; ++j) pre += wa[j] * s.x[j];
            double t = std::tanh(pre);
            double dpre = r * ua * (1.0 - t * t);
            double* ga = g.data() + a * stride;
            for (std::size_t j = 0; j < in_; ++j) ga[j] = dpre * s.x[j];
            ga[in_] = r * t;
        }
        return g;
    }

    Sample random_sample(RngStream& rng) const override {
        return {gaussian_vec(in_, rng), gaussian_vec(1, rng)};
    }

    std::vector<ParamBlock> unit_ranges() const override { return layout().blocks(); }

protected:
    std::vector<MirrorSymmetry> build_mirrors() const override {
        std::vector<MirrorSymmetry> ms;
        for (std::size_t a = 0; a < width_; ++a)
            for (std::size_t b = a + 1; b < width_; ++b)
                ms.push_back(make_standard_mirror(
                    PermutationSwap{unit_name(a), unit_name(b)}, layout()));
        return ms;
    }

private:
    static std::string unit_name(std::size_t a) { return "unit" + std::to_string(a); }

    static ParamLayout make_layout(std::size_t width, std::size_t in_dim) {
        std::vector<ParamBlock> blocks;
        for (std::size_t a = 0; a < width; ++a)
            blocks.push_back({unit_name(a), a * (in_dim + 1), in_dim + 1});
        return ParamLayout(std::move(blocks));
    }

    double residual(const ParamVector& theta, const Sample& s) const {
        const std::size_t stride = in_ + 1;
        double f = 0.0;
        for (std::size_t a = 0; a < width_; ++a) {
            const double* wa = theta.data() + a * stride;
            double pre = 0.0;
            for (std::size_t j = 0; j < in_; ++j) pre += wa[j] * s.x[j];
            f += wa[in_] * std::tanh(pre);
        }
        return f - s.y[0];
    }

    std::size_t width_;
    std::size_t in_;
};

// l = ((w1 + w2) - 1)^2. Every gamma > 0 pulls the shared minimizer to
// w1 = w2 = 1/(2 + gamma), symmetric but away from zero.
class FootnoteQuadratic final : public PerSampleLoss {
public:
    FootnoteQuadratic()
        : PerSampleLoss("footnote_quadratic", ParamLayout({{"w1", 0, 1}, {"w2", 1, 1}})) {}

    double loss(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, 0, 0, name());
        double r = theta[0] + theta[1] - 1.0;
        return r * r;
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        check_theta(theta);
        check_sample(s, 0, 0, name());
        double r = 2.0 * (theta[0] + theta[1] - 1.0);
        return {r, r};
    }

    Sample random_sample(RngStream&) const override { return {{}, {}}; }

protected:
    std::vector<MirrorSymmetry> build_mirrors() const override {
        return {make_standard_mirror(PermutationSwap{"w1", "w2"}, layout())};
    }
};

class BiasedModel final : public PerSampleLoss {
public:
    BiasedModel(ModelPtr base, double scale, RngStream& rng)
        : PerSampleLoss(base->name() + "+random_bias", base->layout()),
          base_(std::move(base)), bias_(base_->dim()) {
        for (auto& b : bias_) b = rng.gaussian(0.0, scale);
    }

    double loss(const ParamVector& theta, const Sample& s) const override {
        return base_->loss(shifted(theta), s);
    }

    ParamVector grad(const ParamVector& theta, const Sample& s) const override {
        return base_->grad(shifted(theta), s);
    }

    void add_grad(const ParamVector& theta, const Sample& s, double scale,
                  ParamVector& out) const override {
        base_->add_grad(shifted(theta), s, scale, out);
    }

    Sample random_sample(RngStream& rng) const override { return base_->random_sample(rng); }

    std::optional<Matrix> product_matrix(const ParamVector& theta) const override {
        return base_->product_matrix(shifted(theta));
    }

    std::vector<ParamBlock> unit_ranges() const override { return base_->unit_ranges(); }

private:
    ParamVector shifted(const ParamVector& theta) const {
        check_theta(theta);
        ParamVector t = theta;
        axpy(1.0, bias_, t);
        return t;
    }

    ModelPtr base_;
    ParamVector bias_;
};

}  // namespace

ModelPtr linear_regression(std::size_t dim) {
    return std::make_shared<LinearRegression>(dim);
}

ModelPtr hadamard_regression(std::size_t dim) {
    return std::make_shared<HadamardRegression>(dim);
}

ModelPtr matrix_factorization(std::size_t dim, bool residual) {
    return std::make_shared<MatrixFactorization>(dim, residual);
}

ModelPtr two_layer_tanh(std::size_t units) {
    return std::make_shared<TwoLayerTanh>(units);
}

ModelPtr permutation_mlp(std::size_t width, std::size_t in_dim) {
    return std::make_shared<PermutationMlp>(width, in_dim);
}

ModelPtr footnote_quadratic() { return std::make_shared<FootnoteQuadratic>(); }

ModelPtr apply_symmetry_removal(ModelPtr base, const SymmetryRemoval& kind, RngStream& rng) {
    if (std::holds_alternative<NoRemoval>(kind)) return base;
    const auto& bias = std::get<RandomBias>(kind);
    if (!(bias.scale > 0.0))
        throw std::invalid_argument("apply_symmetry_removal: scale must be positive");
    return std::make_shared<BiasedModel>(std::move(base), bias.scale, rng);
}

double mean_loss(const PerSampleLoss& model, const ParamVector& theta,
                 const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("mean_loss: no samples");
    double acc = 0.0;
    for (const auto& s : samples) acc += model.loss(theta, s);
    return acc / static_cast<double>(samples.size());
}

ParamVector mean_grad(const PerSampleLoss& model, const ParamVector& theta,
                      const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("mean_grad: no samples");
    ParamVector g(model.dim(), 0.0);
    const double w = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) model.add_grad(theta, s, w, g);
    return g;
}

SymmetryCheckReport verify_loss_symmetry(const PerSampleLoss& loss, const MirrorSymmetry& sym,
                                         std::size_t samples, RngStream& rng,
                                         double tolerance) {
    if (sym.dim() != loss.dim())
        throw std::invalid_argument("verify_loss_symmetry: mirror dimension mismatch");
    SymmetryCheckReport report;
    report.samples = samples;
    report.tolerance = tolerance;
    for (std::size_t k = 0; k < samples; ++k) {
        ParamVector w(loss.dim());
        for (auto& v : w) v = rng.gaussian();
        Sample s = loss.random_sample(rng);
        double a = loss.loss(w, s);
        double b = loss.loss(reflect(sym, w), s);
        report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(a - b));
    }
    report.pass = report.max_abs_deviation <= tolerance;
    return report;
}

}  // namespace mirrorsym
