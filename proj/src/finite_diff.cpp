#include "mirrorsym/finite_diff.hpp"

#include <cmath>
#include <stdexcept>

namespace mirrorsym {

namespace {

double eval(const std::function<double(const ParamVector&)>& f, const ParamVector& w) {
    double v = f(w);
    if (!std::isfinite(v))
        throw std::domain_error("finite_diff: objective returned a non-finite value");
    return v;
}

}  // namespace

double default_fd_step(const ParamVector& w) {
    return 1e-4 * std::max(1.0, norm_inf(w));
}

ParamVector fd_gradient(const std::function<double(const ParamVector&)>& f,
                        const ParamVector& w, double step) {
    const double h = step > 0.0 ? step : default_fd_step(w);
    const std::size_t d = w.size();
    ParamVector g(d);
    ParamVector p = w;
    for (std::size_t i = 0; i < d; ++i) {
        double wi = w[i];
        p[i] = wi + h;
        double fp = eval(f, p);
        p[i] = wi - h;
        double fm = eval(f, p);
        p[i] = wi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Derivatives finite_diff(const std::function<double(const ParamVector&)>& f,
                        const ParamVector& w, double step) {
    const double h = step > 0.0 ? step : default_fd_step(w);
    const std::size_t d = w.size();
    Derivatives r;
    r.gradient = fd_gradient(f, w, h);
    r.hessian = Matrix(d, d);

    const double f0 = eval(f, w);
    ParamVector p = w;
    for (std::size_t i = 0; i < d; ++i) {
        double wi = w[i];
        p[i] = wi + h;
        double fp = eval(f, p);
        p[i] = wi - h;
        double fm = eval(f, p);
        p[i] = wi;
        r.hessian(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            double wi = w[i], wj = w[j];
            p[i] = wi + h;
            p[j] = wj + h;
            double fpp = eval(f, p);
            p[j] = wj - h;
            double fpm = eval(f, p);
            p[i] = wi - h;
            p[j] = wj + h;
            double fmp = eval(f, p);
            p[j] = wj - h;
            double fmm = eval(f, p);
            p[i] = wi;
            p[j] = wj;
            double hij = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            r.hessian(i, j) = hij;
            r.hessian(j, i) = hij;
        }
    }
    return r;
}

}  // namespace mirrorsym
