#include "mirrorsym/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mirrorsym {

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

SymEigResult sym_eig(const Matrix& a_in) {
    if (a_in.rows() != a_in.cols())
        throw std::invalid_argument("sym_eig: matrix must be square");
    if (!all_finite(a_in))
        throw std::invalid_argument("sym_eig: matrix has non-finite entries");
    const std::size_t n = a_in.rows();
    const double scale = max_abs(a_in);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a_in(i, j) - a_in(j, i)) > 1e-10 * std::max(1.0, scale))
                throw std::invalid_argument("sym_eig: matrix is not symmetric");

    Matrix a = a_in;
    // Symmetrize exactly so rounding asymmetry cannot bias the sweep.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double m = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = m;
            a(j, i) = m;
        }
    Matrix v = Matrix::identity(n);

    const double stop = 1e-15 * std::max(1.0, frobenius_norm(a));
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_diagonal_norm(a) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                // A <- J^T A J with the rotation in the (p, q) plane.
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });

    SymEigResult r;
    r.eigenvalues.resize(n);
    r.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        r.eigenvalues[j] = diag[order[j]];
        for (std::size_t i = 0; i < n; ++i) r.eigenvectors(i, j) = v(i, order[j]);
    }
    return r;
}

SvdResult svd(const Matrix& a_in) {
    if (!all_finite(a_in))
        throw std::invalid_argument("svd: matrix has non-finite entries");
    const bool transposed = a_in.rows() < a_in.cols();
    Matrix b = transposed ? transpose(a_in) : a_in;
    const std::size_t m = b.rows();
    const std::size_t n = b.cols();
    Matrix v = Matrix::identity(n);

    // One-sided Jacobi: orthogonalize column pairs of B, accumulating the
    // rotations into V, until all pairs are numerically orthogonal.
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    double bi = b(k, i), bj = b(k, j);
                    alpha += bi * bi;
                    beta += bj * bj;
                    gamma += bi * bj;
                }
                if (std::abs(gamma) <= 1e-14 * std::sqrt(alpha * beta) ||
                    std::abs(gamma) <= 1e-300)
                    continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    double bi = b(k, i), bj = b(k, j);
                    b(k, i) = c * bi - s * bj;
                    b(k, j) = s * bi + c * bj;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vi = v(k, i), vj = v(k, j);
                    v(k, i) = c * vi - s * vj;
                    v(k, j) = s * vi + c * vj;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += b(k, j) * b(k, j);
        s[j] = std::sqrt(acc);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

    Matrix u(m, n);
    Matrix vs(n, n);
    std::vector<double> ss(n);
    double smax = n > 0 ? s[order[0]] : 0.0;
    std::size_t filled = 0;
    for (std::size_t j = 0; j < n; ++j) {
        ss[j] = s[order[j]];
        for (std::size_t k = 0; k < n; ++k) vs(k, j) = v(k, order[j]);
        if (ss[j] > smax * 1e-290 && ss[j] > 0.0) {
            for (std::size_t k = 0; k < m; ++k) u(k, j) = b(k, order[j]) / ss[j];
            filled = j + 1;
        }
    }
    // Columns with zero singular value get an arbitrary orthonormal completion
    // so U's columns stay orthonormal; they contribute nothing to U diag(s) V^T.
    for (std::size_t j = filled; j < n; ++j) {
        std::vector<double> cand(m, 0.0);
        double best = -1.0;
        for (std::size_t e = 0; e < m; ++e) {
            std::vector<double> w(m, 0.0);
            w[e] = 1.0;
            for (std::size_t jj = 0; jj < j; ++jj) {
                double d = 0.0;
                for (std::size_t k = 0; k < m; ++k) d += u(k, jj) * w[k];
                for (std::size_t k = 0; k < m; ++k) w[k] -= d * u(k, jj);
            }
            double nrm = 0.0;
            for (double x : w) nrm += x * x;
            if (nrm > best) {
                best = nrm;
                cand = w;
            }
        }
        double nrm = std::sqrt(best);
        for (std::size_t k = 0; k < m; ++k) u(k, j) = cand[k] / nrm;
    }

    SvdResult r;
    if (transposed) {
        r.u = vs;
        r.v = u;
    } else {
        r.u = u;
        r.v = vs;
    }
    r.singular_values = ss;
    return r;
}

std::size_t numerical_rank(const std::vector<double>& singular_values, double rel_tol) {
    if (singular_values.empty()) return 0;
    double smax = *std::max_element(singular_values.begin(), singular_values.end());
    if (smax <= 0.0) return 0;
    std::size_t rank = 0;
    for (double s : singular_values)
        if (s > rel_tol * smax) ++rank;
    return rank;
}

Matrix orthonormalize(const Matrix& columns) {
    Matrix q = columns;
    const std::size_t m = q.rows();
    const std::size_t n = q.cols();
    for (std::size_t j = 0; j < n; ++j) {
        double orig = 0.0;
        for (std::size_t k = 0; k < m; ++k) orig += q(k, j) * q(k, j);
        orig = std::sqrt(orig);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                double d = 0.0;
                for (std::size_t k = 0; k < m; ++k) d += q(k, i) * q(k, j);
                for (std::size_t k = 0; k < m; ++k) q(k, j) -= d * q(k, i);
            }
        }
        double nrm = 0.0;
        for (std::size_t k = 0; k < m; ++k) nrm += q(k, j) * q(k, j);
        nrm = std::sqrt(nrm);
        if (nrm <= 1e-10 * std::max(orig, 1e-300))
            throw std::invalid_argument("orthonormalize: columns are linearly dependent");
        for (std::size_t k = 0; k < m; ++k) q(k, j) /= nrm;
    }
    return q;
}

}  // namespace mirrorsym
