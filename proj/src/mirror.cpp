#include "mirrorsym/mirror.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "mirrorsym/linalg.hpp"

namespace mirrorsym {

MirrorSymmetry::MirrorSymmetry(Matrix frame, std::string label)
    : frame_(std::move(frame)), label_(std::move(label)) {
    if (frame_.cols() > frame_.rows())
        throw std::invalid_argument("MirrorSymmetry: more columns than dimensions");
}

namespace {
std::mutex& mirror_cache_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

const Matrix& MirrorSymmetry::p_matrix() const {
    std::lock_guard<std::mutex> lock(mirror_cache_mutex());
    if (!p_cache_) p_cache_ = std::make_shared<Matrix>(frame_ * transpose(frame_));
    return *p_cache_;
}

const Matrix& MirrorSymmetry::r_matrix() const {
    const Matrix& p = p_matrix();
    std::lock_guard<std::mutex> lock(mirror_cache_mutex());
    if (!r_cache_) r_cache_ = std::make_shared<Matrix>(Matrix::identity(dim()) - 2.0 * p);
    return *r_cache_;
}

std::vector<double> MirrorSymmetry::frame_coords(const ParamVector& w) const {
    if (w.size() != dim())
        throw std::invalid_argument("MirrorSymmetry: parameter dimension mismatch");
    std::vector<double> c(rank(), 0.0);
    for (std::size_t j = 0; j < rank(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) acc += frame_(i, j) * w[i];
        c[j] = acc;
    }
    return c;
}

MirrorSymmetry make_mirror(const Matrix& columns, std::string label) {
    Matrix q = columns.cols() > 0 ? orthonormalize(columns) : columns;
    // canonical sign: first entry of each column above 1e-12 becomes positive
    for (std::size_t j = 0; j < q.cols(); ++j) {
        for (std::size_t i = 0; i < q.rows(); ++i) {
            if (std::abs(q(i, j)) > 1e-12) {
                if (q(i, j) < 0.0)
                    for (std::size_t k = 0; k < q.rows(); ++k) q(k, j) = -q(k, j);
                break;
            }
        }
    }
    return MirrorSymmetry(std::move(q), std::move(label));
}

namespace {

Matrix basis_columns(std::size_t dim, const std::vector<std::size_t>& indices) {
    Matrix m(dim, indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        if (indices[j] >= dim)
            throw std::invalid_argument("mirror construction: index out of range");
        m(indices[j], j) = 1.0;
    }
    return m;
}

// Orthonormal basis of the image of a symmetric idempotent.
Matrix projection_image_basis(const Matrix& pi) {
    if (pi.rows() != pi.cols())
        throw std::invalid_argument("RotationReflection: projection must be square");
    double scale = std::max(1.0, max_abs(pi));
    Matrix p2 = pi * pi;
    for (std::size_t i = 0; i < pi.rows(); ++i)
        for (std::size_t j = 0; j < pi.cols(); ++j) {
            if (std::abs(pi(i, j) - pi(j, i)) > 1e-10 * scale)
                throw std::invalid_argument("RotationReflection: projection is not symmetric");
            if (std::abs(p2(i, j) - pi(i, j)) > 1e-8 * scale)
                throw std::invalid_argument("RotationReflection: matrix is not idempotent");
        }
    auto eig = sym_eig(pi);
    std::size_t r = 0;
    for (double ev : eig.eigenvalues)
        if (ev > 0.5) ++r;
    Matrix basis(pi.rows(), r);
    std::size_t j = 0;
    for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
        if (eig.eigenvalues[k] > 0.5) {
            for (std::size_t i = 0; i < pi.rows(); ++i) basis(i, j) = eig.eigenvectors(i, k);
            ++j;
        }
    }
    return basis;
}

}  // namespace

MirrorSymmetry make_standard_mirror(const StandardMirrorKind& kind, const ParamLayout& layout) {
    const std::size_t d = layout.dim();
    if (const auto* flip = std::get_if<RescalingSignFlip>(&kind)) {
        const auto& a = layout.block(flip->block_a);
        const auto& b = layout.block(flip->block_b);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < a.length; ++i) idx.push_back(a.offset + i);
        for (std::size_t i = 0; i < b.length; ++i) idx.push_back(b.offset + i);
        return make_mirror(basis_columns(d, idx),
                           "sign_flip(" + flip->block_a + "," + flip->block_b + ")");
    }
    if (const auto* pair = std::get_if<RescalingScalarPair>(&kind)) {
        if (pair->index_a >= d || pair->index_b >= d || pair->index_a == pair->index_b)
            throw std::invalid_argument("RescalingScalarPair: bad indices");
        if (pair->sign != 1 && pair->sign != -1)
            throw std::invalid_argument("RescalingScalarPair: sign must be +1 or -1");
        Matrix n(d, 1);
        n(pair->index_a, 0) = 1.0;
        n(pair->index_b, 0) = static_cast<double>(pair->sign);
        std::string label = "scalar_pair(" + std::to_string(pair->index_a) +
                            (pair->sign > 0 ? "+" : "-") + std::to_string(pair->index_b) + ")";
        return make_mirror(n, std::move(label));
    }
    if (const auto* swap = std::get_if<PermutationSwap>(&kind)) {
        const auto& a = layout.block(swap->block_a);
        const auto& b = layout.block(swap->block_b);
        if (a.length != b.length)
            throw std::invalid_argument("PermutationSwap: blocks must have equal length");
        Matrix cols(d, a.length);
        for (std::size_t i = 0; i < a.length; ++i) {
            cols(a.offset + i, i) = 1.0;
            cols(b.offset + i, i) = -1.0;
        }
        return make_mirror(cols, "swap(" + swap->block_a + "," + swap->block_b + ")");
    }
    const auto& rot = std::get<RotationReflection>(kind);
    const auto& blk = layout.block(rot.block);
    if (blk.length != rot.rows * rot.cols)
        throw std::invalid_argument("RotationReflection: block length does not match shape");
    if (rot.projection.rows() != rot.rows)
        throw std::invalid_argument("RotationReflection: projection size must match rows");
    Matrix basis = projection_image_basis(rot.projection);
    // Row-space reflection of a row-major (rows x cols) block: one frame
    // column per (direction, matrix column) pair.
    Matrix cols(d, basis.cols() * rot.cols);
    std::size_t j = 0;
    for (std::size_t m = 0; m < basis.cols(); ++m) {
        for (std::size_t k = 0; k < rot.cols; ++k, ++j) {
            for (std::size_t i = 0; i < rot.rows; ++i)
                cols(blk.offset + i * rot.cols + k, j) = basis(i, m);
        }
    }
    return make_mirror(cols, "rotation(" + rot.block + ")");
}

MirrorSymmetry make_factor_rotation_mirror(const Matrix& inner_projection,
                                           const ParamLayout& layout,
                                           const std::string& block_w, std::size_t rows_w,
                                           const std::string& block_u, std::size_t cols_u,
                                           std::string label) {
    const std::size_t d = layout.dim();
    const std::size_t inner = inner_projection.rows();
    const auto& bw = layout.block(block_w);
    const auto& bu = layout.block(block_u);
    if (bw.length != rows_w * inner)
        throw std::invalid_argument("factor mirror: W block length does not match shape");
    if (bu.length != inner * cols_u)
        throw std::invalid_argument("factor mirror: U block length does not match shape");
    Matrix basis = projection_image_basis(inner_projection);
    const std::size_t r = basis.cols();
    // Column space of W and row space of U reflect together; the frame holds
    // one column per (direction, W row) and per (direction, U column).
    Matrix cols(d, r * (rows_w + cols_u));
    std::size_t j = 0;
    for (std::size_t m = 0; m < r; ++m) {
        for (std::size_t i = 0; i < rows_w; ++i, ++j)
            for (std::size_t k = 0; k < inner; ++k)
                cols(bw.offset + i * inner + k, j) = basis(k, m);
        for (std::size_t k = 0; k < cols_u; ++k, ++j)
            for (std::size_t i = 0; i < inner; ++i)
                cols(bu.offset + i * cols_u + k, j) = basis(i, m);
    }
    if (label.empty()) label = "factor_rotation(" + block_w + "," + block_u + ")";
    return make_mirror(cols, std::move(label));
}

ParamVector reflect(const MirrorSymmetry& sym, const ParamVector& w) {
    auto c = sym.frame_coords(w);
    ParamVector r = w;
    const Matrix& o = sym.frame();
    for (std::size_t j = 0; j < sym.rank(); ++j)
        for (std::size_t i = 0; i < sym.dim(); ++i) r[i] -= 2.0 * o(i, j) * c[j];
    return r;
}

ParamVector project_symmetric(const MirrorSymmetry& sym, const ParamVector& w) {
    auto c = sym.frame_coords(w);
    ParamVector r = w;
    const Matrix& o = sym.frame();
    for (std::size_t j = 0; j < sym.rank(); ++j)
        for (std::size_t i = 0; i < sym.dim(); ++i) r[i] -= o(i, j) * c[j];
    return r;
}

double mirror_residual(const MirrorSymmetry& sym, const ParamVector& w) {
    auto c = sym.frame_coords(w);
    double s = 0.0;
    for (double x : c) s += x * x;
    return std::sqrt(s);
}

}  // namespace mirrorsym
