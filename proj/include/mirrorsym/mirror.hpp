#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mirrorsym/matrix.hpp"
#include "mirrorsym/param.hpp"
#include "mirrorsym/rng.hpp"

namespace mirrorsym {

// A mirror symmetry of parameter space: an orthonormal frame O (d x k) whose
// span is reflected. P = O O^T projects onto the reflected subspace and
// R = I - 2P is the reflection itself. Points with O^T w = 0 are the fixed
// (symmetric) set.
//
// Only O is stored; P and R are materialized lazily since experiment-scale
// models never need them, and reflect/project go through O directly in
// O(d k) time.
class MirrorSymmetry {
public:
    MirrorSymmetry() = default;
    explicit MirrorSymmetry(Matrix frame, std::string label = "");

    std::size_t dim() const { return frame_.rows(); }
    std::size_t rank() const { return frame_.cols(); }
    const std::string& label() const { return label_; }
    const Matrix& frame() const { return frame_; }  // O

    const Matrix& p_matrix() const;  // O O^T
    const Matrix& r_matrix() const;  // I - 2 O O^T

    // O^T w (length-k coordinates of w inside the mirror subspace).
    std::vector<double> frame_coords(const ParamVector& w) const;

private:
    Matrix frame_;
    std::string label_;
    mutable std::shared_ptr<Matrix> p_cache_;
    mutable std::shared_ptr<Matrix> r_cache_;
};

// Builds a mirror from (possibly non-orthonormal) spanning columns.
// Columns are orthonormalized and sign-canonicalized: the first entry of
// each column larger than 1e-12 in magnitude is made positive. Throws
// std::invalid_argument on dependent columns.
MirrorSymmetry make_mirror(const Matrix& columns, std::string label = "");

// Common mirror constructions over a parameter layout.
//
// RescalingSignFlip: flip the sign of two whole blocks (O spans all their
// coordinates, R negates them).
struct RescalingSignFlip {
    std::string block_a;
    std::string block_b;
};

// RescalingScalarPair: one mirror direction over two scalar coordinates.
// sign = -1 gives n = (e_a - e_b)/sqrt(2) (fixed set: equal values);
// sign = +1 gives n = (e_a + e_b)/sqrt(2) (fixed set: opposite values).
struct RescalingScalarPair {
    std::size_t index_a;
    std::size_t index_b;
    int sign;
};

// PermutationSwap: exchange two equal-length blocks. O's columns are
// (e_{a_i} - e_{b_i})/sqrt(2); the fixed set is block_a == block_b.
struct PermutationSwap {
    std::string block_a;
    std::string block_b;
};

// RotationReflection: reflect the row space of a matrix-valued block stored
// row-major with shape (rows x cols). `projection` must be a symmetric
// idempotent on R^rows; the fixed set is n^T W = 0 for every direction n in
// its image.
struct RotationReflection {
    Matrix projection;
    std::string block;
    std::size_t rows;
    std::size_t cols;
};

using StandardMirrorKind =
    std::variant<RescalingSignFlip, RescalingScalarPair, PermutationSwap, RotationReflection>;

MirrorSymmetry make_standard_mirror(const StandardMirrorKind& kind, const ParamLayout& layout);

// Joint reflection of two factor blocks sharing an inner index: the columns
// of W (rows_w x inner, row-major) and the rows of U (inner x cols_u,
// row-major) are reflected together by (I - 2 pi) on the inner space. This
// leaves any function of the product W U unchanged, so it is the exact
// mirror carried by factorized models. Fixed set: W pi = 0 and pi U = 0.
MirrorSymmetry make_factor_rotation_mirror(const Matrix& inner_projection,
                                           const ParamLayout& layout,
                                           const std::string& block_w, std::size_t rows_w,
                                           const std::string& block_u, std::size_t cols_u,
                                           std::string label = "");

ParamVector reflect(const MirrorSymmetry& sym, const ParamVector& w);
// w - P w: nearest point of the symmetric set.
ParamVector project_symmetric(const MirrorSymmetry& sym, const ParamVector& w);
// |O^T w|_2: distance from the symmetric set.
double mirror_residual(const MirrorSymmetry& sym, const ParamVector& w);

struct SymmetryCheckReport {
    double max_abs_deviation = 0.0;
    std::size_t samples = 0;
    double tolerance = 0.0;
    bool pass = false;
};

class PerSampleLoss;

// Certifies that a loss actually carries a mirror symmetry: draws random
// (parameter, sample) pairs and reports the largest |l(w, x) - l(R w, x)|.
SymmetryCheckReport verify_loss_symmetry(const PerSampleLoss& loss,
                                         const MirrorSymmetry& sym,
                                         std::size_t samples, RngStream& rng,
                                         double tolerance = 1e-12);

}  // namespace mirrorsym
