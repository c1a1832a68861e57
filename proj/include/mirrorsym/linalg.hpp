#pragma once

#include <cstddef>
#include <vector>

#include "mirrorsym/matrix.hpp"

namespace mirrorsym {

struct SymEigResult {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // orthonormal columns, paired with eigenvalues
};

struct SvdResult {
    Matrix u;                              // m x k, orthonormal columns
    std::vector<double> singular_values;   // descending, k = min(m, n)
    Matrix v;                              // n x k, orthonormal columns
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Throws std::invalid_argument if the input is not square, not finite, or
// asymmetric beyond 1e-10 relative to its largest entry.
SymEigResult sym_eig(const Matrix& a);

// Singular value decomposition by one-sided Jacobi. Works for any shape;
// throws std::invalid_argument on non-finite input.
SvdResult svd(const Matrix& a);

// Number of singular values above rel_tol * s_max.
std::size_t numerical_rank(const std::vector<double>& singular_values, double rel_tol);

// Modified Gram-Schmidt with a reorthogonalization pass. Preserves span and
// column order; throws std::invalid_argument if the columns are linearly
// dependent (residual below 1e-10 of the column's original scale).
Matrix orthonormalize(const Matrix& columns);

}  // namespace mirrorsym
