#pragma once

#include <functional>

#include "mirrorsym/matrix.hpp"
#include "mirrorsym/param.hpp"

namespace mirrorsym {

struct Derivatives {
    ParamVector gradient;
    Matrix hessian;  // symmetrized
};

// Step size used when none is given: 1e-4 * max(1, |w|_inf).
double default_fd_step(const ParamVector& w);

// Central-difference gradient: (f(w + h e_i) - f(w - h e_i)) / (2h).
// Throws std::domain_error if f returns a non-finite value.
ParamVector fd_gradient(const std::function<double(const ParamVector&)>& f,
                        const ParamVector& w, double step = 0.0);

// Central-difference gradient and Hessian. Diagonal entries use the
// three-point second-difference stencil; off-diagonals the four-point one.
// The Hessian is symmetrized before returning.
Derivatives finite_diff(const std::function<double(const ParamVector&)>& f,
                        const ParamVector& w, double step = 0.0);

}  // namespace mirrorsym
