#pragma once

#include <utility>

#include "mirrorsym/matrix.hpp"
#include "mirrorsym/models.hpp"
#include "mirrorsym/param.hpp"

namespace mirrorsym {

// Reparametrization that embeds a sign-flip symmetry into any base loss so
// that the constraint P·theta = 0 becomes energetically favored instead of
// hard-coded. P selects the constrained subspace; alpha weighs the penalty
// on the two factor copies that realize the constrained part.
struct DcsConfig {
    Matrix projection;  // d x d, symmetric idempotent
    double alpha = 0.0;
};

// Factor parameters of the wrapped objective. All three share the base
// model's dimension d; the wrapped loss runs over their concatenation.
struct DcsParams {
    ParamVector w;
    ParamVector u;
    ParamVector v;
};

// theta = (I - P) v + (P w) .* (P u)
ParamVector dcs_transform(const DcsParams& p, const DcsConfig& cfg);

// (theta, ||P theta||): the realized parameter vector and how far it sits
// from the constraint the factorization favors.
std::pair<ParamVector, double> dcs_extract(const DcsParams& p, const DcsConfig& cfg);

// Constructive inverse: v = theta, w = sqrt(|P theta|) componentwise,
// u = sign(P theta) .* w. Transforms back to theta exactly when P is a
// coordinate (diagonal 0/1) projection; the square-root split balances the
// two factors.
DcsParams dcs_embed(const ParamVector& theta, const DcsConfig& cfg);

// Loss over (w, u, v), dimension 3d:
//   l(w, u, v) = base(T(w, u, v), sample) + alpha (||w||^2 + ||u||^2)
// Flipping the sign of (Pw, Pu) jointly leaves T and the penalty unchanged,
// so the wrapped loss carries that reflection as a certified mirror; its
// fixed set is exactly where the realized theta satisfies P·theta = 0.
// Throws std::invalid_argument if P is not a symmetric idempotent matching
// the base dimension or alpha is negative.
ModelPtr dcs_wrap(ModelPtr base, const DcsConfig& cfg);

}  // namespace mirrorsym
