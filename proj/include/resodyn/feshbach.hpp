// feshbach.hpp — Schur-complement (Feshbach) maps, the three-part resolvent
// decomposition, block factorization, and weak isospectrality

#pragma once

#include <utility>
#include <vector>

#include "resodyn/operator_core.hpp"

namespace resodyn {

// Three-part split of (L_lambda - z)^{-1} for an orthogonal projection Q:
// a block on Ran Q (inverse Feshbach map), a block on Ran Q^perp, and the
// cross terms. All parts are stored as full-space matrices.
struct FeshbachDecomposition {
    Complex z;
    Matrix Q;
    Matrix F_inv;   // supported on Ran Q
    Matrix B;       // cross terms, O(lambda)
    Matrix R_Q;     // supported on Ran Q^perp
};

struct LocatedEigenvalue {
    double E;
    int multiplicity;
};

struct IsospectralResult {
    std::vector<LocatedEigenvalue> found;                 // ascending in E
    std::vector<std::pair<double, double>> excluded;      // sub-intervals skipped
};

// F(A;Q) = Q (A - A Q^perp (Q^perp A Q^perp|_{Ran Q^perp})^{-1} A) Q.
// Throws SingularBlockError when the complement block has condition > 1e12.
Matrix feshbach_map(const Matrix& A, const Matrix& Q);

// Feshbach map of H - x at real x, taken as the limit along z = x - i eps with
// a geometric schedule when x sits close to the reduced spectrum; direct
// inversion otherwise.
Matrix feshbach_map_at_real(const Matrix& H, const Matrix& Q, double x, double tol);

// The z in C_- split of the resolvent; the parts satisfy
// F_inv + B + R_Q = (L_lambda - z)^{-1} to 1e-9 relative.
FeshbachDecomposition resolvent_decomposition(const CoupledLiouvillean& L, const Matrix& Q,
                                              Complex z);

// Assembles the three-factor block factorization of H - z and returns
// ||product - (H - z)|| / ||H - z||.
double block_factorization_check(const Matrix& H, const Matrix& Q, Complex z);

// Locate eigenvalues of Hermitian H inside [lo, hi] as the zeros of the
// Feshbach map, with multiplicities from its numerical kernel dimension.
IsospectralResult isospectral_locate(const Matrix& H, const Matrix& Q, double lo, double hi,
                                     double tol);

// Lift a kernel vector phi of F(H - E; Q) to an eigenvector of H:
// Phi = phi - R_E^Q Q^perp H Q phi, the limit taken along z = E - i eps.
Vector reconstruct_eigenvector(const Matrix& H, const Matrix& Q, double E, const Vector& phi,
                               double tol);

} // namespace resodyn
