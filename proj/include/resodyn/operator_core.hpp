// operator_core.hpp — Bipartite Liouvillean assembly: spectral projections,
// reduced resolvents, Gibbs purification, and assumption audits

#pragma once

#include <memory>
#include <mutex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resodyn/linalg.hpp"

namespace resodyn {

// ----------------------------- domain types ---------------------------------

// Finite system generator L_S with its spectral data. Eigenvalues within
// 1e-9 * ||L_S|| are merged into one cluster with summed multiplicity.
struct SystemSpec {
    Index dim = 0;
    Matrix L_S;                         // Hermitian
    std::vector<double> eigenvalues;    // distinct, ascending
    std::vector<int> multiplicities;    // m_e per eigenvalue
    std::vector<Matrix> projections;    // P_{S,e}, orthogonal, summing to 1
    Matrix eigenbasis;                  // orthonormal columns, grouped by eigenvalue
    std::vector<double> basis_eigenvalue; // eigenvalue attached to each basis column
};

// Reservoir generator with a distinguished stationary vector Omega.
struct ReservoirSpec {
    Index dim = 0;
    Matrix L_R;          // Hermitian
    Vector omega;        // unit vector, L_R omega = 0
    bool kernel_simple = false;
};

struct SpectralDecomposition {
    RealVector eigenvalues;  // ascending
    Matrix eigenvectors;     // unitary columns (full space)
};

// Eigen data of an operator restricted to a subspace: `modes` are full-space
// orthonormal columns diagonalizing the restriction.
struct ReducedSpectral {
    Matrix modes;
    RealVector eigenvalues;
};

// L_lambda = L_0 + lambda I on H_S (x) H_R, with cached projections and
// lazily computed spectral data. Immutable after construction; the caches are
// mutex-guarded so instances can be shared read-only across workers.
class CoupledLiouvillean {
public:
    CoupledLiouvillean(SystemSpec sys, ReservoirSpec res, Matrix interaction, double lambda);

    const SystemSpec& sys() const { return sys_; }
    const ReservoirSpec& res() const { return res_; }
    const Matrix& interaction() const { return I_; }
    double lambda() const { return lambda_; }
    Index dim() const { return L0_.rows(); }

    const Matrix& L0() const { return L0_; }
    const Matrix& L_lambda() const { return L_lambda_; }
    const Matrix& P_R() const { return P_R_; }
    const Matrix& P_R_perp() const { return P_R_perp_; }

    int eigenvalue_count() const { return static_cast<int>(sys_.eigenvalues.size()); }
    double eigenvalue(int i) const { return sys_.eigenvalues[static_cast<size_t>(i)]; }
    int multiplicity(int i) const { return sys_.multiplicities[static_cast<size_t>(i)]; }
    const Matrix& P_e(int i) const { return P_e_[static_cast<size_t>(i)]; }
    Matrix P_e_basis(int i) const;          // orthonormal columns spanning Ran P_e
    int eigenvalue_index(double e) const;   // throws if e is not in E_0

    // eigendecomposition of L_lambda (cached)
    const SpectralDecomposition& full_spectral() const;
    // spectral data of P_R^perp L_mu P_R^perp on Ran P_R^perp (cached per mu)
    std::shared_ptr<const ReducedSpectral> reservoir_restricted(double mu) const;
    // spectral data of P_e^perp L_mu P_e^perp on Ran P_e^perp (cached per (e, mu));
    // mu = 0 is assembled from the product eigenbasis, no dense eigensolve
    std::shared_ptr<const ReducedSpectral> reduced_at(int e_index, double mu) const;

    // L_mu = L_0 + mu I for coupling overrides
    Matrix L_at(double mu) const { return L0_ + mu * I_; }

private:
    SystemSpec sys_;
    ReservoirSpec res_;
    Matrix I_;
    double lambda_;
    Matrix L0_, L_lambda_;
    Matrix P_R_, P_R_perp_;
    std::vector<Matrix> P_e_;

    // reservoir eigenbasis with the kernel column pinned to omega
    Matrix res_basis_;
    RealVector res_eigs_;
    Index res_kernel_col_ = 0;

    // lazily filled spectral data; copies of the operator share one cache
    struct Cache {
        std::mutex mutex;
        std::optional<SpectralDecomposition> full;
        std::map<std::uint64_t, std::shared_ptr<const ReducedSpectral>> restricted;
        std::map<std::pair<int, std::uint64_t>, std::shared_ptr<const ReducedSpectral>> reduced;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();

    std::shared_ptr<const ReducedSpectral> product_reduced(int e_index) const;      // mu = 0
    std::shared_ptr<const ReducedSpectral> product_restricted() const;              // mu = 0
};

// Audit record for the structural assumptions. Reporting only, never throws.
struct AssumptionReport {
    bool a1_simple_eigs = false;
    double a1_min_gap = 0.0;           // min eigenvalue gap of L_lambda
    bool a2_kernel = false;
    bool a4_diagonal_free = false;
    double a4_max_diag_norm = 0.0;     // max_e ||P_e I P_e||
    bool a5_fgr = false;
    double a5_margin = 0.0;            // min eigenvalue-simplicity margin of the Lambda_e
    std::string notes;
};

struct LevelShiftData;  // level_shift.hpp

// ------------------------------ operations ----------------------------------

SystemSpec make_system_spec(const Matrix& L_S, double cluster_tol = 1e-9);
ReservoirSpec make_reservoir_spec(const Matrix& L_R, const Vector& omega);

// L_lambda = (L_S (x) 1 + 1 (x) L_R) + lambda I, inputs symmetrized or rejected.
CoupledLiouvillean build_liouvillean(const SystemSpec& sys, const ReservoirSpec& res,
                                     const Matrix& interaction, double lambda);

// Thermofield purification of the Gibbs state of H_S at inverse temperature beta.
// Returns the normalized doubled vector and L_S = H_S (x) 1 - 1 (x) H_S.
std::pair<Vector, Matrix> purify_gibbs(const Matrix& H_S, double beta);

// (Q^perp L_lambda Q^perp - z)^{-1} restricted to Ran Q^perp, returned in the
// full space (supported on Ran Q^perp). Q must be an orthogonal projection.
Matrix reduced_resolvent(const CoupledLiouvillean& L, const Matrix& Q, Complex z);

// g = min |e - e'| over distinct eigenvalues of L_S; throws std::domain_error
// when there is only one eigenvalue.
double spectral_gap(const SystemSpec& sys);

AssumptionReport audit_assumptions(const CoupledLiouvillean& L,
                                   const std::vector<LevelShiftData>& lsd);

// ---------------------------- product helpers -------------------------------

inline Vector product_state(const Vector& sys_vec, const Vector& res_vec) {
    Vector out(sys_vec.size() * res_vec.size());
    for (Index i = 0; i < sys_vec.size(); ++i)
        out.segment(i * res_vec.size(), res_vec.size()) = sys_vec(i) * res_vec;
    return out;
}

// phi_S (x) Omega_R
inline Vector with_stationary_reservoir(const Vector& sys_vec, const ReservoirSpec& res) {
    return product_state(sys_vec, res.omega);
}

// (1_S (x) <Omega|) psi : the system-space component seen by P_R
inline Vector system_component(const Vector& psi, const ReservoirSpec& res) {
    const Index dr = res.dim;
    const Index ds = psi.size() / dr;
    Vector out(ds);
    for (Index i = 0; i < ds; ++i) out(i) = res.omega.dot(psi.segment(i * dr, dr));
    return out;
}

} // namespace resodyn
