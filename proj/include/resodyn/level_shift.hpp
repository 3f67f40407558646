// level_shift.hpp — Level shift operators Lambda_e, the matrices A_e(z, lambda),
// oscillating/decaying channel classification, and perturbation-regime constants

#pragma once

#include <optional>
#include <vector>

#include "resodyn/operator_core.hpp"

namespace resodyn {

// Geometric eps -> 0 schedule with Richardson extrapolation. The default hugs
// the quasi-continuum regime: eps0 = 10 x (mean level spacing of the reduced
// generator near e), six halving steps, extrapolation order 2.
struct EpsSchedule {
    double eps0 = 1e-2;
    int steps = 6;
    double ratio = 0.5;
    int richardson_order = 2;
    double tol = 1e-11;       // early-stop increment threshold (relative)
    double eps_floor = 0.0;   // steps below this are skipped
};

// Record of a boundary-limit evaluation.
struct LimitLog {
    std::vector<double> eps_used;
    std::vector<double> increments;
    bool converged = true;    // false: increments never settled (finite-eps value reported)
    bool direct = false;      // true: point was isolated, evaluated at eps = 0
};

// One eigenpair of a level shift operator. The rank-one spectral projection
// Q = right * left^dag (with <left, right> = 1) is kept in factored form;
// materialize with Q() where a dense matrix is genuinely needed.
struct LevelShiftEig {
    Complex a;
    Vector right;
    Vector left;
    Matrix Q() const { return right * left.adjoint(); }
    double projection_norm() const { return right.norm() * left.norm(); }
};

// Spectral data of one level shift operator with the channel split.
struct LevelShiftData {
    double e = 0.0;
    int e_index = -1;
    Matrix Lambda;                    // full space, supported on Ran P_e
    std::vector<LevelShiftEig> eigs;  // sorted by (Re a, Im a)
    std::vector<int> osc;             // |Im a| below the classification band
    std::vector<int> dec;             // Im a strictly positive
    LimitLog regularization_log;
};

// Scalars quantifying the perturbation regime. Optional fields are absent when
// their defining set is empty (no decaying channel, no eigenvalue pair, ...).
struct PerturbationParams {
    std::optional<double> g;        // minimal gap of L_S eigenvalues
    std::optional<double> a;        // smallest nonzero imaginary part
    double alpha = 0.0;             // maximal spectral radius of the Lambda_e
    std::optional<double> delta;    // minimal intra-e eigenvalue gap
    double kappa = 0.0;             // largest spectral projection norm
    double kappa1 = 0.0;            // limiting-absorption surrogate
    double norm_I_P_R = 0.0;        // ||I P_R||
    std::optional<double> kappa0;
    std::optional<double> lambda0;
    double lambda0_guard_factor = 1.0;  // scenario-level slack on the lambda0 guard

    // Lemma-style smallness window for boundary continuation, with kappa1
    // standing in for the proof-internal constant.
    double smallness_window() const;
    double lambda_guard() const;        // lambda0_guard_factor * lambda0 (inf when undefined)
};

struct BoundaryData {
    std::vector<LevelShiftEig> eigs;   // paired 1:1 with the reference LevelShiftData::eigs
    LimitLog log;
};

// ------------------------------ operations ----------------------------------

EpsSchedule default_eps_schedule(const CoupledLiouvillean& L, int e_index, double coupling = 0.0);

// A_e(z, lambda) = -P_e I R_z^{P_e}(lambda) I P_e, full-space on Ran P_e.
// Real z is evaluated through the boundary path (eps schedule, or directly when
// z is isolated from the reduced spectrum).
Matrix a_matrix(const CoupledLiouvillean& L, double e, Complex z, double lambda,
                LimitLog* log = nullptr);

struct LevelShiftResult {
    Matrix Lambda;
    LimitLog log;
};

// Lambda_e = lim_{eps->0+} -P_e I P_e^perp (L_0 - e + i eps)^{-1} I P_e.
// Uses L_0 only; independent of L.lambda().
LevelShiftResult level_shift_operator(const CoupledLiouvillean& L, double e,
                                      const EpsSchedule& schedule);

// Eigen data of a level shift operator with the osc/dec split. Throws on
// eigenvalue collisions (A5 violation) and on negative imaginary parts beyond
// -1e-8 ||Lambda_e|| (dissipativity violation).
LevelShiftData spectral_decompose_and_classify(const Matrix& Lambda_e, const Matrix& P_e,
                                               double tol_real = 1e-6);

// Production pipeline: Lambda_e via the default (or given) schedule, then
// classify against the analytic P_e basis.
LevelShiftData compute_level_shift(const CoupledLiouvillean& L, int e_index,
                                   const EpsSchedule* schedule = nullptr,
                                   double tol_real = 1e-6);
std::vector<LevelShiftData> compute_all_level_shifts(const CoupledLiouvillean& L,
                                                     double tol_real = 1e-6);

PerturbationParams perturbation_params(const std::vector<LevelShiftData>& all,
                                       const SystemSpec& sys, double lap_estimate,
                                       double norm_I_P_R);

inline Complex second_order_eigenvalue(double e, Complex a_e_s, double lambda) {
    return Complex(e, 0.0) + lambda * lambda * a_e_s;
}

// Eigenpairs of A_e(x, lambda) at real x, each matched to a unique eigenvalue
// of Lambda_e within delta/2. Throws PairingError on ambiguity and
// std::invalid_argument outside the smallness window.
BoundaryData boundary_extend(const CoupledLiouvillean& L, const LevelShiftData& lsd,
                             const PerturbationParams& params, double x, double lambda);

} // namespace resodyn
