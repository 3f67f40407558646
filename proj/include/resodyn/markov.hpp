// markov.hpp — Stable-eigenvalue tracking and the block generator M(lambda)
// with spectral-form propagation on the system space

#pragma once

#include <vector>

#include "resodyn/level_shift.hpp"
#include "resodyn/operator_core.hpp"

namespace resodyn {

enum class TrackMode { FixedPoint, Exact };

struct EigenvalueTrack {
    double e = 0.0;
    int e_index = -1;
    int s = -1;
    double E = 0.0;
    TrackMode method = TrackMode::FixedPoint;
    double residual = 0.0;   // |E - e - lambda^2 a(E, lambda)|
};

// One spectral channel of M(lambda), compressed to the system space.
struct MarkovChannel {
    double e = 0.0;
    int s = -1;
    Complex exponent;     // e + lambda^2 a (dec) or the tracked E (osc)
    Matrix Q_sys;         // rank-one block on Ran P_{S,e}
    bool decaying = false;
};

// Block-diagonal generator in spectral form. Immutable; construction validates
// the channel invariants (identity resolution, commutation with L_S, real
// oscillatory exponents, dissipative decaying ones).
class MarkovGenerator {
public:
    MarkovGenerator() = default;
    MarkovGenerator(double lambda, Matrix L_S, std::vector<MarkovChannel> channels);

    double lambda() const { return lambda_; }
    Index dim_S() const { return L_S_.rows(); }
    const std::vector<MarkovChannel>& channels() const { return channels_; }
    Matrix as_matrix() const;

private:
    double lambda_ = 0.0;
    Matrix L_S_;
    std::vector<MarkovChannel> channels_;
};

// Solve E = e + lambda^2 a^(s)(E, lambda) for an oscillating channel, either by
// damped fixed-point iteration through the boundary continuation of A_e, or by
// picking the nearest eigenvalue of the dense eigensolve of L_lambda.
EigenvalueTrack track_eigenvalue(const CoupledLiouvillean& L, const LevelShiftData& lsd,
                                 const PerturbationParams& params, int s, TrackMode mode);

// M_e = sum_{s in dec} (e + lambda^2 a_e_s) Q_e_s + sum_{s in osc} E_e^(s) Q_e_s.
// Projections default to the lambda = 0 spectral projections of Lambda_e;
// `z_dependent_projections` switches to the boundary-continued ones.
MarkovGenerator build_markov_generator(const CoupledLiouvillean& L,
                                       const std::vector<LevelShiftData>& lsd_all,
                                       const std::vector<EigenvalueTrack>& tracks, double lambda,
                                       bool z_dependent_projections = false,
                                       const PerturbationParams* params = nullptr);

// sum_c e^{i t exponent_c} Q_c psi_S, t >= 0
Vector propagate_markov(const MarkovGenerator& M, double t, const Vector& psi_S);

// <phi_S, e^{itM} psi_S> without forming the propagator
Complex markov_matrix_element(const MarkovGenerator& M, const Vector& phi_S, const Vector& psi_S,
                              double t);

} // namespace resodyn
