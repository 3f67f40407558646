// markov.cpp — Eigenvalue tracking and the spectral-form generator

#include "resodyn/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resodyn/errors.hpp"

namespace resodyn {

namespace {

bool contains(const std::vector<int>& v, int s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

EigenvalueTrack track_eigenvalue(const CoupledLiouvillean& L, const LevelShiftData& lsd,
                                 const PerturbationParams& params, int s, TrackMode mode) {
    if (!contains(lsd.osc, s))
        throw std::invalid_argument("track_eigenvalue: channel s is not oscillating");
    const double lambda = L.lambda();
    if (std::abs(lambda) >= params.lambda_guard())
        throw std::invalid_argument("track_eigenvalue: |lambda| exceeds the lambda0 guard");

    EigenvalueTrack track;
    track.e = lsd.e;
    track.e_index = lsd.e_index;
    track.s = s;
    track.method = mode;

    const Complex a0 = lsd.eigs[static_cast<size_t>(s)].a;
    if (lambda == 0.0) {
        track.E = lsd.e;
        track.residual = 0.0;
        return track;
    }
    const double seed = lsd.e + lambda * lambda * a0.real();

    auto a_at = [&](double x) {
        const BoundaryData b = boundary_extend(L, lsd, params, x, lambda);
        return b.eigs[static_cast<size_t>(s)].a;
    };

    if (mode == TrackMode::FixedPoint) {
        double x = seed;
        Complex a_val = a0;
        bool converged = false;
        for (int it = 0; it < 50; ++it) {
            a_val = a_at(x);
            const double next = lsd.e + lambda * lambda * a_val.real();
            if (std::abs(next - x) <= 1e-12 * std::max(1.0, std::abs(x))) {
                x = next;
                converged = true;
                break;
            }
            x += 0.5 * (next - x);   // damping guards the finite-size surrogate
        }
        if (!converged)
            throw std::runtime_error("track_eigenvalue: fixed point did not converge in 50 steps");
        track.E = x;
        track.residual = std::abs(Complex(x - lsd.e, 0.0) - lambda * lambda * a_at(x));
    } else {
        const auto& full = L.full_spectral();
        const RealVector& ev = full.eigenvalues;
        Index best = 0, second = -1;
        for (Index i = 1; i < ev.size(); ++i)
            if (std::abs(ev(i) - seed) < std::abs(ev(best) - seed)) best = i;
        for (Index i = 0; i < ev.size(); ++i) {
            if (i == best) continue;
            if (second < 0 || std::abs(ev(i) - seed) < std::abs(ev(second) - seed)) second = i;
        }
        const double scale = std::max(1.0, std::abs(ev(ev.size() - 1)));
        if (second >= 0 &&
            std::abs(std::abs(ev(second) - seed) - std::abs(ev(best) - seed)) <= 1e-12 * scale)
            throw std::runtime_error("track_eigenvalue: two eigenvalues equidistant from the seed");
        track.E = ev(best);
        if (params.delta &&
            std::abs(track.E - seed) > 0.5 * *params.delta * lambda * lambda)
            throw std::runtime_error("track_eigenvalue: nearest eigenvalue outside the "
                                     "uniqueness radius delta lambda^2 / 2");
        try {
            track.residual = std::abs(Complex(track.E - lsd.e, 0.0) - lambda * lambda * a_at(track.E));
        } catch (const std::exception&) {
            track.residual = std::numeric_limits<double>::infinity();
        }
    }

    // second-order displacement guard
    const double bound = 10.0 * lambda * lambda * (params.alpha + std::abs(lambda) * params.kappa1);
    if (bound > 0.0 && std::abs(track.E - lsd.e) > bound)
        throw std::runtime_error("track_eigenvalue: |E - e| violates the second-order displacement bound");
    return track;
}

MarkovGenerator::MarkovGenerator(double lambda, Matrix L_S, std::vector<MarkovChannel> channels)
    : lambda_(lambda), L_S_(std::move(L_S)), channels_(std::move(channels)) {
    const Index d = L_S_.rows();
    const double scale = std::max(1.0, L_S_.norm());

    Matrix sum = Matrix::Zero(d, d);
    for (const auto& c : channels_) {
        sum += c.Q_sys;
        if (c.decaying) {
            if (lambda_ != 0.0 && c.exponent.imag() <= 0.0)
                throw std::invalid_argument("MarkovGenerator: decaying channel with Im <= 0");
        } else if (std::abs(c.exponent.imag()) > 1e-10 * std::max(1.0, std::abs(c.exponent)))
            throw std::invalid_argument("MarkovGenerator: oscillating exponent not real");
    }
    if ((sum - identity(d)).norm() > 1e-8 * std::sqrt(double(d)))
        throw std::invalid_argument("MarkovGenerator: channels do not resolve the identity");

    const Matrix M = as_matrix();
    if ((M * L_S_ - L_S_ * M).norm() > 1e-8 * scale * std::max(1.0, M.norm()))
        throw std::invalid_argument("MarkovGenerator: [M, L_S] != 0");
    if (lambda_ == 0.0 && (M - L_S_).norm() > 1e-10 * scale)
        throw std::invalid_argument("MarkovGenerator: M(0) != L_S");
}

Matrix MarkovGenerator::as_matrix() const {
    Matrix M = Matrix::Zero(dim_S(), dim_S());
    for (const auto& c : channels_) M += c.exponent * c.Q_sys;
    return M;
}

MarkovGenerator build_markov_generator(const CoupledLiouvillean& L,
                                       const std::vector<LevelShiftData>& lsd_all,
                                       const std::vector<EigenvalueTrack>& tracks, double lambda,
                                       bool z_dependent_projections,
                                       const PerturbationParams* params) {
    if (z_dependent_projections && !params)
        throw std::invalid_argument("build_markov_generator: z-dependent projections need params");

    std::vector<MarkovChannel> channels;
    for (const auto& d : lsd_all) {
        for (size_t s = 0; s < d.eigs.size(); ++s) {
            MarkovChannel ch;
            ch.e = d.e;
            ch.s = static_cast<int>(s);
            ch.decaying = std::find(d.dec.begin(), d.dec.end(), static_cast<int>(s)) != d.dec.end();

            double proj_point = d.e;
            if (ch.decaying) {
                ch.exponent = second_order_eigenvalue(d.e, d.eigs[s].a, lambda);
            } else {
                const EigenvalueTrack* tr = nullptr;
                for (const auto& t : tracks)
                    if (t.e_index == d.e_index && t.s == static_cast<int>(s)) tr = &t;
                if (!tr)
                    throw std::invalid_argument("build_markov_generator: missing track for an "
                                                "oscillating channel");
                ch.exponent = Complex(tr->E, 0.0);
                proj_point = tr->E;
            }

            Vector right, left;
            if (z_dependent_projections && lambda != 0.0) {
                const BoundaryData b = boundary_extend(L, d, *params, proj_point, lambda);
                right = b.eigs[s].right;
                left = b.eigs[s].left;
            } else {
                right = d.eigs[s].right;
                left = d.eigs[s].left;
            }
            ch.Q_sys = system_component(right, L.res()) * system_component(left, L.res()).adjoint();
            channels.push_back(std::move(ch));
        }
    }
    return MarkovGenerator(lambda, L.sys().L_S, std::move(channels));
}

Vector propagate_markov(const MarkovGenerator& M, double t, const Vector& psi_S) {
    if (t < 0.0) throw std::invalid_argument("propagate_markov: t must be >= 0");
    if (psi_S.size() != M.dim_S())
        throw std::invalid_argument("propagate_markov: state dimension mismatch");
    Vector out = Vector::Zero(psi_S.size());
    for (const auto& c : M.channels())
        out += std::exp(kImag * t * c.exponent) * (c.Q_sys * psi_S);
    return out;
}

Complex markov_matrix_element(const MarkovGenerator& M, const Vector& phi_S, const Vector& psi_S,
                              double t) {
    if (t < 0.0) throw std::invalid_argument("markov_matrix_element: t must be >= 0");
    Complex out = 0.0;
    for (const auto& c : M.channels())
        out += std::exp(kImag * t * c.exponent) * phi_S.dot(c.Q_sys * psi_S);
    return out;
}

} // namespace resodyn
