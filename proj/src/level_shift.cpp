// level_shift.cpp — A_e(z, lambda), Lambda_e, channel classification, and
// the perturbation-regime constants

#include "resodyn/level_shift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resodyn/errors.hpp"

namespace resodyn {

namespace {

// Mean spacing among the (up to) 16 distinct reduced eigenvalues nearest x,
// and the distance from x to the reduced spectrum.
struct LocalSpectrum {
    double dist;
    double mean_spacing;
};

LocalSpectrum local_spectrum(const RealVector& eigs, double x) {
    LocalSpectrum out{std::numeric_limits<double>::infinity(), 0.0};
    if (eigs.size() == 0) return out;

    std::vector<double> distinct;
    distinct.reserve(static_cast<size_t>(eigs.size()));
    double scale = 1.0;
    for (Index i = 0; i < eigs.size(); ++i) scale = std::max(scale, std::abs(eigs(i)));
    for (Index i = 0; i < eigs.size(); ++i) {
        if (distinct.empty() || eigs(i) - distinct.back() > 1e-12 * scale)
            distinct.push_back(eigs(i));
    }
    for (double mu : distinct) out.dist = std::min(out.dist, std::abs(mu - x));

    if (distinct.size() < 2) {
        out.mean_spacing = 0.0;
        return out;
    }
    std::sort(distinct.begin(), distinct.end(),
              [x](double p, double q) { return std::abs(p - x) < std::abs(q - x); });
    const size_t k = std::min<size_t>(16, distinct.size());
    std::vector<double> window(distinct.begin(), distinct.begin() + static_cast<long>(k));
    std::sort(window.begin(), window.end());
    out.mean_spacing = (window.back() - window.front()) / double(k - 1);
    return out;
}

// A_e evaluated strictly off the real axis (or at a real point isolated from
// the reduced spectrum): entries from the reduced spectral data.
Matrix a_matrix_core(const CoupledLiouvillean& L, int e_index, Complex z, double lambda) {
    const auto red = L.reduced_at(e_index, lambda);
    const Matrix Bq = L.P_e_basis(e_index);
    const Index m = Bq.cols();

    Matrix coeff(red->modes.cols(), m);   // <mode_k, I p_j>
    for (Index j = 0; j < m; ++j) coeff.col(j) = red->modes.adjoint() * (L.interaction() * Bq.col(j));

    Matrix Ar = Matrix::Zero(m, m);
    for (Index k = 0; k < red->modes.cols(); ++k) {
        const Complex w = -1.0 / (Complex(red->eigenvalues(k), 0.0) - z);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j) Ar(i, j) += w * std::conj(coeff(k, i)) * coeff(k, j);
    }
    return embed_from(Ar, Bq);
}

// Richardson table over a geometric eps schedule (ratio 1/2), using only the
// longest prefix with non-increasing increments. The finite reservoir's point
// spectrum takes over below the level spacing; increments blowing up there are
// cut off rather than extrapolated.
template <class Eval>
std::pair<Matrix, LimitLog> boundary_limit(Eval eval, const EpsSchedule& sched) {
    LimitLog log;
    std::vector<Matrix> values;
    double eps = sched.eps0;
    for (int k = 0; k < sched.steps; ++k) {
        if (eps < sched.eps_floor && !values.empty()) break;
        values.push_back(eval(eps));
        log.eps_used.push_back(eps);
        const size_t n = values.size();
        if (n >= 2) {
            const double inc = (values[n - 1] - values[n - 2]).norm();
            log.increments.push_back(inc);
            const double scale = std::max(1.0, values[n - 1].norm());
            if (inc < sched.tol * scale) break;
            if (log.increments.size() >= 2 &&
                inc > 1.1 * log.increments[log.increments.size() - 2]) {
                // left the smooth regime; drop the offending value
                values.pop_back();
                log.eps_used.pop_back();
                log.increments.pop_back();
                log.converged = false;
                break;
            }
        }
        eps *= sched.ratio;
    }

    const size_t n = values.size();
    if (n == 1) return {values[0], log};

    const int order = std::min<int>(sched.richardson_order, static_cast<int>(n) - 1);
    std::vector<Matrix> table = values;
    double pw = 1.0;
    for (int j = 1; j <= order; ++j) {
        pw *= 1.0 / sched.ratio;   // 2^j for ratio 1/2
        for (size_t k = table.size() - 1; k >= static_cast<size_t>(j); --k) {
            table[k] = (pw * table[k] - table[k - 1]) / (pw - 1.0);
            if (k == static_cast<size_t>(j)) break;
        }
    }
    return {table.back(), log};
}

Matrix a_matrix_boundary(const CoupledLiouvillean& L, int e_index, double x, double lambda,
                         const EpsSchedule* sched_opt, LimitLog* log_out) {
    const auto red = L.reduced_at(e_index, lambda);
    const LocalSpectrum loc = local_spectrum(red->eigenvalues, x);

    if (loc.mean_spacing == 0.0 || loc.dist > 3.0 * loc.mean_spacing) {
        // isolated from the reduced spectrum: the boundary value is regular
        if (log_out) { log_out->direct = true; log_out->converged = true; log_out->eps_used = {0.0}; }
        return a_matrix_core(L, e_index, Complex(x, 0.0), lambda);
    }

    EpsSchedule sched = sched_opt ? *sched_opt : default_eps_schedule(L, e_index, lambda);
    auto [value, log] = boundary_limit(
        [&](double eps) { return a_matrix_core(L, e_index, Complex(x, -eps), lambda); }, sched);
    if (log_out) *log_out = log;
    return value;
}

struct Classified {
    std::vector<LevelShiftEig> eigs;
    std::vector<int> osc, dec;
};

// Eigen data of the restricted operator Ar with biorthogonal rank-one
// projections, sorted canonically by (Re, Im).
Classified classify_restricted(const Matrix& Ar, const Matrix& basis, double tol_real,
                               bool enforce_dissipative) {
    const Index m = Ar.rows();
    Classified out;
    if (m == 0) return out;

    Eigen::ComplexEigenSolver<Matrix> es(Ar);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectral_decompose_and_classify: eigensolver failed");

    std::vector<Index> order(static_cast<size_t>(m));
    for (Index i = 0; i < m; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Index p, Index q) {
        const Complex ap = es.eigenvalues()(p), aq = es.eigenvalues()(q);
        if (ap.real() != aq.real()) return ap.real() < aq.real();
        return ap.imag() < aq.imag();
    });

    double spr = 0.0;
    for (Index i = 0; i < m; ++i) spr = std::max(spr, std::abs(es.eigenvalues()(i)));

    const double collision_tol = 1e-10 * std::max(1.0, spr);
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j)
            if (std::abs(es.eigenvalues()(i) - es.eigenvalues()(j)) < collision_tol)
                throw std::runtime_error(
                    "spectral_decompose_and_classify: eigenvalue collision (A5 violation)");

    const Matrix V = es.eigenvectors();
    const Matrix W = V.inverse();   // rows are left eigenvectors, <l_s, r_s> = 1

    // completeness of the spectral projections in restricted coordinates
    if ((V * W - Matrix::Identity(m, m)).norm() > 1e-8 * std::sqrt(double(m)))
        throw std::runtime_error(
            "spectral_decompose_and_classify: spectral projections do not resolve the identity");

    const double lam_norm = Ar.norm();
    const double band = tol_real * std::max(1.0, spr);
    for (Index c = 0; c < m; ++c) {
        const Index s = order[static_cast<size_t>(c)];
        const Complex a = es.eigenvalues()(s);
        if (enforce_dissipative && a.imag() < -1e-8 * std::max(lam_norm, 1e-300))
            throw std::runtime_error(
                "spectral_decompose_and_classify: negative imaginary part (dissipativity violation)");
        LevelShiftEig eig;
        eig.a = a;
        eig.right = basis * V.col(s);
        eig.left = basis * W.row(s).adjoint();
        if (std::abs(a.imag()) <= band)
            out.osc.push_back(static_cast<int>(c));
        else
            out.dec.push_back(static_cast<int>(c));
        out.eigs.push_back(std::move(eig));
    }
    return out;
}

} // namespace

// ------------------------------ operations ----------------------------------

double PerturbationParams::smallness_window() const {
    if (!delta || kappa1 <= 0.0 || kappa <= 0.0) return std::numeric_limits<double>::infinity();
    return (*delta / (kappa1 * kappa)) * std::min(1.0, 1.0 / kappa);
}

double PerturbationParams::lambda_guard() const {
    if (!lambda0) return std::numeric_limits<double>::infinity();
    return lambda0_guard_factor * *lambda0;
}

EpsSchedule default_eps_schedule(const CoupledLiouvillean& L, int e_index, double coupling) {
    const auto red = L.reduced_at(e_index, coupling);
    const double e = L.eigenvalue(e_index);
    const LocalSpectrum loc = local_spectrum(red->eigenvalues, e);
    EpsSchedule s;
    s.eps0 = (loc.mean_spacing > 0.0) ? 10.0 * loc.mean_spacing : 1e-2;
    return s;
}

Matrix a_matrix(const CoupledLiouvillean& L, double e, Complex z, double lambda, LimitLog* log) {
    const int ei = L.eigenvalue_index(e);
    if (z.imag() > 0.0)
        throw std::invalid_argument("a_matrix: z must lie in the closed lower half plane");
    const auto& sys = L.sys();
    if (sys.eigenvalues.size() > 1) {
        const double g = spectral_gap(sys);
        if (std::abs(z.real() - e) > 0.5 * g + 1e-12)
            throw std::invalid_argument("a_matrix: |Re z - e| exceeds g/2");
    }
    if (z.imag() < 0.0) {
        if (log) { log->direct = true; log->eps_used = {0.0}; }
        return a_matrix_core(L, ei, z, lambda);
    }
    return a_matrix_boundary(L, ei, z.real(), lambda, nullptr, log);
}

LevelShiftResult level_shift_operator(const CoupledLiouvillean& L, double e,
                                      const EpsSchedule& schedule) {
    if (schedule.eps0 <= 0.0 || schedule.steps < 1 || schedule.ratio <= 0.0 || schedule.ratio >= 1.0)
        throw std::invalid_argument("level_shift_operator: invalid schedule");
    const int ei = L.eigenvalue_index(e);

    // Lambda_e depends on L_0 only (lambda = 0). The reduced spectrum of L_0 is
    // assembled from the product eigenbasis, so this path has no dense solve.
    const auto red = L.reduced_at(ei, 0.0);
    const LocalSpectrum loc = local_spectrum(red->eigenvalues, e);

    LevelShiftResult out;
    if (loc.mean_spacing == 0.0 || loc.dist > 3.0 * loc.mean_spacing) {
        out.Lambda = a_matrix_core(L, ei, Complex(e, 0.0), 0.0);
        out.log.direct = true;
        out.log.eps_used = {0.0};
        return out;
    }
    auto [value, log] = boundary_limit(
        [&](double eps) { return a_matrix_core(L, ei, Complex(e, -eps), 0.0); }, schedule);
    out.Lambda = std::move(value);
    out.log = std::move(log);
    return out;
}

LevelShiftData spectral_decompose_and_classify(const Matrix& Lambda_e, const Matrix& P_e,
                                               double tol_real) {
    const Matrix basis = range_basis(P_e);
    LevelShiftData data;
    data.Lambda = Lambda_e;
    auto cls = classify_restricted(restrict_to(Lambda_e, basis), basis, tol_real, true);
    data.eigs = std::move(cls.eigs);
    data.osc = std::move(cls.osc);
    data.dec = std::move(cls.dec);

    // completeness against P_e itself (small-scale API; the restricted identity
    // resolution is already enforced inside the classifier)
    Matrix sum = Matrix::Zero(P_e.rows(), P_e.cols());
    for (const auto& eg : data.eigs) sum += eg.Q();
    if ((sum - P_e).norm() > 1e-8 * std::max(1.0, P_e.norm()))
        throw std::runtime_error("spectral_decompose_and_classify: projections do not sum to P_e");
    return data;
}

LevelShiftData compute_level_shift(const CoupledLiouvillean& L, int e_index,
                                   const EpsSchedule* schedule, double tol_real) {
    const double e = L.eigenvalue(e_index);
    const EpsSchedule sched = schedule ? *schedule : default_eps_schedule(L, e_index, 0.0);
    LevelShiftResult res = level_shift_operator(L, e, sched);

    const Matrix basis = L.P_e_basis(e_index);
    LevelShiftData data;
    data.e = e;
    data.e_index = e_index;
    data.Lambda = res.Lambda;
    data.regularization_log = res.log;
    auto cls = classify_restricted(restrict_to(res.Lambda, basis), basis, tol_real, true);
    data.eigs = std::move(cls.eigs);
    data.osc = std::move(cls.osc);
    data.dec = std::move(cls.dec);
    return data;
}

std::vector<LevelShiftData> compute_all_level_shifts(const CoupledLiouvillean& L,
                                                     double tol_real) {
    std::vector<LevelShiftData> out;
    out.reserve(static_cast<size_t>(L.eigenvalue_count()));
    for (int i = 0; i < L.eigenvalue_count(); ++i)
        out.push_back(compute_level_shift(L, i, nullptr, tol_real));
    return out;
}

PerturbationParams perturbation_params(const std::vector<LevelShiftData>& all,
                                       const SystemSpec& sys, double lap_estimate,
                                       double norm_I_P_R) {
    PerturbationParams p;
    p.kappa1 = lap_estimate;
    p.norm_I_P_R = norm_I_P_R;
    if (sys.eigenvalues.size() >= 2) p.g = spectral_gap(sys);

    double a_min = std::numeric_limits<double>::infinity();
    double delta_min = std::numeric_limits<double>::infinity();
    bool any_dec = false, any_pair = false;
    for (const auto& d : all) {
        for (size_t s = 0; s < d.eigs.size(); ++s) {
            p.alpha = std::max(p.alpha, std::abs(d.eigs[s].a));
            p.kappa = std::max(p.kappa, d.eigs[s].projection_norm());
            for (size_t t = s + 1; t < d.eigs.size(); ++t) {
                any_pair = true;
                delta_min = std::min(delta_min, std::abs(d.eigs[s].a - d.eigs[t].a));
            }
        }
        for (int s : d.dec) {
            any_dec = true;
            a_min = std::min(a_min, d.eigs[static_cast<size_t>(s)].a.imag());
        }
    }
    if (any_dec) p.a = a_min;
    if (any_pair) p.delta = delta_min;

    if (p.a && p.delta && p.g && p.kappa > 0.0 && p.kappa1 > 0.0) {
        const double g = *p.g, a = *p.a, delta = *p.delta;
        const double k = p.kappa, k1 = p.kappa1, alpha = p.alpha;
        const double inner = std::max(
            {1.0, (1.0 + alpha) / delta, 1.0 / a, (1.0 + k) / (a * delta),
             k * k * ((k / a) * (1.0 + std::pow(k / delta, 3.0)) * (1.0 + 1.0 / a) +
                      1.0 / (delta * delta))});
        p.kappa0 = std::max({1.0, 1.0 / g, k / a, alpha * k,
                             k1 * (1.0 + k1) * (1.0 + g + 1.0 / g),
                             k1 * (1.0 + std::pow(k1, 4.0)) * k * inner});
        const double num = std::min({1.0, a, delta / (k * k), norm_I_P_R, std::pow(g, 1.5)});
        const double den = std::max({1.0, k1 * k * (1.0 + k1 * k / delta), alpha, k1});
        p.lambda0 = num / den;
    }
    return p;
}

BoundaryData boundary_extend(const CoupledLiouvillean& L, const LevelShiftData& lsd,
                             const PerturbationParams& params, double x, double lambda) {
    const double window = params.smallness_window();
    if (std::abs(x - lsd.e) > window || std::abs(lambda) > window)
        throw std::invalid_argument("boundary_extend: (x, lambda) outside the smallness window");

    BoundaryData out;
    Matrix A = a_matrix_boundary(L, lsd.e_index, x, lambda, nullptr, &out.log);
    const Matrix basis = L.P_e_basis(lsd.e_index);
    auto cls = classify_restricted(restrict_to(A, basis), basis, 1e-6, false);

    const double pair_radius =
        params.delta ? 0.5 * *params.delta : std::numeric_limits<double>::infinity();
    out.eigs.resize(lsd.eigs.size());
    std::vector<bool> used(cls.eigs.size(), false);
    for (size_t s = 0; s < lsd.eigs.size(); ++s) {
        int match = -1;
        int candidates = 0;
        for (size_t c = 0; c < cls.eigs.size(); ++c) {
            if (std::abs(cls.eigs[c].a - lsd.eigs[s].a) < pair_radius) {
                ++candidates;
                if (!used[c] && (match < 0 ||
                                 std::abs(cls.eigs[c].a - lsd.eigs[s].a) <
                                     std::abs(cls.eigs[static_cast<size_t>(match)].a - lsd.eigs[s].a)))
                    match = static_cast<int>(c);
            }
        }
        if (candidates != 1 || match < 0) {
            std::vector<Complex> cands;
            for (const auto& c : cls.eigs) cands.push_back(c.a);
            throw PairingError("boundary_extend: eigenvalue pairing ambiguous for channel " +
                                   std::to_string(s),
                               cands);
        }
        used[static_cast<size_t>(match)] = true;
        out.eigs[s] = cls.eigs[static_cast<size_t>(match)];
    }
    return out;
}

} // namespace resodyn
