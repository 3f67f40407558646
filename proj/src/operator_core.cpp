// operator_core.cpp — Liouvillean assembly, spectral caches, audits

#include "resodyn/operator_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resodyn/errors.hpp"
#include "resodyn/level_shift.hpp"

namespace resodyn {

namespace {

std::uint64_t key_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

double spectrum_scale(const RealVector& eigs) {
    double s = 1.0;
    for (Index i = 0; i < eigs.size(); ++i) s = std::max(s, std::abs(eigs(i)));
    return s;
}

} // namespace

// ------------------------------ construction --------------------------------

SystemSpec make_system_spec(const Matrix& L_S, double cluster_tol) {
    if (L_S.rows() != L_S.cols() || L_S.rows() == 0)
        throw std::invalid_argument("make_system_spec: L_S must be square and nonempty");
    SystemSpec spec;
    spec.L_S = hermitize(L_S, 1e-12, "L_S");
    spec.dim = L_S.rows();

    Eigen::SelfAdjointEigenSolver<Matrix> es(spec.L_S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("make_system_spec: eigensolver failed");
    const RealVector& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    const double tol = cluster_tol * std::max(scale, 1e-300);

    spec.eigenbasis = es.eigenvectors();
    spec.basis_eigenvalue.assign(ev.data(), ev.data() + ev.size());

    // cluster ascending eigenvalues; each cluster is one e with summed multiplicity
    Index i = 0;
    while (i < ev.size()) {
        Index j = i + 1;
        while (j < ev.size() && ev(j) - ev(j - 1) <= tol) ++j;
        double mean = 0.0;
        for (Index k = i; k < j; ++k) mean += ev(k);
        mean /= double(j - i);
        Matrix P = Matrix::Zero(spec.dim, spec.dim);
        for (Index k = i; k < j; ++k) {
            P += spec.eigenbasis.col(k) * spec.eigenbasis.col(k).adjoint();
            spec.basis_eigenvalue[static_cast<size_t>(k)] = mean;
        }
        spec.eigenvalues.push_back(mean);
        spec.multiplicities.push_back(static_cast<int>(j - i));
        spec.projections.push_back(std::move(P));
        i = j;
    }
    return spec;
}

ReservoirSpec make_reservoir_spec(const Matrix& L_R, const Vector& omega) {
    if (L_R.rows() != L_R.cols() || L_R.rows() == 0)
        throw std::invalid_argument("make_reservoir_spec: L_R must be square and nonempty");
    if (omega.size() != L_R.rows())
        throw std::invalid_argument("make_reservoir_spec: omega dimension mismatch");
    ReservoirSpec res;
    res.L_R = hermitize(L_R, 1e-12, "L_R");
    res.dim = L_R.rows();
    res.omega = omega;
    const double nrm = res.omega.norm();
    if (std::abs(nrm - 1.0) > 1e-10)
        throw std::invalid_argument("make_reservoir_spec: omega must be a unit vector");
    res.omega /= nrm;

    const double scale = std::max(op_norm(res.L_R), 1e-300);
    if ((res.L_R * res.omega).norm() > 1e-12 * scale)
        throw std::invalid_argument("make_reservoir_spec: omega is not stationary (L_R omega != 0)");

    Eigen::SelfAdjointEigenSolver<Matrix> es(res.L_R);
    int near_zero = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i)) <= 1e-9 * scale) ++near_zero;
    res.kernel_simple = (near_zero == 1);
    return res;
}

CoupledLiouvillean build_liouvillean(const SystemSpec& sys, const ReservoirSpec& res,
                                     const Matrix& interaction, double lambda) {
    const Index n = sys.dim * res.dim;
    if (interaction.rows() != n || interaction.cols() != n)
        throw std::invalid_argument("build_liouvillean: interaction must act on dim_S * dim_R");
    return CoupledLiouvillean(sys, res, hermitize(interaction, 1e-12, "interaction"), lambda);
}

CoupledLiouvillean::CoupledLiouvillean(SystemSpec sys, ReservoirSpec res, Matrix interaction,
                                       double lambda)
    : sys_(std::move(sys)), res_(std::move(res)), I_(std::move(interaction)), lambda_(lambda) {
    const Index ds = sys_.dim, dr = res_.dim;
    L0_ = kron(sys_.L_S, identity(dr)) + kron(identity(ds), res_.L_R);
    L_lambda_ = L0_ + lambda_ * I_;

    const Matrix omega_proj = res_.omega * res_.omega.adjoint();
    P_R_ = kron(identity(ds), omega_proj);
    P_R_perp_ = identity(ds * dr) - P_R_;
    P_e_.reserve(sys_.projections.size());
    for (const auto& Ps : sys_.projections) P_e_.push_back(kron(Ps, omega_proj));

    // reservoir eigenbasis with the kernel column pinned to omega
    Eigen::SelfAdjointEigenSolver<Matrix> es(res_.L_R);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("CoupledLiouvillean: reservoir eigensolver failed");
    res_basis_ = es.eigenvectors();
    res_eigs_ = es.eigenvalues();
    Index kcol = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < res_eigs_.size(); ++k) {
        if (std::abs(res_eigs_(k)) < best) { best = std::abs(res_eigs_(k)); kcol = k; }
    }
    res_kernel_col_ = kcol;
    if (std::abs(std::abs(res_basis_.col(kcol).dot(res_.omega)) - 1.0) > 1e-8)
        throw std::invalid_argument(
            "CoupledLiouvillean: reservoir kernel eigenvector does not match omega");
    res_basis_.col(kcol) = res_.omega;
    res_eigs_(kcol) = 0.0;
}

Matrix CoupledLiouvillean::P_e_basis(int i) const {
    const double e = sys_.eigenvalues[static_cast<size_t>(i)];
    const Index m = sys_.multiplicities[static_cast<size_t>(i)];
    Matrix B(dim(), m);
    Index col = 0;
    for (Index j = 0; j < sys_.dim; ++j) {
        if (sys_.basis_eigenvalue[static_cast<size_t>(j)] == e)
            B.col(col++) = product_state(sys_.eigenbasis.col(j), res_.omega);
    }
    return B;
}

int CoupledLiouvillean::eigenvalue_index(double e) const {
    const double scale = std::max(1.0, std::abs(sys_.eigenvalues.front())) +
                         std::abs(sys_.eigenvalues.back());
    for (size_t i = 0; i < sys_.eigenvalues.size(); ++i)
        if (std::abs(sys_.eigenvalues[i] - e) <= 1e-9 * scale) return static_cast<int>(i);
    throw std::invalid_argument("eigenvalue_index: e is not an eigenvalue of L_S");
}

// ------------------------------ spectral caches ------------------------------

const SpectralDecomposition& CoupledLiouvillean::full_spectral() const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    if (!cache_->full) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(L_lambda_);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("full_spectral: eigensolver failed");
        cache_->full = SpectralDecomposition{es.eigenvalues(), es.eigenvectors()};
    }
    return *cache_->full;
}

std::shared_ptr<const ReducedSpectral> CoupledLiouvillean::product_restricted() const {
    const Index ds = sys_.dim, dr = res_.dim;
    auto out = std::make_shared<ReducedSpectral>();
    out->modes.resize(ds * dr, ds * (dr - 1));
    out->eigenvalues.resize(ds * (dr - 1));
    Index col = 0;
    for (Index i = 0; i < ds; ++i) {
        for (Index k = 0; k < dr; ++k) {
            if (k == res_kernel_col_) continue;
            out->modes.col(col) = product_state(sys_.eigenbasis.col(i), res_basis_.col(k));
            out->eigenvalues(col) = sys_.basis_eigenvalue[static_cast<size_t>(i)] + res_eigs_(k);
            ++col;
        }
    }
    return out;
}

std::shared_ptr<const ReducedSpectral> CoupledLiouvillean::reservoir_restricted(double mu) const {
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->restricted.find(key_bits(mu));
        if (it != cache_->restricted.end()) return it->second;
    }
    std::shared_ptr<const ReducedSpectral> result;
    if (mu == 0.0) {
        result = product_restricted();
    } else {
        // complement basis assembled from product modes (mode != omega)
        const Index ds = sys_.dim, dr = res_.dim;
        Matrix B(ds * dr, ds * (dr - 1));
        Index col = 0;
        for (Index i = 0; i < ds; ++i)
            for (Index k = 0; k < dr; ++k) {
                if (k == res_kernel_col_) continue;
                B.col(col++) = product_state(sys_.eigenbasis.col(i), res_basis_.col(k));
            }
        const Matrix Lmu = L_at(mu);
        Eigen::SelfAdjointEigenSolver<Matrix> es(restrict_to(Lmu, B));
        if (es.info() != Eigen::Success)
            throw std::runtime_error("reservoir_restricted: eigensolver failed");
        auto out = std::make_shared<ReducedSpectral>();
        out->modes = B * es.eigenvectors();
        out->eigenvalues = es.eigenvalues();
        result = out;
    }
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->restricted.emplace(key_bits(mu), result);
    return result;
}

std::shared_ptr<const ReducedSpectral> CoupledLiouvillean::product_reduced(int e_index) const {
    const Index ds = sys_.dim, dr = res_.dim;
    const double e = sys_.eigenvalues[static_cast<size_t>(e_index)];
    const Index m = sys_.multiplicities[static_cast<size_t>(e_index)];
    auto out = std::make_shared<ReducedSpectral>();
    out->modes.resize(ds * dr, ds * dr - m);
    out->eigenvalues.resize(ds * dr - m);
    Index col = 0;
    for (Index i = 0; i < ds; ++i) {
        const bool in_e = (sys_.basis_eigenvalue[static_cast<size_t>(i)] == e);
        for (Index k = 0; k < dr; ++k) {
            if (in_e && k == res_kernel_col_) continue;
            out->modes.col(col) = product_state(sys_.eigenbasis.col(i), res_basis_.col(k));
            out->eigenvalues(col) = sys_.basis_eigenvalue[static_cast<size_t>(i)] + res_eigs_(k);
            ++col;
        }
    }
    return out;
}

std::shared_ptr<const ReducedSpectral> CoupledLiouvillean::reduced_at(int e_index, double mu) const {
    const auto key = std::make_pair(e_index, key_bits(mu));
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->reduced.find(key);
        if (it != cache_->reduced.end()) return it->second;
    }
    std::shared_ptr<const ReducedSpectral> result;
    if (mu == 0.0) {
        result = product_reduced(e_index);
    } else {
        const Index ds = sys_.dim, dr = res_.dim;
        const double e = sys_.eigenvalues[static_cast<size_t>(e_index)];
        const Index m = sys_.multiplicities[static_cast<size_t>(e_index)];
        Matrix B(ds * dr, ds * dr - m);
        Index col = 0;
        for (Index i = 0; i < ds; ++i) {
            const bool in_e = (sys_.basis_eigenvalue[static_cast<size_t>(i)] == e);
            for (Index k = 0; k < dr; ++k) {
                if (in_e && k == res_kernel_col_) continue;
                B.col(col++) = product_state(sys_.eigenbasis.col(i), res_basis_.col(k));
            }
        }
        const Matrix Lmu = L_at(mu);
        Eigen::SelfAdjointEigenSolver<Matrix> es(restrict_to(Lmu, B));
        if (es.info() != Eigen::Success)
            throw std::runtime_error("reduced_at: eigensolver failed");
        auto out = std::make_shared<ReducedSpectral>();
        out->modes = B * es.eigenvectors();
        out->eigenvalues = es.eigenvalues();
        result = out;
    }
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->reduced.emplace(key, result);
    return result;
}

// ------------------------------- operations ---------------------------------

std::pair<Vector, Matrix> purify_gibbs(const Matrix& H_S, double beta) {
    if (beta < 0.0) throw std::invalid_argument("purify_gibbs: beta must be >= 0");
    const Matrix H = hermitize(H_S, 1e-12, "H_S");
    const Index d = H.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) throw std::runtime_error("purify_gibbs: eigensolver failed");

    const double emin = es.eigenvalues().minCoeff();
    Vector psi = Vector::Zero(d * d);
    for (Index k = 0; k < d; ++k) {
        const double w = std::exp(-0.5 * beta * (es.eigenvalues()(k) - emin));
        psi += w * product_state(es.eigenvectors().col(k), es.eigenvectors().col(k));
    }
    psi /= psi.norm();
    Matrix L = kron(H, identity(d)) - kron(identity(d), H);
    return {psi, L};
}

Matrix reduced_resolvent(const CoupledLiouvillean& L, const Matrix& Q, Complex z) {
    if (Q.rows() != L.dim() || Q.cols() != L.dim())
        throw std::invalid_argument("reduced_resolvent: projection dimension mismatch");
    const Matrix B = complement_basis(Q);
    const Index k = B.cols();
    if (k == 0) return Matrix::Zero(L.dim(), L.dim());

    Eigen::SelfAdjointEigenSolver<Matrix> es(restrict_to(L.L_lambda(), B));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("reduced_resolvent: eigensolver failed");
    const RealVector& mu = es.eigenvalues();
    const double scale = spectrum_scale(mu);
    Index nearest = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) {
        const double d = std::abs(Complex(mu(i), 0.0) - z);
        if (d < dist) { dist = d; nearest = i; }
    }
    if (dist <= 1e-12 * scale)
        throw SingularResolventError("reduced_resolvent: z on reduced spectrum", mu(nearest));

    const Matrix modes = B * es.eigenvectors();
    Matrix R = Matrix::Zero(L.dim(), L.dim());
    for (Index i = 0; i < k; ++i)
        R += (1.0 / (Complex(mu(i), 0.0) - z)) * (modes.col(i) * modes.col(i).adjoint());
    return R;
}

double spectral_gap(const SystemSpec& sys) {
    if (sys.eigenvalues.size() < 2)
        throw std::domain_error("spectral_gap: undefined for a single eigenvalue");
    double g = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < sys.eigenvalues.size(); ++i)
        g = std::min(g, sys.eigenvalues[i + 1] - sys.eigenvalues[i]);
    return g;
}

AssumptionReport audit_assumptions(const CoupledLiouvillean& L,
                                   const std::vector<LevelShiftData>& lsd) {
    AssumptionReport rep;

    // (A1) simple spectrum of L_lambda
    const auto& full = L.full_spectral();
    const RealVector& ev = full.eigenvalues;
    const double scale1 = spectrum_scale(ev);
    double min_gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i + 1 < ev.size(); ++i) min_gap = std::min(min_gap, ev(i + 1) - ev(i));
    rep.a1_min_gap = (ev.size() > 1) ? min_gap : 0.0;
    rep.a1_simple_eigs = (ev.size() > 1) && (min_gap > 1e-10 * scale1);

    // (A2) unique stationary reservoir state
    {
        const auto& res = L.res();
        const double scale_r = std::max(op_norm(res.L_R), 1e-300);
        const bool stationary = (res.L_R * res.omega).norm() <= 1e-12 * scale_r;
        Eigen::SelfAdjointEigenSolver<Matrix> es(res.L_R);
        int near_zero = 0;
        for (Index i = 0; i < es.eigenvalues().size(); ++i)
            if (std::abs(es.eigenvalues()(i)) <= 1e-9 * scale_r) ++near_zero;
        rep.a2_kernel = stationary && (near_zero == 1);
    }

    // (A4) vanishing diagonal blocks of the interaction
    {
        const double norm_I = std::max(op_norm(L.interaction()), 1e-300);
        double worst = 0.0;
        for (int i = 0; i < L.eigenvalue_count(); ++i) {
            const Matrix B = L.P_e_basis(i);
            worst = std::max(worst, op_norm(restrict_to(L.interaction(), B)));
        }
        rep.a4_max_diag_norm = worst;
        rep.a4_diagonal_free = worst <= 1e-10 * norm_I;
    }

    // (A5) simple level-shift spectra
    {
        double margin = std::numeric_limits<double>::infinity();
        double spr = 0.0;
        bool any_pair = false;
        for (const auto& d : lsd) {
            for (size_t s = 0; s < d.eigs.size(); ++s) {
                spr = std::max(spr, std::abs(d.eigs[s].a));
                for (size_t t = s + 1; t < d.eigs.size(); ++t) {
                    any_pair = true;
                    margin = std::min(margin, std::abs(d.eigs[s].a - d.eigs[t].a));
                }
            }
        }
        rep.a5_margin = any_pair ? margin : std::numeric_limits<double>::infinity();
        rep.a5_fgr = !lsd.empty() && (!any_pair || margin > 1e-8 * std::max(1.0, spr));
        if (lsd.empty()) rep.notes += "a5: no level-shift data supplied; ";
    }

    rep.notes += "a3 (relative boundedness of I P_e) holds trivially at finite dimension";
    return rep;
}

} // namespace resodyn
