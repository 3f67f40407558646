// feshbach.cpp — Feshbach maps, resolvent decomposition, isospectral location

#include "resodyn/feshbach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resodyn/errors.hpp"

namespace resodyn {

namespace {

// Restricted Feshbach map F(H - x; Q) evaluated through the reduced eigenbasis:
// Fr(x) = (Hq - x) - C^dag diag(1/(mu_k - x)) C, one O(k m^2) pass per x.
struct FeshbachKernel {
    Matrix Bq;        // n x m, basis of Ran Q
    Matrix Hq;        // m x m
    RealVector mu;    // reduced spectrum (ascending)
    Matrix C;         // k x m
    double scale = 1.0;

    Matrix at(Complex z) const {
        const Index m = Bq.cols();
        Matrix F = Hq - z * Matrix::Identity(m, m);
        for (Index k = 0; k < mu.size(); ++k)
            F.noalias() -= (1.0 / (Complex(mu(k), 0.0) - z)) * (C.row(k).adjoint() * C.row(k));
        return F;
    }

    double dist_to_reduced(double x) const {
        double d = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < mu.size(); ++k) d = std::min(d, std::abs(mu(k) - x));
        return d;
    }

    // minimal spacing among the reduced eigenvalues nearest x
    double local_spacing(double x) const {
        if (mu.size() < 2) return 0.0;
        std::vector<double> v(mu.data(), mu.data() + mu.size());
        std::sort(v.begin(), v.end(), [x](double p, double q) {
            return std::abs(p - x) < std::abs(q - x);
        });
        const size_t k = std::min<size_t>(6, v.size());
        std::vector<double> w(v.begin(), v.begin() + static_cast<long>(k));
        std::sort(w.begin(), w.end());
        double s = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < w.size(); ++i)
            if (w[i + 1] - w[i] > 0.0) s = std::min(s, w[i + 1] - w[i]);
        return std::isfinite(s) ? s : 0.0;
    }
};

FeshbachKernel make_kernel(const Matrix& H, const Matrix& Q) {
    FeshbachKernel ker;
    ker.Bq = range_basis(Q);
    const Matrix Bc = complement_basis(Q);
    ker.Hq = restrict_to(H, ker.Bq);
    ker.scale = std::max(1.0, op_norm(H));
    if (Bc.cols() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(restrict_to(H, Bc));
        if (es.info() != Eigen::Success)
            throw std::runtime_error("feshbach: reduced eigensolver failed");
        ker.mu = es.eigenvalues();
        ker.C = (Bc * es.eigenvectors()).adjoint() * H * ker.Bq;
    } else {
        ker.mu = RealVector(0);
        ker.C = Matrix(0, ker.Bq.cols());
    }
    return ker;
}

// Boundary evaluation at real x per the locate design: direct inversion when x
// is separated from the reduced spectrum, otherwise z = x - i eps with a
// halving schedule stopped at tol or at 0.1 x (local reduced spacing).
Matrix kernel_at_real(const FeshbachKernel& ker, double x, double tol) {
    if (ker.mu.size() == 0 || ker.dist_to_reduced(x) > 1e-8 * ker.scale)
        return ker.at(Complex(x, 0.0));

    const double floor = 0.1 * ker.local_spacing(x);
    double eps = 1e-2 * ker.scale;
    Matrix prev = ker.at(Complex(x, -eps));
    for (int k = 0; k < 60; ++k) {
        eps *= 0.5;
        if (eps < floor) break;
        Matrix cur = ker.at(Complex(x, -eps));
        const double inc = (cur - prev).norm();
        prev = std::move(cur);
        if (inc < tol * std::max(1.0, prev.norm())) break;
    }
    return prev;
}

// signed eigenvalue of a Hermitian matrix closest to zero, all eigenvalues out
RealVector herm_eigs(const Matrix& F) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (F + F.adjoint()));
    return es.eigenvalues();
}

struct NodeData {
    double min_abs;
    int det_sign;   // sign of the product of eigenvalues
};

NodeData node_data(const FeshbachKernel& ker, double x) {
    const RealVector ev = herm_eigs(ker.at(Complex(x, 0.0)));
    NodeData nd{std::numeric_limits<double>::infinity(), 1};
    for (Index i = 0; i < ev.size(); ++i) {
        nd.min_abs = std::min(nd.min_abs, std::abs(ev(i)));
        if (ev(i) < 0.0) nd.det_sign = -nd.det_sign;
    }
    return nd;
}

} // namespace

// ------------------------------ feshbach map ---------------------------------

Matrix feshbach_map(const Matrix& A, const Matrix& Q) {
    if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows())
        throw std::invalid_argument("feshbach_map: dimension mismatch");
    const Matrix Bc = complement_basis(Q);
    if (Bc.cols() == 0) return Q * A * Q;

    const Matrix D = restrict_to(A, Bc);
    Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e12))
        throw SingularBlockError("feshbach_map: complement block not invertible", cond);

    const Matrix Dinv = svd.matrixV() * svd.singularValues().cwiseInverse().asDiagonal() *
                        svd.matrixU().adjoint();
    return Q * (A - A * embed_from(Dinv, Bc) * A) * Q;
}

Matrix feshbach_map_at_real(const Matrix& H, const Matrix& Q, double x, double tol) {
    const FeshbachKernel ker = make_kernel(hermitize(H, 1e-12, "H"), Q);
    return embed_from(kernel_at_real(ker, x, tol), ker.Bq);
}

// -------------------------- resolvent decomposition ---------------------------

FeshbachDecomposition resolvent_decomposition(const CoupledLiouvillean& L, const Matrix& Q,
                                              Complex z) {
    if (!(z.imag() < 0.0))
        throw std::invalid_argument("resolvent_decomposition: Im z must be < 0");
    const Matrix& H = L.L_lambda();
    const Index n = H.rows();
    if (Q.rows() != n || Q.cols() != n)
        throw std::invalid_argument("resolvent_decomposition: projection dimension mismatch");

    FeshbachDecomposition out;
    out.z = z;
    out.Q = Q;

    const Matrix Bc = complement_basis(Q);
    const Matrix Bq = range_basis(Q);

    if (Bc.cols() == 0) {   // Q = identity: everything is the Feshbach block
        out.F_inv = (H - z * identity(n)).inverse();
        out.B = Matrix::Zero(n, n);
        out.R_Q = Matrix::Zero(n, n);
        return out;
    }
    const Matrix Dr = restrict_to(H, Bc) - z * Matrix::Identity(Bc.cols(), Bc.cols());
    out.R_Q = embed_from(Dr.inverse().eval(), Bc);

    if (Bq.cols() == 0) {   // Q = 0: full resolvent sits in R_Q
        out.F_inv = Matrix::Zero(n, n);
        out.B = Matrix::Zero(n, n);
        return out;
    }
    const Matrix Fr = restrict_to(H - z * identity(n) - H * out.R_Q * H, Bq);
    out.F_inv = embed_from(Fr.inverse().eval(), Bq);
    out.B = -out.F_inv * H * out.R_Q - out.R_Q * H * out.F_inv +
            out.R_Q * H * out.F_inv * H * out.R_Q;
    return out;
}

double block_factorization_check(const Matrix& H_in, const Matrix& Q, Complex z) {
    const Matrix H = hermitize(H_in, 1e-12, "H");
    const Index n = H.rows();
    const Matrix Bc = complement_basis(Q);
    const Matrix Hz = H - z * identity(n);

    Matrix RQ = Matrix::Zero(n, n);
    if (Bc.cols() > 0) {
        const Matrix Dr = restrict_to(H, Bc) - z * Matrix::Identity(Bc.cols(), Bc.cols());
        Eigen::JacobiSVD<Matrix> svd(Dr);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        const double cond = (smin > 0.0) ? svd.singularValues()(0) / smin
                                         : std::numeric_limits<double>::infinity();
        if (!(cond <= 1e12))
            throw SingularBlockError("block_factorization_check: singular reduced block", cond);
        RQ = embed_from(Dr.inverse().eval(), Bc);
    }
    const Matrix Qp = identity(n) - Q;
    const Matrix F = Q * (Hz - H * RQ * H) * Q;

    const Matrix upper = identity(n) + Q * H * RQ;
    const Matrix middle = F + Qp * Hz * Qp;
    const Matrix lower = identity(n) + RQ * H * Q;

    return (upper * middle * lower - Hz).norm() / Hz.norm();
}

// ---------------------------- isospectral locate ------------------------------

IsospectralResult isospectral_locate(const Matrix& H_in, const Matrix& Q, double lo, double hi,
                                     double tol) {
    if (!(lo < hi)) throw std::invalid_argument("isospectral_locate: empty interval");
    if (!(tol > 0.0)) throw std::invalid_argument("isospectral_locate: tol must be positive");
    const Matrix H = hermitize(H_in, 1e-12, "H");
    const FeshbachKernel ker = make_kernel(H, Q);
    IsospectralResult result;
    if (ker.Bq.cols() == 0) return result;

    const double scale = ker.scale;
    const double r_ex = std::max(10.0 * tol, 1e-10) * scale;

    // excluded sub-intervals around the reduced spectrum
    std::vector<std::pair<double, double>> excl;
    for (Index k = 0; k < ker.mu.size(); ++k) {
        const double m = ker.mu(k);
        if (m + r_ex < lo || m - r_ex > hi) continue;
        excl.emplace_back(std::max(lo, m - r_ex), std::min(hi, m + r_ex));
    }
    std::sort(excl.begin(), excl.end());
    for (const auto& w : excl) {
        if (!result.excluded.empty() && w.first <= result.excluded.back().second)
            result.excluded.back().second = std::max(result.excluded.back().second, w.second);
        else
            result.excluded.push_back(w);
    }
    auto in_excluded = [&](double x) {
        for (const auto& w : result.excluded)
            if (x >= w.first && x <= w.second) return true;
        return false;
    };

    // uniform scan of the Hermitian boundary values
    const double step = std::sqrt(tol) * (hi - lo);
    const Index nn = static_cast<Index>(std::ceil((hi - lo) / step)) + 1;
    std::vector<double> xs(static_cast<size_t>(nn));
    std::vector<NodeData> nodes(static_cast<size_t>(nn));
    std::vector<bool> valid(static_cast<size_t>(nn));
    for (Index i = 0; i < nn; ++i) {
        const double x = lo + (hi - lo) * double(i) / double(nn - 1);
        xs[static_cast<size_t>(i)] = x;
        valid[static_cast<size_t>(i)] = !in_excluded(x);
        if (valid[static_cast<size_t>(i)]) nodes[static_cast<size_t>(i)] = node_data(ker, x);
    }

    std::vector<double> roots;

    auto verify_and_add = [&](double E) {
        const RealVector ev = herm_eigs(ker.at(Complex(E, 0.0)));
        int mult = 0;
        for (Index i = 0; i < ev.size(); ++i)
            if (std::abs(ev(i)) <= tol * scale) ++mult;
        if (mult == 0) return;
        for (double r : roots)
            if (std::abs(r - E) <= 2.0 * tol * scale) return;
        roots.push_back(E);
        result.found.push_back({E, mult});
    };

    auto signed_min_eig = [&](double x) {
        const RealVector ev = herm_eigs(ker.at(Complex(x, 0.0)));
        Index best = 0;
        for (Index i = 1; i < ev.size(); ++i)
            if (std::abs(ev(i)) < std::abs(ev(best))) best = i;
        return ev(best);
    };

    for (Index i = 0; i + 1 < nn; ++i) {
        const size_t a = static_cast<size_t>(i), b = a + 1;
        if (!valid[a] || !valid[b]) continue;

        if (nodes[a].det_sign * nodes[b].det_sign < 0) {
            // bisection on the determinant sign
            double xl = xs[a], xr = xs[b];
            int sl = nodes[a].det_sign;
            for (int it = 0; it < 100 && (xr - xl) > 1e-13 * scale; ++it) {
                const double xm = 0.5 * (xl + xr);
                const NodeData nm = node_data(ker, xm);
                if (nm.det_sign == sl) xl = xm; else xr = xm;
            }
            verify_and_add(0.5 * (xl + xr));
        } else if (i > 0 && valid[a - 1] && nodes[a].min_abs < nodes[a - 1].min_abs &&
                   nodes[a].min_abs < nodes[b].min_abs &&
                   nodes[a].min_abs < std::max(1e3 * tol, step) * scale) {
            // even-multiplicity dip: golden-section on |eigenvalue nearest zero|
            const double gr = 0.6180339887498949;
            double xl = xs[a - 1], xr = xs[b];
            double x1 = xr - gr * (xr - xl), x2 = xl + gr * (xr - xl);
            double f1 = std::abs(signed_min_eig(x1)), f2 = std::abs(signed_min_eig(x2));
            for (int it = 0; it < 120 && (xr - xl) > 1e-13 * scale; ++it) {
                if (f1 < f2) { xr = x2; x2 = x1; f2 = f1; x1 = xr - gr * (xr - xl); f1 = std::abs(signed_min_eig(x1)); }
                else { xl = x1; x1 = x2; f1 = f2; x2 = xl + gr * (xr - xl); f2 = std::abs(signed_min_eig(x2)); }
            }
            verify_and_add(0.5 * (xl + xr));
        }
    }

    std::sort(result.found.begin(), result.found.end(),
              [](const LocatedEigenvalue& p, const LocatedEigenvalue& q) { return p.E < q.E; });
    return result;
}

// --------------------------- eigenvector reconstruction -----------------------

Vector reconstruct_eigenvector(const Matrix& H_in, const Matrix& Q, double E, const Vector& phi,
                               double tol) {
    const Matrix H = hermitize(H_in, 1e-12, "H");
    if (phi.size() != H.rows())
        throw std::invalid_argument("reconstruct_eigenvector: phi dimension mismatch");
    if ((Q * phi - phi).norm() > 1e-8 * phi.norm())
        throw std::invalid_argument("reconstruct_eigenvector: phi not in Ran Q");

    const FeshbachKernel ker = make_kernel(H, Q);
    const double scale = ker.scale;

    // precondition: phi is in the numerical kernel of F(H - E; Q)
    const Vector phi_r = ker.Bq.adjoint() * phi;
    if ((kernel_at_real(ker, E, tol) * phi_r).norm() > tol * scale * phi.norm())
        throw std::invalid_argument("reconstruct_eigenvector: F(H-E;Q) phi is not small");

    Vector v = Vector::Zero(H.rows());
    if (ker.mu.size() > 0) {
        const Matrix Bc = complement_basis(Q);
        Eigen::SelfAdjointEigenSolver<Matrix> es(restrict_to(H, Bc));
        const Matrix modes = Bc * es.eigenvectors();
        const Vector w = modes.adjoint() * (H * phi);    // components of Q^perp H Q phi

        auto resolve = [&](double eps) {
            Vector out = Vector::Zero(H.rows());
            for (Index k = 0; k < es.eigenvalues().size(); ++k)
                out += (w(k) / (Complex(es.eigenvalues()(k) - E, eps))) * modes.col(k);
            return out;
        };

        if (ker.dist_to_reduced(E) > 1e-8 * scale) {
            v = resolve(0.0);
        } else {
            const double floor = 0.1 * ker.local_spacing(E);
            double eps = 1e-2 * scale;
            v = resolve(eps);
            std::vector<double> increments;
            while (eps * 0.5 >= floor && increments.size() < 60) {
                eps *= 0.5;
                Vector next = resolve(eps);
                increments.push_back((next - v).norm());
                v = std::move(next);
                const size_t n = increments.size();
                if (increments[n - 1] < tol * std::max(1.0, v.norm())) break;
                if (n >= 2 && increments[n - 1] > 1.1 * increments[n - 2])
                    throw BoundaryLimitError("reconstruct_eigenvector: eps sequence not Cauchy",
                                             increments);
            }
        }
    }

    Vector Phi = phi - v;
    const double residual = (H * Phi - E * Phi).norm();
    if (residual > 10.0 * tol * scale * Phi.norm())
        throw std::runtime_error("reconstruct_eigenvector: eigen-residual exceeds contract");
    return Phi;
}

} // namespace resodyn
