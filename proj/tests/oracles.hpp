// oracles.hpp — Test-side reference implementations, independent of the
// library's computational paths, plus seeded random-input generators

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "resodyn/linalg.hpp"
#include "resodyn/rng.hpp"

namespace oracles {

using resodyn::Complex;
using resodyn::Index;
using resodyn::Matrix;
using resodyn::Vector;

// Matrix exponential by scaling and squaring with a [6/6] Pade approximant.
inline Matrix expm_pade(const Matrix& A) {
    const Index n = A.rows();
    const double nrm = A.cwiseAbs().sum() / double(n);
    int squarings = 0;
    Matrix As = A;
    while (As.cwiseAbs().maxCoeff() > 0.5 && squarings < 40) {
        As *= 0.5;
        ++squarings;
    }
    (void)nrm;
    const double c[7] = {1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0,
                         1.0 / 665280.0};
    Matrix A2 = As * As;
    Matrix A4 = A2 * A2;
    Matrix A6 = A4 * A2;
    Matrix U = As * (c[1] * Matrix::Identity(n, n) + c[3] * A2 + c[5] * A4);
    Matrix V = c[0] * Matrix::Identity(n, n) + c[2] * A2 + c[4] * A4 + c[6] * A6;
    Matrix F = (V - U).partialPivLu().solve(V + U);
    for (int s = 0; s < squarings; ++s) F = F * F;
    return F;
}

// Moore-Penrose pseudo-inverse through the SVD (restrict-then-invert oracle).
inline Matrix pinv(const Matrix& A, double tol = 1e-12) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cut = tol * s(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > cut) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

inline Matrix random_hermitian(resodyn::Rng& rng, Index n, double scale = 1.0) {
    Matrix X(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) X(i, j) = Complex(rng.normal(), rng.normal());
    return resodyn::Matrix(0.5 * scale * (X + X.adjoint()));
}

inline Vector random_vector(resodyn::Rng& rng, Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = Complex(rng.normal(), rng.normal());
    return v;
}

// random rank-k orthogonal projection
inline Matrix random_projection(resodyn::Rng& rng, Index n, Index k) {
    Matrix X(n, k);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) X(i, j) = Complex(rng.normal(), rng.normal());
    Eigen::HouseholderQR<Matrix> qr(X);
    Matrix Q = qr.householderQ() * Matrix::Identity(n, k);
    return Q * Q.adjoint();
}

// principal value of Int p2(w)/(w - e) dw over [lo, hi] by singularity
// subtraction and Simpson quadrature; p2 must be smooth
template <class F>
double principal_value(F p2, double e, double lo, double hi, int n = 20001) {
    if (n % 2 == 0) ++n;
    const double h = (hi - lo) / double(n - 1);
    auto f = [&](double w) {
        const double d = w - e;
        if (std::abs(d) < 1e-14) {
            const double dd = 1e-6 * (hi - lo);
            return (p2(e + dd) - p2(e - dd)) / (2.0 * dd);   // limit of the subtracted integrand
        }
        return (p2(w) - p2(e)) / d;
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i + 1 < n; ++i) acc += f(lo + h * double(i)) * ((i % 2) ? 4.0 : 2.0);
    double pv = acc * h / 3.0;
    if (e > lo && e < hi) pv += p2(e) * std::log((hi - e) / (e - lo));
    return pv;
}

} // namespace oracles
