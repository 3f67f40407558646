// linalg.hpp — Dense complex linear algebra helpers shared by all modules

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace resodyn {

using Complex = std::complex<double>;
using Matrix  = Eigen::MatrixXcd;
using Vector  = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index   = Eigen::Index;

inline constexpr Complex kImag{0.0, 1.0};

// Kronecker product with row-major index pairing: (A ⊗ B)[(i*q+k),(j*q+l)] = A(i,j) B(k,l)
inline Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

inline Matrix identity(Index n) { return Matrix::Identity(n, n); }

// Relative asymmetry ||X - X†|| / ||X||  (Frobenius)
inline double hermiticity_defect(const Matrix& X) {
    const double nrm = X.norm();
    if (nrm == 0.0) return 0.0;
    return (X - X.adjoint()).norm() / nrm;
}

// Symmetrize (X + X†)/2 when the defect is below `tol`, reject otherwise.
inline Matrix hermitize(const Matrix& X, double tol = 1e-12, const char* what = "matrix") {
    const double defect = hermiticity_defect(X);
    if (defect > tol) {
        throw std::invalid_argument(std::string(what) + ": not Hermitian, relative asymmetry " +
                                    std::to_string(defect));
    }
    return 0.5 * (X + X.adjoint());
}

// Spectral (2-)norm. Exact SVD for small matrices, power iteration on X†X above the cutoff.
inline double op_norm(const Matrix& X, Index svd_cutoff = 128) {
    if (X.rows() == 0 || X.cols() == 0) return 0.0;
    if (X.rows() <= svd_cutoff && X.cols() <= svd_cutoff) {
        return X.jacobiSvd().singularValues()(0);
    }
    // power iteration with a fixed deterministic start vector
    Vector v = Vector::Ones(X.cols());
    for (Index i = 0; i < v.size(); ++i) v(i) += Complex(0.0, 1.0) * (0.5 + 0.1 * double(i % 7));
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 60; ++it) {
        Vector w = X.adjoint() * (X * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        sigma = std::sqrt(nw);
    }
    return sigma;
}

// Orthonormal basis of the range of an orthogonal projection Q (columns).
// Eigenvectors of the Hermitian Q with eigenvalue > 1/2.
inline Matrix range_basis(const Matrix& Q) {
    if (Q.rows() != Q.cols())
        throw std::invalid_argument("range_basis: projection must be square");
    if (Q.rows() == 0) return Matrix(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("range_basis: eigensolver failed");
    std::vector<Index> keep;
    for (Index i = 0; i < Q.rows(); ++i)
        if (es.eigenvalues()(i) > 0.5) keep.push_back(i);
    Matrix B(Q.rows(), static_cast<Index>(keep.size()));
    for (Index j = 0; j < B.cols(); ++j) B.col(j) = es.eigenvectors().col(keep[static_cast<size_t>(j)]);
    return B;
}

// Basis of the orthogonal complement Ran(1 - Q).
inline Matrix complement_basis(const Matrix& Q) {
    return range_basis(identity(Q.rows()) - Q);
}

// Compress a full-space operator to the coordinates of an orthonormal column basis B.
inline Matrix restrict_to(const Matrix& X, const Matrix& B) { return B.adjoint() * X * B; }

// Embed a basis-coordinates operator back into the full space (supported on span B).
inline Matrix embed_from(const Matrix& Xr, const Matrix& B) { return B * Xr * B.adjoint(); }

} // namespace resodyn
