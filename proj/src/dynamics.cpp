// dynamics.cpp — Propagators and limiting-absorption estimators

#include "resodyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "resodyn/errors.hpp"

namespace resodyn {

namespace {

// 16-point Gauss-Legendre rule on [-1, 1]
constexpr double kGlX[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                            0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                            0.9445750230732326, 0.9894009349916499};
constexpr double kGlW[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                            0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                            0.0622535239386479, 0.0271524594117541};

double tail_bound_at(double X, double rho, double w, double t) {
    if (X <= rho) return std::numeric_limits<double>::infinity();
    return (1.0 / M_PI) * (rho * rho + 1.0) * std::exp(w * t) / (X * (X - rho));
}

// clusters of the diagonal of L_lambda, used only to shape quadrature panels
std::vector<double> diag_clusters(const CoupledLiouvillean& L, double resolution) {
    std::vector<double> d;
    d.reserve(static_cast<size_t>(L.dim()));
    for (Index i = 0; i < L.dim(); ++i) d.push_back(L.L_lambda()(i, i).real());
    std::sort(d.begin(), d.end());
    std::vector<double> clusters;
    for (double x : d)
        if (clusters.empty() || x - clusters.back() > resolution) clusters.push_back(x);
    return clusters;
}

} // namespace

Vector propagate_exact(const CoupledLiouvillean& L, double t, const Vector& psi) {
    if (t < 0.0) throw std::invalid_argument("propagate_exact: t must be >= 0");
    if (psi.size() != L.dim()) throw std::invalid_argument("propagate_exact: dimension mismatch");
    const auto& sd = L.full_spectral();
    Vector c = sd.eigenvectors.adjoint() * psi;
    for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(kImag * (t * sd.eigenvalues(k)));
    return sd.eigenvectors * c;
}

ContourConfig default_contour_config(const CoupledLiouvillean& L, double t, double tol) {
    if (t <= 0.0) throw std::invalid_argument("default_contour_config: t must be > 0");
    ContourConfig cfg;
    cfg.w = std::min(0.5, 1.0 / t);
    const double rho = op_norm(L.L_lambda());
    double X = rho + 10.0 * cfg.w;
    while (tail_bound_at(X, rho, cfg.w, t) > 0.1 * tol && X < 1e9) X *= 2.0;
    cfg.x_extent = X;
    const auto clusters = diag_clusters(L, 0.5 * cfg.w);
    const int panels = static_cast<int>(
        std::min<double>(640.0, 8.0 * double(clusters.size()) +
                                    std::max(16.0, std::ceil(cfg.x_extent / (2.0 * cfg.w)))));
    cfg.n_points = 16 * panels;
    return cfg;
}

Vector propagate_contour(const CoupledLiouvillean& L, double t, const Vector& psi,
                         const ContourConfig& cfg, ContourReport* report, double tol) {
    if (t <= 0.0) throw std::invalid_argument("propagate_contour: t must be > 0 strictly");
    if (psi.size() != L.dim()) throw std::invalid_argument("propagate_contour: dimension mismatch");
    if (cfg.w <= 0.0 || cfg.w >= 1.0)
        throw std::invalid_argument("propagate_contour: need 0 < w < 1");
    if (cfg.n_points < 64) throw std::invalid_argument("propagate_contour: n_points must be >= 64");
    if (cfg.rule != "gl16") throw std::invalid_argument("propagate_contour: unknown rule");

    const double rho = op_norm(L.L_lambda());
    if (cfg.x_extent < rho + 10.0 * cfg.w)
        throw std::invalid_argument("propagate_contour: x_extent below spectral radius + 10 w");

    const double tail = tail_bound_at(cfg.x_extent, rho, cfg.w, t) * psi.norm();
    if (report) {
        report->amplification = std::exp(cfg.w * t);
        report->tail_bound = tail;
    }
    if (tail > 0.1 * tol * std::max(1.0, psi.norm())) {
        double X = cfg.x_extent;
        while (tail_bound_at(X, rho, cfg.w, t) * psi.norm() > 0.1 * tol && X < 1e9) X *= 2.0;
        throw std::invalid_argument("propagate_contour: x_extent insufficient for the tail "
                                    "tolerance; suggested extent " + std::to_string(X));
    }

    // equal-mass panels of a Lorentzian monitor centered on the diagonal clusters
    const auto clusters = diag_clusters(L, 0.5 * cfg.w);
    const double X = cfg.x_extent, w = cfg.w;
    auto monitor_cdf = [&](double x) {
        double m = (x + X) / (2.0 * X);   // uniform floor, total mass 1
        for (double c : clusters)
            m += (std::atan((x - c) / w) - std::atan((-X - c) / w)) / M_PI;
        return m;
    };
    const int panels = std::max(4, cfg.n_points / 16);
    const double total = monitor_cdf(X);
    std::vector<double> edges(static_cast<size_t>(panels) + 1);
    edges.front() = -X;
    edges.back() = X;
    for (int p = 1; p < panels; ++p) {
        const double target = total * double(p) / double(panels);
        double lo = -X, hi = X;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (monitor_cdf(mid) < target ? lo : hi) = mid;
        }
        edges[static_cast<size_t>(p)] = 0.5 * (lo + hi);
    }

    const Vector u = (L.L_lambda() + kImag * identity(L.dim())).eval() *
                     ((L.L_lambda() + kImag * identity(L.dim())) * psi).eval();
    Vector acc = Vector::Zero(L.dim());
    const Complex pref = -1.0 / (2.0 * M_PI * kImag);
    for (int p = 0; p < panels; ++p) {
        const double a = edges[static_cast<size_t>(p)], b = edges[static_cast<size_t>(p) + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int q = 0; q < 16; ++q) {
            const int base = q / 2;
            const double xi = (q % 2 == 0) ? -kGlX[base] : kGlX[base];
            const double wt = kGlW[base] * half;
            const Complex z(mid + half * xi, -w);
            Matrix A = L.L_lambda() - z * identity(L.dim());
            const Vector y = A.partialPivLu().solve(u);
            const Complex zi = z + kImag;
            acc += (pref * wt * std::exp(kImag * t * z) / (zi * zi)) * y;
        }
    }
    return acc;
}

std::vector<Complex> dissipative_overlap(const CoupledLiouvillean& L, const Vector& phi,
                                         const Vector& psi, const std::vector<double>& t_grid) {
    if (phi.size() != L.dim() || psi.size() != L.dim())
        throw std::invalid_argument("dissipative_overlap: dimension mismatch");
    Vector ph = L.P_R_perp() * phi;
    Vector ps = L.P_R_perp() * psi;
    if ((ph - phi).norm() > 1e-10 * std::max(1.0, phi.norm()) ||
        (ps - psi).norm() > 1e-10 * std::max(1.0, psi.norm()))
        std::cerr << "dissipative_overlap: inputs projected onto Ran P_R^perp\n";

    const auto red = L.reservoir_restricted(L.lambda());
    const Vector c = red->modes.adjoint() * ph;
    const Vector d = red->modes.adjoint() * ps;
    std::vector<Complex> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        Complex v = 0.0;
        for (Index k = 0; k < c.size(); ++k)
            v += std::conj(c(k)) * d(k) * std::exp(kImag * (t * red->eigenvalues(k)));
        out.push_back(v);
    }
    return out;
}

LapEstimate lap_constant_estimate(const CoupledLiouvillean& L, const Matrix& Q, const Vector& phi,
                                  const Vector& psi, int j_max, double eps_floor,
                                  std::optional<std::pair<double, double>> x_window) {
    if (eps_floor <= 0.0)
        throw std::invalid_argument("lap_constant_estimate: eps_floor must be > 0");
    if (j_max < 0 || j_max > 2)
        throw std::invalid_argument("lap_constant_estimate: j_max must be in {0, 1, 2}");

    // dispatch onto the cached spectral paths when Q is one of the standard projections
    std::shared_ptr<const ReducedSpectral> red;
    const double qtol = 1e-12 * double(L.dim());
    if ((Q - L.P_R()).norm() <= qtol) {
        red = L.reservoir_restricted(L.lambda());
    } else {
        for (int i = 0; i < L.eigenvalue_count() && !red; ++i)
            if ((Q - L.P_e(i)).norm() <= qtol) red = L.reduced_at(i, L.lambda());
        if (!red) {
            const Matrix B = complement_basis(Q);
            auto r = std::make_shared<ReducedSpectral>();
            if (B.cols() > 0) {
                Eigen::SelfAdjointEigenSolver<Matrix> es(restrict_to(L.L_lambda(), B));
                r->modes = B * es.eigenvectors();
                r->eigenvalues = es.eigenvalues();
            } else {
                r->modes = Matrix(L.dim(), 0);
                r->eigenvalues = RealVector(0);
            }
            red = r;
        }
    }

    LapEstimate est;
    const Index k = red->eigenvalues.size();
    if (k == 0) return est;   // empty reduced space

    const Vector c = red->modes.adjoint() * phi;
    const Vector d = red->modes.adjoint() * psi;

    double xlo = red->eigenvalues(0), xhi = red->eigenvalues(k - 1);
    if (x_window) {
        xlo = std::max(xlo, x_window->first);
        xhi = std::min(xhi, x_window->second);
        if (xlo > xhi) return est;
    }

    std::vector<double> xs;
    const int nx = 129;
    for (int i = 0; i < nx; ++i)
        xs.push_back(xlo + (xhi - xlo) * double(i) / double(nx - 1));
    for (Index i = 0; i < k; ++i)
        if (red->eigenvalues(i) >= xlo && red->eigenvalues(i) <= xhi)
            xs.push_back(red->eigenvalues(i));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::vector<double> eps_grid;
    if (eps_floor >= 1.0) {
        eps_grid.push_back(eps_floor);
    } else {
        const int ne = 25;
        for (int i = 0; i < ne; ++i)
            eps_grid.push_back(eps_floor * std::pow(1.0 / eps_floor, double(i) / double(ne - 1)));
    }

    const double fact[3] = {1.0, 1.0, 2.0};
    std::size_t total = 0, skipped = 0;
    for (double x : xs) {
        for (double eps : eps_grid) {
            ++total;
            const Complex z(x, -eps);
            double dist = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < k; ++i)
                dist = std::min(dist, std::abs(Complex(red->eigenvalues(i), 0.0) - z));
            if (dist < eps_floor / 10.0) { ++skipped; continue; }
            Complex p0 = 0.0, p1 = 0.0, p2 = 0.0;
            for (Index i = 0; i < k; ++i) {
                const Complex r = 1.0 / (Complex(red->eigenvalues(i), 0.0) - z);
                const Complex base = std::conj(c(i)) * d(i) * r;
                p0 += base;
                if (j_max >= 1) p1 += base * r;
                if (j_max >= 2) p2 += base * r * r;
            }
            est.value = std::max(est.value, std::abs(p0));
            if (j_max >= 1) est.value = std::max(est.value, fact[1] * std::abs(p1));
            if (j_max >= 2) est.value = std::max(est.value, fact[2] * std::abs(p2));
        }
    }
    est.skipped_fraction = total ? double(skipped) / double(total) : 0.0;
    est.reliable = est.skipped_fraction <= 0.1;
    return est;
}

double kappa1_estimate(const CoupledLiouvillean& L, double eps_floor) {
    const auto& sys = L.sys();
    std::vector<Vector> family;
    family.reserve(static_cast<size_t>(sys.dim));
    for (Index m = 0; m < sys.dim; ++m)
        family.push_back(L.interaction() *
                         with_stationary_reservoir(sys.eigenbasis.col(m), L.res()));
    double best = 0.0;
    for (const auto& a : family)
        for (const auto& b : family)
            best = std::max(best,
                            lap_constant_estimate(L, L.P_R(), a, b, 2, eps_floor).value);
    return best;
}

} // namespace resodyn
