// dynamics.hpp — Exact and contour-integral propagators, dissipative-overlap
// decay, and numerical limiting-absorption estimates

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resodyn/operator_core.hpp"

namespace resodyn {

// Truncated line R - i w with composite Gauss-Legendre panels.
struct ContourConfig {
    double w = 0.5;          // vertical offset, > 0
    double x_extent = 0.0;   // half-width of the truncated line
    int n_points = 512;      // total quadrature nodes (16 per panel)
    std::string rule = "gl16";
};

struct ContourReport {
    double amplification = 1.0;   // e^{w t} weight on the line
    double tail_bound = 0.0;      // certified truncation bound
};

// w = min(0.5, 1/t); extent from the analytic tail bound at `tol`.
ContourConfig default_contour_config(const CoupledLiouvillean& L, double t, double tol = 1e-8);

// e^{itL_lambda} psi via the unitary eigendecomposition; norm-preserving.
Vector propagate_exact(const CoupledLiouvillean& L, double t, const Vector& psi);

// -(2 pi i)^{-1} Int_{R-iw} e^{itz} (z+i)^{-2} (L-z)^{-1} (L+i)^2 psi dz,
// evaluated with per-node dense solves (independent of the eigendecomposition).
Vector propagate_contour(const CoupledLiouvillean& L, double t, const Vector& psi,
                         const ContourConfig& cfg, ContourReport* report = nullptr,
                         double tol = 1e-6);

// <phi, e^{it Lbar_lambda} psi> on the grid, Lbar = P_R^perp L P_R^perp.
// Inputs outside Ran P_R^perp are projected (with a stderr note).
std::vector<Complex> dissipative_overlap(const CoupledLiouvillean& L, const Vector& phi,
                                         const Vector& psi, const std::vector<double>& t_grid);

struct LapEstimate {
    double value = 0.0;
    bool reliable = true;
    double skipped_fraction = 0.0;
};

// sup over {x - i eps : x in the reduced spectral range, eps in [eps_floor, 1]}
// of |d^j/dz^j <phi, R_z^Q psi>| for j <= j_max, with d^j R_z = j! R_z^{j+1}.
// Optional window restricts x. Q is matched against P_R / P_e for the cached
// spectral paths; any other orthogonal projection takes the generic route.
LapEstimate lap_constant_estimate(const CoupledLiouvillean& L, const Matrix& Q, const Vector& phi,
                                  const Vector& psi, int j_max, double eps_floor,
                                  std::optional<std::pair<double, double>> x_window = {});

// kappa_1 surrogate: max over pairs of the I(phi_m (x) Omega) family, j <= 2.
double kappa1_estimate(const CoupledLiouvillean& L, double eps_floor);

} // namespace resodyn
