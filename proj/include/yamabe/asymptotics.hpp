#pragma once

// Remainder norms of the ansatz W_delta + delta^2 V_delta, the integrability
// exponents that control them, and the energy-gap arithmetic.
//
// Everything is computed in the blown-up variable x = y / delta on the
// truncated region |y| <= cutoff_radius, where the ansatz is
// u = U + delta^2 v. Norm exponents depend on eps; the change of variables
// back to y then leaves explicit powers delta^{-O(eps)} in front.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "yamabe/corrector.hpp"
#include "yamabe/curvature.hpp"
#include "yamabe/reduced_energy.hpp"
#include "yamabe/stats.hpp"

namespace yamabe {

/// s_eps = 2(n-1)/(n-2) + n eps, the trace exponent of the function space.
double s_eps(Dimension n, double eps);

/// Exponents (q, r) of the elliptic regularity estimate, chosen so that
/// (n-1) q/(n-2q) = s_eps and (n-1) q/(n-q) + r = p_b(eps), with
/// p_b(eps) = (2(n-1) + n(n-2) eps)/(n + (n-2) eps). The integrability
/// exponent is called q here even though q also names the boundary point.
struct NittkaExponents {
    double s = 0.0;
    double q = 0.0;
    double r = 0.0;
    double interior = 0.0;  ///< q + r, exponent of the interior defect
    double boundary = 0.0;  ///< (n-1) q/(n-q) + r = p_b(eps)
};

/// Throws std::domain_error if eps < 0 or q leaves [2n/(n+2), n/2).
NittkaExponents nittka_exponents(Dimension n, double eps);

/// Boundary exponent p_b(eps) in closed form.
double boundary_exponent(Dimension n, double eps);

/// Scalar curvature of the conformal Fermi metric, quadratic model
/// alpha |z|^2 + c t^2 with alpha = -|W|^2/(12(n-1)), so that the summed
/// tangential Hessian trace equals -|W|^2/6.
double scalar_curvature_model(const CurvatureData& curv, const HalfSpacePoint& y, double transverse_c = 0.0);

struct RemainderOptions {
    MeanCurvatureModel h_model{};
    double transverse_c = 0.0;   ///< coefficient c of t^2 in the scalar curvature model
    double cutoff_radius = 1.0;  ///< truncation |y| <= cutoff_radius
    int radial_order = 8;        ///< Gauss-Legendre order per radial panel
    double panel_width = 0.25;   ///< panel width in s = ln(1 + |x|)
    int polar_nodes = 16;        ///< nodes in the angle between x and the normal
    int sphere_base = 1;         ///< base directions of the balanced sphere set
    std::uint64_t sphere_seed = 77;
};

/// The four remainder pieces at one (delta, eps).
///   q_h      mean-curvature term h (W + delta^2 V) on the boundary
///   q_delta  Delta_g(W + delta^2 V) - a (W + delta^2 V) in the interior
///   q_bdry   boundary nonlinearity mismatch, second order in delta^2 v
///   q_pert   f_eps - f_0 on the boundary
struct RemainderQuantities {
    double delta = 0.0;
    double eps = 0.0;
    double q_h = 0.0, q_delta = 0.0, q_bdry = 0.0, q_pert = 0.0;
    /// Share of each norm's p-th power carried by the outer half |x| > R/(2 delta);
    /// a proxy for how much the truncation matters.
    double outer_share_h = 0.0, outer_share_delta = 0.0;
    /// Raw integral of |h-term|^p over the truncated boundary ball in x,
    /// before the root and the delta prefactor (compared against QMC).
    double h_power_integral = 0.0;
    double p_interior = 0.0, p_boundary = 0.0;
    double composite() const;
};

RemainderQuantities remainder_quantities(const CurvatureData& curv, const CorrectorSolution& sol, double delta,
                                         double eps, const RemainderOptions& opt = {});

/// Same for many (delta, eps) pairs with one pass over the quadrature nodes.
/// Radial panel breaks are placed at every cutoff in the list, so entries agree
/// with single-point calls to quadrature accuracy rather than bitwise; the
/// result does not depend on the order of the list.
std::vector<RemainderQuantities> remainder_batch(const CurvatureData& curv, const CorrectorSolution& sol,
                                                 std::span<const double> deltas, std::span<const double> eps,
                                                 const RemainderOptions& opt = {});

/// Randomized QMC estimate of h_power_integral with radial importance
/// sampling (uniform in ln(1+|x|)) and Gaussian directions.
McEstimate qmc_h_power_integral(const CorrectorSolution& sol, double delta, double eps, const RemainderOptions& opt,
                                std::size_t points, int replicates, std::uint64_t seed);

/// Geometric grid from eps_max down to eps_min (strictly decreasing).
std::vector<double> geometric_grid(double eps_max, double eps_min, int points);

struct ScalingStudy {
    int n = 0;
    double lambda = 0.0;
    std::vector<double> eps, delta;
    std::vector<RemainderQuantities> rows;
    /// OLS of log Q against log eps for each piece and for the composite.
    stats::LinearFit fit_h, fit_delta, fit_bdry, fit_pert, fit_composite;
    /// log composite = b0 + b1 log eps + b2 log|log eps|.
    stats::TwoTermFit log_fit;
    stats::FTest log_test;
    bool log_correction = false;  ///< log_test.p_value below the significance level
    double significance = 0.01;
};

/// Throws std::invalid_argument unless the grid is strictly decreasing and
/// spans at least three decades.
ScalingStudy scaling_study(const CurvatureData& curv, const CorrectorSolution& sol, double lambda,
                           std::span<const double> eps_grid, const RemainderOptions& opt = {},
                           double significance = 0.01);

/// Energy gap bound B = |phi|^2 + C (eps|ln eps| + eps^{1/2}) |phi| and the
/// ratio B / eps.
struct GapCheck {
    double eps = 0.0;
    double phi_norm = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    double margin = 0.0;  ///< 1 - ratio
    bool ok = false;      ///< ratio < 1
};

GapCheck verify_gap(double eps, double phi_norm, Dimension n, double c = 1.0);

/// Predicted size of the fixed-point correction: eps^{3/4}, times
/// (1 + |ln eps|) at n = 8.
double predicted_phi_norm(Dimension n, double eps);

struct GapSequence {
    std::vector<GapCheck> points;
    bool strictly_decreasing = false;
};

/// Gap checks along a strictly decreasing eps sequence with the given norms.
GapSequence verify_gap_sequence(std::span<const double> eps, std::span<const double> phi_norms, Dimension n,
                                double c = 1.0);

}  // namespace yamabe
