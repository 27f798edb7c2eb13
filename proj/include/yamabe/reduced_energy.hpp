#pragma once

// Expansion constants of the reduced energy, the curvature functional phi and
// the one-dimensional landscape lambda -> I_eps(lambda).

#include <string>
#include <vector>

#include "yamabe/bubble.hpp"
#include "yamabe/corrector.hpp"
#include "yamabe/curvature.hpp"

namespace yamabe {

/// A constant computed twice: closed Gamma-function form and numerical quadrature.
struct DualValue {
    double closed_form = 0.0;
    double quadrature = 0.0;
    double rel_gap() const;
};

/// I1 = int_{R^{n-1}} U^{2(n-1)/(n-2)}(z,0) dz
/// I2 = int_{R^{n-1}} U^{2(n-1)/(n-2)} ln U (z,0) dz   (negative: ln U <= 0)
/// I3 = int_{R^n_+} |z|^2 U^2
/// I4 = int_{R^n_+} t^2 |z|^4 / ((1+t)^2 + |z|^2)^n
/// grad_sq = int_{R^n_+} |grad U|^2
struct MomentIntegrals {
    int n = 0;
    DualValue i1, i2, i3, i4, grad_sq;
};

DualValue moment_i1(Dimension n);
DualValue moment_i2(Dimension n);
DualValue moment_i3(Dimension n);  ///< requires n > 6
DualValue moment_i4(Dimension n);  ///< requires n > 6
DualValue dirichlet_energy(Dimension n);
MomentIntegrals moment_integrals(Dimension n);

/// Randomized quasi-Monte-Carlo estimate of I4 in n+1 sampling dimensions,
/// with importance sampling from a multivariate Student-t law in z and a
/// Beta-prime law in t. Replicates use independent random shifts.
struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int replicates = 0;
    std::size_t points_per_replicate = 0;
};
McEstimate qmc_i4(Dimension n, std::size_t points, int replicates, std::uint64_t seed);

double const_A(Dimension n);
double const_C(Dimension n);
double const_B(Dimension n, double eps);
/// Coefficient of eps|ln eps| in B: -(n-2)^3/(16(n-1)) I1.
double b_log_coefficient(Dimension n);

/// Recomputes the eps|ln eps| coefficient from the Taylor expansion of
/// delta^{-eps(n-2)/2} with delta = lambda eps^{1/4}.
struct BCoefficientCheck {
    double taylor_factor = 0.0;   ///< recovered factor, expected (n-2)/8
    double recomputed = 0.0;      ///< -(taylor_factor) (n-2)^2/(2(n-1)) I1
    double stated = 0.0;          ///< b_log_coefficient
    double variant_sixth = 0.0;   ///< the same with factor (n-2)/6
    double rel_gap() const;
};
BCoefficientCheck b_coefficient_check(Dimension n);

struct PhiValue {
    double half_v_lap_v = 0.0;
    double weyl_term = 0.0;   ///< -(n-2)/(96(n-1)) |W|^2 I3
    double normal_term = 0.0; ///< -(n-2)(n-8)/(2(n^2-1)) |R_ninj|^2 I4
    double value = 0.0;
    double v_lap_v_boundary = 0.0;  ///< reported alongside, not used in the sum
};

/// Throws std::invalid_argument when sol was not solved for curv.
PhiValue phi(const CurvatureData& curv, const CorrectorSolution& sol);

/// A + B(eps) + eps lambda^4 phi + C eps ln lambda (o(eps) dropped).
double reduced_energy(double lambda, double eps, double phi_val, Dimension n);
double reduced_energy_dlambda(double lambda, double eps, double phi_val, Dimension n);

struct Maximizer {
    double lambda = 0.0;        ///< closed form or best endpoint
    bool interior = false;
    double closed_form = 0.0;   ///< (C/(4|phi|))^{1/4}
    double golden = 0.0;        ///< golden-section maximizer on [a,b]
    double golden_rel_gap = 0.0;
};

/// Throws std::domain_error for phi >= 0 (no interior maximum exists).
Maximizer maximize(double phi_val, Dimension n, double a, double b);
/// Same, with the constant C supplied explicitly.
Maximizer maximize_with(double phi_val, double c_const, double a, double b);

struct LandscapeSample {
    double lambda, value, derivative;
};
std::vector<LandscapeSample> landscape(double phi_val, double eps, Dimension n, double a, double b, int points);

/// y -> U_delta(y) + delta^2 (v_q)_delta(y).
class BlowUpProfile {
public:
    BlowUpProfile(double delta, const CorrectorSolution& sol);
    double operator()(const HalfSpacePoint& y) const;
    double delta() const noexcept { return delta_; }

    struct Extremes {
        double min = 0.0;
        double max = 0.0;
        std::size_t samples = 0;
        std::size_t uncovered = 0;
    };
    /// Extremes over a polar sample grid in scaled coordinates y = delta x,
    /// |x| <= extent, along the eigen-directions of each sector tensor.
    Extremes sample_extremes(int radial, int angular, double extent) const;

private:
    double delta_;
    const CorrectorSolution* sol_;
};

BlowUpProfile assemble_profile(double delta, const CurvatureData& curv, const CorrectorSolution& sol);

struct ReducedEnergyReport {
    int n = 0;
    MomentIntegrals moments;
    double A = 0.0, C = 0.0;
    double b_linear = 0.0;       ///< coefficient of eps in B
    double b_log = 0.0;          ///< coefficient of eps|ln eps| in B
    PhiValue phi;
    Maximizer max;
    std::vector<LandscapeSample> samples;
};

}  // namespace yamabe
