#pragma once

// Standard bubble on the half-space, its rescaled family and the kernel of the
// linearized boundary problem. All derivatives are closed forms.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace yamabe {

/// Largest supported ambient dimension. Small fixed-capacity matrices keep the
/// per-point evaluation loops free of heap traffic.
inline constexpr int kMaxDim = 16;

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Ambient dimension n of the half-space R^n_+.
class Dimension {
public:
    explicit Dimension(int n);

    int value() const noexcept { return n_; }
    int tangential() const noexcept { return n_ - 1; }
    /// (n-2)/2, the conformal weight of the bubble.
    double weight() const noexcept { return 0.5 * (n_ - 2); }

    friend bool operator==(Dimension, Dimension) = default;

private:
    int n_;
};

/// Throws unless n >= 8 (the range covered by the blow-up construction).
void require_main_range(Dimension n);

/// y = (z, t) with z in R^{n-1} and t >= 0.
struct HalfSpacePoint {
    std::vector<double> z;
    double t = 0.0;

    HalfSpacePoint() = default;
    HalfSpacePoint(std::vector<double> z_, double t_);

    double z_norm_sq() const noexcept;
    double norm() const noexcept;
    /// Full coordinate vector (z_1, ..., z_{n-1}, t).
    SmallVec coords() const;
    static HalfSpacePoint from_coords(std::span<const double> y);
};

/// Throws std::domain_error if the point is not in the closed half-space of dimension n.
void check_point(const HalfSpacePoint& y, Dimension n);

/// U(z,t) = [(1+t)^2 + |z|^2]^{-(n-2)/2}.
double eval_bubble(const HalfSpacePoint& y, Dimension n);

/// U_delta(y) = delta^{-(n-2)/2} U(y/delta).
double eval_bubble_family(const HalfSpacePoint& y, double delta, Dimension n);

SmallVec bubble_gradient(const HalfSpacePoint& y, Dimension n);
SmallMat bubble_hessian(const HalfSpacePoint& y, Dimension n);

/// Kernel element j_b, b in 1..n. For b < n this is dU/dz_b, for b = n the
/// dilation generator (n-2)/2 U + y . grad U.
double eval_kernel(int b, const HalfSpacePoint& y, Dimension n);

/// d j_b / dt in closed form.
double kernel_dt(int b, const HalfSpacePoint& y, Dimension n);

struct Residuals {
    double interior = 0.0;        ///< -Laplacian U at y
    double interior_scale = 0.0;  ///< sum |d_aa U|, for relative comparison
    double boundary = 0.0;        ///< dU/dt + (n-2) U^{n/(n-2)} at (z, 0)
    double boundary_scale = 0.0;
    std::vector<double> linearized;        ///< dj_b/dt + n U^{2/(n-2)} j_b at (z, 0)
    std::vector<double> linearized_scale;
};

Residuals residuals(const HalfSpacePoint& y, Dimension n);

/// Radial form of the bubble and its derivatives at (r = |z|, t); used by the
/// reduced (r, t) computations where building a full point would be wasteful.
struct BubbleRadial {
    double u = 0.0;     ///< U
    double d_over = 0.0; ///< D^{-n/2}, D = (1+t)^2 + r^2
    double dt = 0.0;    ///< dU/dt
    double dr = 0.0;    ///< dU/dr
};

BubbleRadial bubble_radial(double r, double t, Dimension n);

/// Sup of |grad^tau U| (tau = 0, 1, 2; Frobenius norm for the Hessian) over
/// the half-sphere |y| = rho, sampled on `directions` directions, and the
/// log-log slope of that sup over geometric radii in [rho_min, rho_max].
struct BubbleDecay {
    std::vector<double> radii, sups;
    double exponent = 0.0;
    double expected = 0.0;  ///< 2 - tau - n
};

BubbleDecay bubble_decay(Dimension n, int tau, double rho_min, double rho_max, int shells, int directions);

/// Central finite-difference cross-checks used by tests.
SmallVec fd_gradient(const std::function<double(const HalfSpacePoint&)>& f,
                     const HalfSpacePoint& y, double h);
SmallMat fd_hessian(const std::function<double(const HalfSpacePoint&)>& f,
                    const HalfSpacePoint& y, double h);

}  // namespace yamabe
