#pragma once

// Numerical corrector on the half-space. Substituting v = T_ij z_i z_j w(r,t)
// turns the n-dimensional problem into a 2D elliptic problem for w on the
// quarter plane r, t >= 0:
//
//   -[w_rr + (n+2)/r w_r + w_tt] = h(r,t),   w_t + n/(1+r^2) w = 0 at t = 0,
//
// with w = 0 on the truncation boundary r = R_max or t = T_max.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "yamabe/bubble.hpp"
#include "yamabe/curvature.hpp"

namespace yamabe {

/// Geometrically stretched node sets in r and t. The stretching factor s is
/// the ratio of consecutive cell widths; the full map x(eta) = L (S^eta - 1)/(S - 1)
/// with S = s^N is kept under refinement (N -> 2N, s -> sqrt(s)).
///
/// r is cell-centered (centers at eta = (i + 1/2)/N_r, face 0 sits on the axis),
/// t is vertex-centered (t_j = t(j/N_t), t_0 = 0 carries the Robin row).
class RadialGrid {
public:
    RadialGrid(int n_r, int n_t, double r_max, double t_max, double stretch_r, double stretch_t);

    /// Square grid with R_max = T_max = extent whose last cell is `ratio`
    /// times wider than the first (stretching factor ratio^(1/cells)). The
    /// default keeps the first cell near 0.01 at 400 cells while pushing the
    /// truncation far enough out for clean decay fits.
    static RadialGrid standard(int cells, double extent = 640.0, double ratio = 1000.0);

    RadialGrid refined() const;

    int n_r() const noexcept { return n_r_; }
    int n_t() const noexcept { return n_t_; }
    double r_max() const noexcept { return r_max_; }
    double t_max() const noexcept { return t_max_; }
    double stretch_r() const noexcept { return s_r_; }
    double stretch_t() const noexcept { return s_t_; }

    double r_center(int i) const;  ///< valid for i in [0, n_r], i = n_r is the ghost
    double r_face(int i) const;    ///< i in [0, n_r]
    double t_node(int j) const;    ///< j in [0, n_t]
    double dt_deta(double eta) const;
    double d2t_deta2(double eta) const;

    /// Computational coordinate of a physical position (inverse map).
    double r_to_eta(double r) const;
    double t_to_eta(double t) const;

    std::string canonical_bytes() const;

private:
    struct Map {
        double length = 0.0;
        double big_s = 1.0;  // S = s^N
        double operator()(double eta) const;
        double d1(double eta) const;
        double d2(double eta) const;
        double inverse(double x) const;
    };

    int n_r_, n_t_;
    double r_max_, t_max_, s_r_, s_t_;
    Map mr_, mt_;
};

/// Discrete profile w on the grid, with nodal derivative arrays for
/// interpolation of the field and its first and second derivatives.
struct ProfileField {
    int n = 0;
    RadialGrid grid;
    ProfileKind kind = ProfileKind::NormalCurvature;
    // all arrays are (n_r) x (n_t + 1), row index i (r), column j (t)
    std::vector<double> w, w_r, w_t, w_rr, w_rt, w_tt;
    double residual_interior = 0.0;  ///< max |A w - b| over PDE rows, relative to max |b|
    double residual_boundary = 0.0;  ///< max |A w - b| over Robin rows, relative to max |b|

    explicit ProfileField(const RadialGrid& g) : grid(g) {}

    std::size_t at(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_t() + 1) +
               static_cast<std::size_t>(j);
    }

    struct Jet {
        double w = 0, w_r = 0, w_t = 0, w_rr = 0, w_rt = 0, w_tt = 0;
        bool covered = true;
    };
    Jet interpolate(double r, double t) const;
};

/// Data of a general reduced problem, used for manufactured solutions:
/// forcing h(r,t) and Robin inhomogeneity g(r) in w_t + n/(1+r^2) w = g.
struct ReducedProblem {
    std::function<double(double, double)> forcing;
    std::function<double(double)> robin_rhs;
};

/// Solves the reduced problem on the grid by one sparse LU factorization.
ProfileField solve_reduced(Dimension n, const RadialGrid& grid, const ReducedProblem& problem);

/// Profile of a curvature sector; memoized in-process on (n, grid, kind).
std::shared_ptr<const ProfileField> sector_profile(Dimension n, const RadialGrid& grid,
                                                   ProfileKind kind);

struct SectorSolution {
    Eigen::MatrixXd tensor;
    std::shared_ptr<const ProfileField> profile;
};

struct CorrectorSolution {
    int n = 0;
    RadialGrid grid;
    double tol = 0.0;
    std::vector<SectorSolution> sectors;
    /// Kernel coefficients c_b removed by the L^2 projection, v <- v - sum c_b j_b.
    std::vector<double> kernel_coeffs;
    /// <v, j_b> before and after the projection, b = 1..n.
    std::vector<double> defects_before, defects_after;
    double residual_interior = 0.0;
    double residual_boundary = 0.0;
    std::string curvature_hash;

    explicit CorrectorSolution(const RadialGrid& g) : grid(g) {}
};

/// Hex SHA-256 of the canonical curvature bytes.
std::string curvature_hash(const CurvatureData& curv);

CorrectorSolution solve_corrector(const CurvatureData& curv, const RadialGrid& grid, double tol);

/// Field value of v at y; `covered` is cleared when y lies beyond the grid
/// (the value is then 0).
double eval_corrector(const CorrectorSolution& sol, const HalfSpacePoint& y, bool* covered = nullptr);

/// (v_q)_delta(y) = delta^{-(n-2)/2} v_q(y/delta).
double eval_corrector_family(const CorrectorSolution& sol, double delta, const HalfSpacePoint& y,
                             bool* covered = nullptr);

struct CorrectorJet {
    double value = 0.0;
    SmallVec grad;
    SmallMat hess;
    bool covered = true;
};

CorrectorJet corrector_jet(const CorrectorSolution& sol, const HalfSpacePoint& y);

/// Restriction to the boundary along one direction: v(rho * dir, 0) where dir
/// is a unit tangential vector, evaluated through the sector structure.
double corrector_on_ray(const CorrectorSolution& sol, std::span<const double> dir, double rho,
                        double t, bool* covered = nullptr);

struct DecayFit {
    double exponent = 0.0;
    double expected = 0.0;
    std::vector<double> radii;
    std::vector<double> sup_values;
    bool defined = false;
};

struct PropertyReport {
    double uvq_integral = 0.0;     ///< int_{t=0} U^{n/(n-2)} v dz
    double v_l2_norm = 0.0;        ///< ||v||_{L^2(R^n_+)}
    double v_lap_v = 0.0;          ///< int_{R^n_+} v Delta v
    double v_lap_v_boundary = 0.0; ///< the same integrand over t = 0
    std::array<DecayFit, 3> decay;
    bool zero_solution = false;
};

PropertyReport check_properties(const CorrectorSolution& sol);

/// Refinement study of the volume functional int v Delta v over grids
/// base, base.refined(), base.refined().refined().
struct RefinementStudy {
    std::vector<int> cells;
    std::vector<double> values;
    double order = 0.0;
    double extrapolated = 0.0;
};

RefinementStudy refinement_study(const CurvatureData& curv, const RadialGrid& base, double tol);

/// Angular constants on S^{m-1}: surface area and the mean of (x^T T x)^2
/// for traceless symmetric T, which equals 2|T|^2/(m(m+2)).
double sphere_area(int m);
double quadratic_form_sq_mean(int m);

/// Binary cache of a solution. The header carries a format version, the
/// content key and a payload checksum; load() rejects any mismatch.
namespace corrector_cache {
inline constexpr std::uint32_t kVersion = 1;
std::string key(const CurvatureData& curv, const RadialGrid& grid, double tol);
void save(const std::string& path, const std::string& key, const CorrectorSolution& sol);
/// Returns false when the file does not exist; throws on corruption or key mismatch.
bool load(const std::string& path, const std::string& key, CorrectorSolution& out);
}  // namespace corrector_cache

}  // namespace yamabe
