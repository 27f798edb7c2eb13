#include "yamabe/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "yamabe/hash.hpp"
#include "yamabe/quadrature.hpp"
#include "yamabe/stats.hpp"

namespace yamabe {

// ---------------------------------------------------------------- grid

double RadialGrid::Map::operator()(double eta) const {
    if (big_s == 1.0) return length * eta;
    const double ls = std::log(big_s);
    return length * std::expm1(eta * ls) / std::expm1(ls);
}

double RadialGrid::Map::d1(double eta) const {
    if (big_s == 1.0) return length;
    const double ls = std::log(big_s);
    return length * ls * std::exp(eta * ls) / std::expm1(ls);
}

double RadialGrid::Map::d2(double eta) const {
    if (big_s == 1.0) return 0.0;
    return std::log(big_s) * d1(eta);
}

double RadialGrid::Map::inverse(double x) const {
    if (big_s == 1.0) return x / length;
    const double ls = std::log(big_s);
    return std::log1p(x * std::expm1(ls) / length) / ls;
}

RadialGrid::RadialGrid(int n_r, int n_t, double r_max, double t_max, double stretch_r, double stretch_t)
    : n_r_(n_r), n_t_(n_t), r_max_(r_max), t_max_(t_max), s_r_(stretch_r), s_t_(stretch_t) {
    if (n_r < 4 || n_t < 4) throw std::invalid_argument("grid needs at least 4 cells per direction");
    if (!(r_max >= 20.0) || !(t_max >= 20.0)) throw std::invalid_argument("truncation radii must be >= 20");
    if (!(stretch_r >= 1.0 && stretch_r <= 1.1) || !(stretch_t >= 1.0 && stretch_t <= 1.1)) {
        throw std::invalid_argument("stretching factor must lie in [1, 1.1]");
    }
    mr_.length = r_max;
    mr_.big_s = std::pow(stretch_r, n_r);
    mt_.length = t_max;
    mt_.big_s = std::pow(stretch_t, n_t);
}

RadialGrid RadialGrid::standard(int cells, double extent, double ratio) {
    const double s = std::pow(ratio, 1.0 / cells);
    return RadialGrid(cells, cells, extent, extent, s, s);
}

RadialGrid RadialGrid::refined() const {
    return RadialGrid(2 * n_r_, 2 * n_t_, r_max_, t_max_, std::sqrt(s_r_), std::sqrt(s_t_));
}

double RadialGrid::r_center(int i) const { return mr_((i + 0.5) / n_r_); }
double RadialGrid::r_face(int i) const { return i == n_r_ ? r_max_ : mr_(static_cast<double>(i) / n_r_); }
double RadialGrid::t_node(int j) const { return j == n_t_ ? t_max_ : mt_(static_cast<double>(j) / n_t_); }
double RadialGrid::dt_deta(double eta) const { return mt_.d1(eta); }
double RadialGrid::d2t_deta2(double eta) const { return mt_.d2(eta); }
double RadialGrid::r_to_eta(double r) const { return mr_.inverse(r); }
double RadialGrid::t_to_eta(double t) const { return mt_.inverse(t); }

std::string RadialGrid::canonical_bytes() const {
    std::string out = "grid/1;";
    const std::int32_t ints[2] = {n_r_, n_t_};
    const double reals[4] = {r_max_, t_max_, s_r_, s_t_};
    out.append(reinterpret_cast<const char*>(ints), sizeof(ints));
    out.append(reinterpret_cast<const char*>(reals), sizeof(reals));
    return out;
}

// ---------------------------------------------------------------- helpers

namespace {

// Weights of the quadratic Lagrange interpolant through x[0..2]: first and
// second derivative evaluated at `at`.
void lagrange3(const double x[3], double at, double d1[3], double d2[3]) {
    for (int k = 0; k < 3; ++k) {
        const int a = (k + 1) % 3, b = (k + 2) % 3;
        const double den = (x[k] - x[a]) * (x[k] - x[b]);
        d1[k] = ((at - x[a]) + (at - x[b])) / den;
        d2[k] = 2.0 / den;
    }
}

// Integral of r^p over [a, b].
double power_integral(double a, double b, double p) {
    return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
}

// Trapezoidal weights in the computational t-coordinate, including the
// Jacobian; second order for smooth integrands.
std::vector<double> t_weights(const RadialGrid& g) {
    const int nt = g.n_t();
    const double de = 1.0 / nt;
    std::vector<double> w(static_cast<std::size_t>(nt + 1));
    for (int j = 0; j <= nt; ++j) {
        w[static_cast<std::size_t>(j)] = de * g.dt_deta(static_cast<double>(j) / nt);
    }
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

// Derivative arrays from nodal values. r-derivatives use the even mirror at
// the axis and the Dirichlet ghost at R_max; t-derivatives use one-sided
// three-point stencils at both ends.
void fill_derivatives(ProfileField& f) {
    const RadialGrid& g = f.grid;
    const int nr = g.n_r(), nt = g.n_t();
    const std::size_t total = static_cast<std::size_t>(nr) * static_cast<std::size_t>(nt + 1);
    f.w_r.assign(total, 0.0);
    f.w_rr.assign(total, 0.0);
    f.w_t.assign(total, 0.0);
    f.w_tt.assign(total, 0.0);
    f.w_rt.assign(total, 0.0);

    const double r_last = g.r_center(nr - 1);
    const double r_ghost = g.r_center(nr);
    const double alpha = (r_ghost - g.r_max()) / (g.r_max() - r_last);
    for (int i = 0; i < nr; ++i) {
        double x[3], d1[3], d2[3];
        x[1] = g.r_center(i);
        x[0] = i == 0 ? -g.r_center(0) : g.r_center(i - 1);
        x[2] = i == nr - 1 ? r_ghost : g.r_center(i + 1);
        lagrange3(x, x[1], d1, d2);
        for (int j = 0; j <= nt; ++j) {
            const double wm = i == 0 ? f.w[f.at(0, j)] : f.w[f.at(i - 1, j)];
            const double w0 = f.w[f.at(i, j)];
            const double wp = i == nr - 1 ? -alpha * w0 : f.w[f.at(i + 1, j)];
            f.w_r[f.at(i, j)] = d1[0] * wm + d1[1] * w0 + d1[2] * wp;
            f.w_rr[f.at(i, j)] = d2[0] * wm + d2[1] * w0 + d2[2] * wp;
        }
    }
    for (int j = 0; j <= nt; ++j) {
        int c = std::clamp(j, 1, nt - 1);
        const double x[3] = {g.t_node(c - 1), g.t_node(c), g.t_node(c + 1)};
        double d1[3], d2[3];
        lagrange3(x, g.t_node(j), d1, d2);
        for (int i = 0; i < nr; ++i) {
            const std::size_t a = f.at(i, c - 1), b = f.at(i, c), e = f.at(i, c + 1);
            f.w_t[f.at(i, j)] = d1[0] * f.w[a] + d1[1] * f.w[b] + d1[2] * f.w[e];
            f.w_tt[f.at(i, j)] = d2[0] * f.w[a] + d2[1] * f.w[b] + d2[2] * f.w[e];
            f.w_rt[f.at(i, j)] = d1[0] * f.w_r[a] + d1[1] * f.w_r[b] + d1[2] * f.w_r[e];
        }
    }
}

}  // namespace

// ---------------------------------------------------------------- solver

ProfileField solve_reduced(Dimension n, const RadialGrid& g, const ReducedProblem& problem) {
    const int nn = n.value();
    const int nr = g.n_r(), nt = g.n_t();
    const double p = nn + 2.0;  // radial weight exponent
    auto idx = [nt](int i, int j) { return i * nt + j; };
    const int unknowns = nr * nt;

    std::vector<double> rc(static_cast<std::size_t>(nr + 1)), rf(static_cast<std::size_t>(nr + 1));
    for (int i = 0; i <= nr; ++i) {
        rc[static_cast<std::size_t>(i)] = g.r_center(i);
        rf[static_cast<std::size_t>(i)] = g.r_face(i);
    }
    // Face coefficients c_i = r_f^{p} / (r_c(i) - r_c(i-1)); the outer face
    // uses the ghost value w_g = -alpha w_{N-1} that vanishes at R_max.
    std::vector<double> cf(static_cast<std::size_t>(nr + 1), 0.0);
    for (int i = 1; i < nr; ++i) {
        cf[static_cast<std::size_t>(i)] =
            std::pow(rf[static_cast<std::size_t>(i)], p) / (rc[static_cast<std::size_t>(i)] - rc[static_cast<std::size_t>(i - 1)]);
    }
    const double alpha = (rc[static_cast<std::size_t>(nr)] - g.r_max()) / (g.r_max() - rc[static_cast<std::size_t>(nr - 1)]);
    cf[static_cast<std::size_t>(nr)] =
        std::pow(g.r_max(), p) / (rc[static_cast<std::size_t>(nr)] - rc[static_cast<std::size_t>(nr - 1)]);
    std::vector<double> vol(static_cast<std::size_t>(nr));
    for (int i = 0; i < nr; ++i) {
        vol[static_cast<std::size_t>(i)] = power_integral(rf[static_cast<std::size_t>(i)], rf[static_cast<std::size_t>(i + 1)], p);
    }

    const double de = 1.0 / nt;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(unknowns) * 5);
    Eigen::VectorXd rhs(unknowns);

    for (int i = 0; i < nr; ++i) {
        const double r = rc[static_cast<std::size_t>(i)];
        // Robin row: second-order one-sided difference in eta.
        {
            const double tp = g.dt_deta(0.0);
            const int row = idx(i, 0);
            trip.emplace_back(row, idx(i, 0), -3.0 / (2.0 * de * tp) + nn / (1.0 + r * r));
            trip.emplace_back(row, idx(i, 1), 4.0 / (2.0 * de * tp));
            if (2 < nt) trip.emplace_back(row, idx(i, 2), -1.0 / (2.0 * de * tp));
            rhs[row] = problem.robin_rhs ? problem.robin_rhs(r) : 0.0;
        }
        for (int j = 1; j < nt; ++j) {
            const int row = idx(i, j);
            const double eta = j * de;
            const double x1 = g.dt_deta(eta), x2 = g.d2t_deta2(eta);
            const double inv = 1.0 / (x1 * x1);
            const double am = (1.0 / (de * de) + x2 / x1 / (2.0 * de)) * inv;
            const double ap = (1.0 / (de * de) - x2 / x1 / (2.0 * de)) * inv;
            const double a0 = -2.0 / (de * de) * inv;
            // -(w_tt) contribution
            trip.emplace_back(row, idx(i, j - 1), -am);
            if (j + 1 < nt) trip.emplace_back(row, idx(i, j + 1), -ap);
            double diag = -a0;
            // -(1/V)(F_{i+1} - F_i)
            const double v = vol[static_cast<std::size_t>(i)];
            if (i > 0) {
                const double c = cf[static_cast<std::size_t>(i)] / v;
                diag += c;
                trip.emplace_back(row, idx(i - 1, j), -c);
            }
            if (i + 1 < nr) {
                const double c = cf[static_cast<std::size_t>(i + 1)] / v;
                diag += c;
                trip.emplace_back(row, idx(i + 1, j), -c);
            } else {
                diag += cf[static_cast<std::size_t>(nr)] * (1.0 + alpha) / v;
            }
            trip.emplace_back(row, row, diag);
            rhs[row] = problem.forcing(r, g.t_node(j));
        }
    }

    Eigen::SparseMatrix<double> a(unknowns, unknowns);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("sparse LU factorization failed: " + lu.lastErrorMessage());
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("sparse LU solve failed");

    ProfileField f(g);
    f.n = nn;
    f.w.assign(static_cast<std::size_t>(nr) * static_cast<std::size_t>(nt + 1), 0.0);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nt; ++j) f.w[f.at(i, j)] = sol[idx(i, j)];

    const Eigen::VectorXd res = a * sol - rhs;
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
    double ri = 0.0, rb = 0.0;
    for (int i = 0; i < nr; ++i) {
        rb = std::max(rb, std::abs(res[idx(i, 0)]));
        for (int j = 1; j < nt; ++j) ri = std::max(ri, std::abs(res[idx(i, j)]));
    }
    f.residual_interior = ri / scale;
    f.residual_boundary = rb / scale;
    fill_derivatives(f);
    return f;
}

ProfileField::Jet ProfileField::interpolate(double r, double t) const {
    Jet jet;
    if (r < 0.0 || t < 0.0) throw std::domain_error("profile evaluated at negative coordinate");
    if (r > grid.r_max() || t > grid.t_max()) {
        jet.covered = false;
        return jet;
    }
    const int nr = grid.n_r(), nt = grid.n_t();

    // t bracket in computational coordinates
    double qt = grid.t_to_eta(t) * nt;
    int j0 = std::clamp(static_cast<int>(std::floor(qt)), 0, nt - 1);
    double ft = std::clamp(qt - j0, 0.0, 1.0);

    // r bracket: lower/upper sample positions and values with parity handling
    const double r0c = grid.r_center(0);
    const double rlc = grid.r_center(nr - 1);
    int il, iu;
    double fr;
    double sign_lo = 1.0;  // parity of the lower sample for odd quantities
    bool to_wall = false;
    if (r <= r0c) {
        il = iu = 0;
        fr = (r + r0c) / (2.0 * r0c);  // between the mirror -r0 and r0
        sign_lo = -1.0;
    } else if (r >= rlc) {
        il = iu = nr - 1;
        fr = (r - rlc) / (grid.r_max() - rlc);
        to_wall = true;
    } else {
        const double qr = grid.r_to_eta(r) * nr - 0.5;
        il = std::clamp(static_cast<int>(std::floor(qr)), 0, nr - 2);
        iu = il + 1;
        fr = std::clamp(qr - il, 0.0, 1.0);
    }

    auto sample = [&](const std::vector<double>& a, bool odd_in_r, bool zero_at_wall) {
        auto col = [&](int i, double s, int j) { return s * a[at(i, j)]; };
        const double lo0 = col(il, odd_in_r ? sign_lo : 1.0, j0);
        const double lo1 = col(il, odd_in_r ? sign_lo : 1.0, j0 + 1);
        double hi0, hi1;
        if (to_wall && zero_at_wall) {
            hi0 = hi1 = 0.0;
        } else {
            hi0 = col(iu, 1.0, j0);
            hi1 = col(iu, 1.0, j0 + 1);
        }
        const double a0 = lo0 + fr * (hi0 - lo0);
        const double a1 = lo1 + fr * (hi1 - lo1);
        return a0 + ft * (a1 - a0);
    };
    jet.w = sample(w, false, true);
    jet.w_t = sample(w_t, false, true);
    jet.w_tt = sample(w_tt, false, true);
    jet.w_r = sample(w_r, true, false);
    jet.w_rr = sample(w_rr, false, false);
    jet.w_rt = sample(w_rt, true, false);
    return jet;
}

std::shared_ptr<const ProfileField> sector_profile(Dimension n, const RadialGrid& grid, ProfileKind kind) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const ProfileField>> memo;
    const std::string key = std::to_string(n.value()) + "|" + grid.canonical_bytes() + "|" + to_string(kind);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
    }
    ReducedProblem prob;
    prob.forcing = [n, kind](double r, double t) { return profile_forcing(kind, n, r, t); };
    auto f = std::make_shared<ProfileField>(solve_reduced(n, grid, prob));
    f->kind = kind;
    std::lock_guard<std::mutex> lock(mu);
    // Keep memory bounded: profiles of fine grids are large.
    if (memo.size() >= 8) memo.clear();
    memo.emplace(key, f);
    return f;
}

// ---------------------------------------------------------------- solution

std::string curvature_hash(const CurvatureData& curv) { return sha256_hex(curv.canonical_bytes()); }

double sphere_area(int m) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
}

double quadratic_form_sq_mean(int m) { return 2.0 / (m * (m + 2.0)); }

namespace {

double frob(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a.array() * b.array()).sum(); }

// Radial/normal integral of w(r,t) * k(r,t) * r^p over the grid, using exact
// cell integrals of r^p and trapezoidal weights in t.
template <class K>
double grid_integral(const ProfileField& f, double p, K&& k) {
    const RadialGrid& g = f.grid;
    const auto tw = t_weights(g);
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double r = g.r_center(i);
        const double ci = power_integral(g.r_face(i), g.r_face(i + 1), p);
        double s = 0.0;
        for (int j = 0; j <= g.n_t(); ++j) s += tw[static_cast<std::size_t>(j)] * f.w[f.at(i, j)] * k(r, g.t_node(j));
        acc += ci * s;
    }
    return acc;
}

double boundary_integral(const ProfileField& f, double p, const std::function<double(double)>& k) {
    const RadialGrid& g = f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        acc += power_integral(g.r_face(i), g.r_face(i + 1), p) * f.w[f.at(i, 0)] * k(g.r_center(i));
    }
    return acc;
}

}  // namespace

CorrectorSolution solve_corrector(const CurvatureData& curv, const RadialGrid& grid, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const Dimension dim(curv.n);
    const int nn = dim.value();
    const int m = dim.tangential();
    const SectorDecomposition dec = sector_decompose(curv);

    CorrectorSolution sol(grid);
    sol.n = nn;
    sol.tol = tol;
    sol.curvature_hash = curvature_hash(curv);
    sol.kernel_coeffs.assign(static_cast<std::size_t>(nn), 0.0);
    sol.defects_before.assign(static_cast<std::size_t>(nn), 0.0);
    sol.defects_after.assign(static_cast<std::size_t>(nn), 0.0);

    for (const auto& s : dec.sectors) {
        auto prof = sector_profile(dim, grid, s.profile);
        sol.residual_interior = std::max(sol.residual_interior, prof->residual_interior);
        sol.residual_boundary = std::max(sol.residual_boundary, prof->residual_boundary);
        sol.sectors.push_back({s.tensor, prof});
    }
    if (sol.residual_interior > tol || sol.residual_boundary > tol) {
        throw std::runtime_error("corrector solve did not reach the requested tolerance");
    }
    if (sol.sectors.empty()) return sol;

    // <v, j_b>: the angular factor is integrated numerically on a balanced
    // point set, the (r, t) factor on the grid.
    const auto pts = quad::balanced_sphere_points(m, 2, 20240917ULL);
    const double area = sphere_area(m);
    const double npts = static_cast<double>(pts.size());
    const double wexp = 0.5 * nn;
    auto dpow = [wexp](double r, double t) { return std::pow((1.0 + t) * (1.0 + t) + r * r, -wexp); };

    std::vector<double> jnorm(static_cast<std::size_t>(nn), 0.0);
    for (const auto& s : sol.sectors) {
        const ProfileField& f = *s.profile;
        // tangential kernel elements: angular mean of (x^T T x) x_b
        const double rad_t = grid_integral(f, m + 2.0, [&](double r, double t) { return -(nn - 2) * dpow(r, t); });
        for (int b = 0; b < m; ++b) {
            double mean = 0.0;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                const double* x = pts.point(k);
                double q = 0.0;
                for (int a = 0; a < m; ++a)
                    for (int c = 0; c < m; ++c) q += s.tensor(a, c) * x[a] * x[c];
                mean += q * x[b];
            }
            mean /= npts;
            sol.defects_before[static_cast<std::size_t>(b)] += area * mean * rad_t;
        }
        // dilation element: angular mean of x^T T x
        double mean = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double* x = pts.point(k);
            for (int a = 0; a < m; ++a)
                for (int c = 0; c < m; ++c) mean += s.tensor(a, c) * x[a] * x[c];
        }
        mean /= npts;
        const double rad_n = grid_integral(f, m + 1.0, [&](double r, double t) {
            return 0.5 * (nn - 2) * dpow(r, t) * (1.0 - t * t - r * r);
        });
        sol.defects_before[static_cast<std::size_t>(nn - 1)] += area * mean * rad_n;
    }

    // ||j_b||^2 on the same grid (with w replaced by one).
    {
        ProfileField ones(grid);
        ones.w.assign(sol.sectors.front().profile->w.size(), 1.0);
        const double tang = grid_integral(ones, m + 1.0, [&](double r, double t) {
            const double v = (nn - 2) * dpow(r, t);
            return v * v;
        }) * area / m;
        const double dil = grid_integral(ones, m - 1.0, [&](double r, double t) {
            const double v = 0.5 * (nn - 2) * dpow(r, t) * (1.0 - t * t - r * r);
            return v * v;
        }) * area;
        for (int b = 0; b < m; ++b) jnorm[static_cast<std::size_t>(b)] = tang;
        jnorm[static_cast<std::size_t>(nn - 1)] = dil;
    }
    // The j_b are mutually L^2-orthogonal, so Gram-Schmidt reduces to one
    // coefficient per element.
    for (int b = 0; b < nn; ++b) {
        const auto k = static_cast<std::size_t>(b);
        sol.kernel_coeffs[k] = sol.defects_before[k] / jnorm[k];
        sol.defects_after[k] = sol.defects_before[k] - sol.kernel_coeffs[k] * jnorm[k];
    }
    return sol;
}

CorrectorJet corrector_jet(const CorrectorSolution& sol, const HalfSpacePoint& y) {
    const Dimension dim(sol.n);
    check_point(y, dim);
    const int nn = dim.value(), m = dim.tangential();
    CorrectorJet out;
    out.grad = SmallVec::Zero(nn);
    out.hess = SmallMat::Zero(nn, nn);
    const double r = std::sqrt(y.z_norm_sq());
    for (const auto& s : sol.sectors) {
        const auto jet = s.profile->interpolate(r, y.t);
        if (!jet.covered) {
            out.covered = false;
            continue;
        }
        SmallVec tz = SmallVec::Zero(m);
        double q = 0.0;
        for (int a = 0; a < m; ++a) {
            for (int c = 0; c < m; ++c) tz[a] += s.tensor(a, c) * y.z[static_cast<std::size_t>(c)];
            q += tz[a] * y.z[static_cast<std::size_t>(a)];
        }
        // w_r / r stays bounded at the axis (w is even in r).
        const double wr_over_r = r > 1e-12 ? jet.w_r / r : jet.w_rr;
        const double wrt_over_r = r > 1e-12 ? jet.w_rt / r : 0.0;
        const double curv_term = r > 1e-12 ? (jet.w_rr - wr_over_r) / (r * r) : 0.0;
        out.value += q * jet.w;
        for (int a = 0; a < m; ++a) {
            const double za = y.z[static_cast<std::size_t>(a)];
            out.grad[a] += 2.0 * tz[a] * jet.w + q * wr_over_r * za;
            for (int b = 0; b < m; ++b) {
                const double zb = y.z[static_cast<std::size_t>(b)];
                out.hess(a, b) += 2.0 * s.tensor(a, b) * jet.w + 2.0 * (tz[a] * zb + tz[b] * za) * wr_over_r +
                                  q * (curv_term * za * zb + (a == b ? wr_over_r : 0.0));
            }
            const double at = 2.0 * tz[a] * jet.w_t + q * wrt_over_r * za;
            out.hess(a, m) += at;
            out.hess(m, a) += at;
        }
        out.grad[m] += q * jet.w_t;
        out.hess(m, m) += q * jet.w_tt;
    }
    // Kernel projection (numerically tiny, applied for consistency).
    bool any = false;
    for (double c : sol.kernel_coeffs) any = any || c != 0.0;
    if (any) {
        for (int b = 1; b <= nn; ++b) {
            const double c = sol.kernel_coeffs[static_cast<std::size_t>(b - 1)];
            if (c != 0.0) out.value -= c * eval_kernel(b, y, dim);
        }
    }
    return out;
}

double eval_corrector(const CorrectorSolution& sol, const HalfSpacePoint& y, bool* covered) {
    const Dimension dim(sol.n);
    check_point(y, dim);
    const int nn = dim.value(), m = dim.tangential();
    const double r = std::sqrt(y.z_norm_sq());
    double v = 0.0;
    bool cov = true;
    for (const auto& s : sol.sectors) {
        const auto jet = s.profile->interpolate(r, y.t);
        if (!jet.covered) {
            cov = false;
            continue;
        }
        double q = 0.0;
        for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c)
                q += s.tensor(a, c) * y.z[static_cast<std::size_t>(a)] * y.z[static_cast<std::size_t>(c)];
        v += q * jet.w;
    }
    for (int b = 1; b <= nn; ++b) {
        const double c = sol.kernel_coeffs.empty() ? 0.0 : sol.kernel_coeffs[static_cast<std::size_t>(b - 1)];
        if (c != 0.0) v -= c * eval_kernel(b, y, dim);
    }
    if (covered) *covered = cov;
    return v;
}

double eval_corrector_family(const CorrectorSolution& sol, double delta, const HalfSpacePoint& y, bool* covered) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    HalfSpacePoint x = y;
    for (double& v : x.z) v /= delta;
    x.t /= delta;
    return std::pow(delta, -0.5 * (sol.n - 2)) * eval_corrector(sol, x, covered);
}

double corrector_on_ray(const CorrectorSolution& sol, std::span<const double> dir, double rho, double t,
                        bool* covered) {
    const int m = sol.n - 1;
    if (static_cast<int>(dir.size()) != m) throw std::invalid_argument("direction has wrong size");
    std::vector<double> z(dir.begin(), dir.end());
    for (double& v : z) v *= rho;
    return eval_corrector(sol, HalfSpacePoint(std::move(z), t), covered);
}

// ---------------------------------------------------------------- properties

PropertyReport check_properties(const CorrectorSolution& sol) {
    PropertyReport rep;
    const Dimension dim(sol.n);
    const int nn = dim.value(), m = dim.tangential();
    for (int tau = 0; tau < 3; ++tau) rep.decay[static_cast<std::size_t>(tau)].expected = 4.0 - tau - nn;
    if (sol.sectors.empty()) {
        rep.zero_solution = true;
        return rep;
    }
    const double area = sphere_area(m);
    const double c4 = quadratic_form_sq_mean(m);

    // Volume integrals through the sector structure.
    double l2 = 0.0, vlv = 0.0, vlv_b = 0.0;
    for (const auto& s : sol.sectors) {
        for (const auto& s2 : sol.sectors) {
            const double ang = area * c4 * frob(s.tensor, s2.tensor);
            const ProfileField& f2 = *s2.profile;
            // int v v' : integrand w w' r^{m+3}
            {
                const RadialGrid& g = s.profile->grid;
                const auto tw = t_weights(g);
                double acc = 0.0;
                for (int i = 0; i < g.n_r(); ++i) {
                    double a = 0.0;
                    for (int j = 0; j <= g.n_t(); ++j) {
                        a += tw[static_cast<std::size_t>(j)] * s.profile->w[s.profile->at(i, j)] * f2.w[f2.at(i, j)];
                    }
                    acc += power_integral(g.r_face(i), g.r_face(i + 1), m + 3.0) * a;
                }
                l2 += ang * acc;
            }
            // int v Delta v = -int v f, where -Delta v = f holds row by row.
            vlv -= ang * grid_integral(*s.profile, m + 3.0, [&](double r, double t) {
                return profile_forcing(s2.profile->kind, dim, r, t);
            });
            vlv_b -= ang * boundary_integral(*s.profile, m + 3.0, [&](double r) {
                return profile_forcing(s2.profile->kind, dim, r, 0.0);
            });
        }
    }
    rep.v_l2_norm = std::sqrt(std::max(l2, 0.0));
    rep.v_lap_v = vlv;
    rep.v_lap_v_boundary = vlv_b;

    // int_{t=0} U^{n/(n-2)} v dz with a numerical angular factor.
    {
        const auto pts = quad::balanced_sphere_points(m, 2, 77ULL);
        double acc = 0.0;
        for (const auto& s : sol.sectors) {
            double mean = 0.0;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                const double* x = pts.point(k);
                for (int a = 0; a < m; ++a)
                    for (int c = 0; c < m; ++c) mean += s.tensor(a, c) * x[a] * x[c];
            }
            mean /= static_cast<double>(pts.size());
            acc += area * mean * boundary_integral(*s.profile, m + 1.0, [nn](double r) {
                return std::pow(1.0 + r * r, -0.5 * nn);
            });
        }
        const double cn = sol.kernel_coeffs[static_cast<std::size_t>(nn - 1)];
        if (cn != 0.0) {
            // the dilation element is the only kernel part with nonzero boundary mean
            const RadialGrid& g = sol.grid;
            double k = 0.0;
            for (int i = 0; i < g.n_r(); ++i) {
                const double r = g.r_center(i);
                const double u = std::pow(1.0 + r * r, -0.5 * nn);
                k += power_integral(g.r_face(i), g.r_face(i + 1), m - 1.0) * u * 0.5 * (nn - 2) * u * (1.0 - r * r);
            }
            acc -= cn * area * k;
        }
        rep.uvq_integral = acc;
    }

    // Decay: sup over half-dyadic shells of |v|, |grad v|, |hess v|.
    {
        const auto pts = quad::balanced_sphere_points(m, 1, 5ULL);
        std::vector<std::vector<double>> dirs;
        for (std::size_t k = 0; k < pts.size(); ++k) dirs.emplace_back(pts.point(k), pts.point(k) + m);
        for (const auto& s : sol.sectors) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.tensor);
            for (int c = 0; c < m; ++c) {
                std::vector<double> d(static_cast<std::size_t>(m));
                for (int a = 0; a < m; ++a) d[static_cast<std::size_t>(a)] = es.eigenvectors()(a, c);
                dirs.push_back(std::move(d));
            }
        }
        // Shells span R/32 .. R/2: far enough out for the O(1/rho) corrections
        // to the leading power to be small, far enough in for the Dirichlet
        // truncation to be negligible.
        const double rho_max = 0.5 * std::min(sol.grid.r_max(), sol.grid.t_max());
        constexpr int kAngles = 33;
        for (double rho = rho_max / 16.0; rho <= rho_max * (1 + 1e-12); rho *= std::sqrt(2.0)) {
            std::array<double, 3> sup{0.0, 0.0, 0.0};
            for (int a = 0; a < kAngles; ++a) {
                const double th = 0.5 * std::numbers::pi * a / (kAngles - 1);
                const double r = rho * std::sin(th), t = rho * std::cos(th);
                for (const auto& d : dirs) {
                    std::vector<double> z(d);
                    for (double& v : z) v *= r;
                    const auto jet = corrector_jet(sol, HalfSpacePoint(std::move(z), t));
                    sup[0] = std::max(sup[0], std::abs(jet.value));
                    sup[1] = std::max(sup[1], jet.grad.norm());
                    sup[2] = std::max(sup[2], jet.hess.norm());
                }
            }
            for (int tau = 0; tau < 3; ++tau) {
                rep.decay[static_cast<std::size_t>(tau)].radii.push_back(rho);
                rep.decay[static_cast<std::size_t>(tau)].sup_values.push_back(sup[static_cast<std::size_t>(tau)]);
            }
        }
        for (auto& fit : rep.decay) {
            std::vector<double> lx, ly;
            for (std::size_t k = 0; k < fit.radii.size(); ++k) {
                if (fit.sup_values[k] > 0.0) {
                    lx.push_back(std::log(fit.radii[k]));
                    ly.push_back(std::log(fit.sup_values[k]));
                }
            }
            if (lx.size() >= 3) {
                fit.exponent = stats::fit_line(lx, ly).slope;
                fit.defined = true;
            }
        }
    }
    return rep;
}

RefinementStudy refinement_study(const CurvatureData& curv, const RadialGrid& base, double tol) {
    RefinementStudy st;
    RadialGrid g = base;
    for (int level = 0; level < 3; ++level) {
        const auto sol = solve_corrector(curv, g, tol);
        st.cells.push_back(g.n_r());
        st.values.push_back(check_properties(sol).v_lap_v);
        if (level < 2) g = g.refined();
    }
    const double d1 = st.values[0] - st.values[1];
    const double d2 = st.values[1] - st.values[2];
    st.order = (d1 != 0.0 && d2 != 0.0) ? std::log2(std::abs(d1 / d2)) : 0.0;
    const double denom = std::pow(2.0, st.order) - 1.0;
    st.extrapolated = denom > 0.0 ? st.values[2] - d2 / denom : st.values[2];
    return st;
}

// ---------------------------------------------------------------- cache

namespace corrector_cache {

namespace {

constexpr char kMagic[4] = {'Y', 'C', 'O', 'R'};

struct Writer {
    std::string buf;
    template <class T>
    void put(const T& v) {
        buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_vec(const std::vector<double>& v) {
        put(static_cast<std::uint64_t>(v.size()));
        buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }
    void put_str(const std::string& s) {
        put(static_cast<std::uint64_t>(s.size()));
        buf.append(s);
    }
};

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t k) const {
        if (pos + k > buf.size()) throw std::runtime_error("corrector cache truncated");
    }
    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::vector<double> get_vec() {
        const auto k = get<std::uint64_t>();
        if (k > (buf.size() - pos) / sizeof(double)) throw std::runtime_error("corrector cache truncated");
        std::vector<double> v(static_cast<std::size_t>(k));
        std::memcpy(v.data(), buf.data() + pos, v.size() * sizeof(double));
        pos += v.size() * sizeof(double);
        return v;
    }
    std::string get_str() {
        const auto k = get<std::uint64_t>();
        need(static_cast<std::size_t>(k));
        std::string s = buf.substr(pos, static_cast<std::size_t>(k));
        pos += static_cast<std::size_t>(k);
        return s;
    }
};

}  // namespace

std::string key(const CurvatureData& curv, const RadialGrid& grid, double tol) {
    std::string bytes = curv.canonical_bytes();
    bytes += grid.canonical_bytes();
    bytes.append(reinterpret_cast<const char*>(&tol), sizeof(tol));
    return sha256_hex(bytes);
}

void save(const std::string& path, const std::string& k, const CorrectorSolution& sol) {
    Writer p;
    p.put(static_cast<std::int32_t>(sol.n));
    p.put(static_cast<std::int32_t>(sol.grid.n_r()));
    p.put(static_cast<std::int32_t>(sol.grid.n_t()));
    p.put(sol.grid.r_max());
    p.put(sol.grid.t_max());
    p.put(sol.grid.stretch_r());
    p.put(sol.grid.stretch_t());
    p.put(sol.tol);
    p.put_str(sol.curvature_hash);
    p.put_vec(sol.kernel_coeffs);
    p.put_vec(sol.defects_before);
    p.put_vec(sol.defects_after);
    p.put(sol.residual_interior);
    p.put(sol.residual_boundary);
    p.put(static_cast<std::uint64_t>(sol.sectors.size()));
    for (const auto& s : sol.sectors) {
        p.put(static_cast<std::int32_t>(s.profile->kind));
        std::vector<double> t(s.tensor.data(), s.tensor.data() + s.tensor.size());
        p.put_vec(t);
        p.put(s.profile->residual_interior);
        p.put(s.profile->residual_boundary);
        p.put_vec(s.profile->w);
    }
    const auto digest = sha256(p.buf);

    Writer h;
    h.buf.append(kMagic, 4);
    h.put(kVersion);
    h.put_str(k);
    h.put(static_cast<std::uint64_t>(p.buf.size()));
    h.buf.append(reinterpret_cast<const char*>(digest.data()), digest.size());

    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write corrector cache " + tmp);
        os.write(h.buf.data(), static_cast<std::streamsize>(h.buf.size()));
        os.write(p.buf.data(), static_cast<std::streamsize>(p.buf.size()));
        if (!os) throw std::runtime_error("failed writing corrector cache " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot move cache into place");
}

bool load(const std::string& path, const std::string& k, CorrectorSolution& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string all = ss.str();
    Reader r{all};
    r.need(4);
    if (std::memcmp(all.data(), kMagic, 4) != 0) throw std::runtime_error("corrector cache: bad magic");
    r.pos = 4;
    if (r.get<std::uint32_t>() != kVersion) throw std::runtime_error("corrector cache: unsupported version");
    if (r.get_str() != k) throw std::runtime_error("corrector cache: key mismatch");
    const auto len = r.get<std::uint64_t>();
    r.need(32);
    std::array<std::uint8_t, 32> digest{};
    std::memcpy(digest.data(), all.data() + r.pos, 32);
    r.pos += 32;
    if (all.size() - r.pos != len) throw std::runtime_error("corrector cache: payload length mismatch");
    const std::string payload = all.substr(r.pos);
    if (sha256(payload) != digest) throw std::runtime_error("corrector cache: checksum mismatch");

    Reader p{payload};
    const int n = p.get<std::int32_t>();
    const int nr = p.get<std::int32_t>();
    const int nt = p.get<std::int32_t>();
    const double rmax = p.get<double>(), tmax = p.get<double>();
    const double sr = p.get<double>(), st = p.get<double>();
    RadialGrid grid(nr, nt, rmax, tmax, sr, st);
    CorrectorSolution sol(grid);
    sol.n = n;
    sol.tol = p.get<double>();
    sol.curvature_hash = p.get_str();
    sol.kernel_coeffs = p.get_vec();
    sol.defects_before = p.get_vec();
    sol.defects_after = p.get_vec();
    sol.residual_interior = p.get<double>();
    sol.residual_boundary = p.get<double>();
    const auto ns = p.get<std::uint64_t>();
    const int m = n - 1;
    for (std::uint64_t s = 0; s < ns; ++s) {
        const auto kind = static_cast<ProfileKind>(p.get<std::int32_t>());
        const auto t = p.get_vec();
        if (t.size() != static_cast<std::size_t>(m * m)) throw std::runtime_error("corrector cache: bad tensor");
        Eigen::MatrixXd tensor = Eigen::Map<const Eigen::MatrixXd>(t.data(), m, m);
        auto prof = std::make_shared<ProfileField>(grid);
        prof->n = n;
        prof->kind = kind;
        prof->residual_interior = p.get<double>();
        prof->residual_boundary = p.get<double>();
        prof->w = p.get_vec();
        if (prof->w.size() != static_cast<std::size_t>(nr) * static_cast<std::size_t>(nt + 1)) {
            throw std::runtime_error("corrector cache: bad profile size");
        }
        fill_derivatives(*prof);
        sol.sectors.push_back({tensor, prof});
    }
    out = std::move(sol);
    return true;
}

}  // namespace corrector_cache

}  // namespace yamabe
