#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "yamabe/corrector.hpp"

using namespace yamabe;

namespace {

HalfSpacePoint random_point(std::mt19937_64& rng, int n, double radius) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> y(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& c : y) {
        c = g(rng);
        s += c * c;
    }
    const double rho = radius * u(rng) / std::sqrt(s);
    for (double& c : y) c *= rho;
    y.back() = std::abs(y.back());
    return HalfSpacePoint::from_coords(y);
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int m) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = g(rng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

CurvatureData unit_curvature(std::uint64_t seed, int n = 8) { return random_admissible(seed, 1.0, Dimension(n)); }

const RadialGrid& standard_grid() {
    static const RadialGrid g = RadialGrid::standard(200);
    return g;
}

// Gaussian manufactured profile: w = exp(-(r^2 + t^2)/4). Then
//   w_rr + (n+2)/r w_r + w_tt = ((r^2 + t^2)/4 - 1 - (n+2)/2) w
// and w_t + n/(1+r^2) w = n/(1+r^2) exp(-r^2/4) on t = 0.
double gauss_w(double r, double t) { return std::exp(-0.25 * (r * r + t * t)); }
double gauss_lw(int n, double r, double t) { return (0.25 * (r * r + t * t) - 1.0 - 0.5 * (n + 2)) * gauss_w(r, t); }

class TempDir {
public:
    TempDir() : path_(std::filesystem::temp_directory_path() / ("yamabe-test-" + std::to_string(::getpid()))) {
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace

TEST(Grid, RefinementKeepsTheMap) {
    const RadialGrid g = RadialGrid::standard(50, 100.0, 100.0);
    const RadialGrid f = g.refined();
    EXPECT_EQ(f.n_r(), 100);
    EXPECT_EQ(f.n_t(), 100);
    EXPECT_NEAR(f.stretch_r(), std::sqrt(g.stretch_r()), 1e-15);
    // every coarse node is a fine node
    for (int j = 0; j <= g.n_t(); ++j) EXPECT_NEAR(f.t_node(2 * j), g.t_node(j), 1e-12 * (1 + g.t_node(j)));
    EXPECT_NEAR(g.t_to_eta(g.t_node(17)), 17.0 / 50.0, 1e-12);
    EXPECT_THROW(RadialGrid(10, 10, 1.0, 1.0, 1.5, 1.0), std::invalid_argument);
}

TEST(Solve, FlatDataGivesZero) {
    const auto sol = solve_corrector(CurvatureData::zero(Dimension(8)), standard_grid(), 1e-8);
    EXPECT_TRUE(sol.sectors.empty());
    for (double d : sol.defects_before) EXPECT_EQ(d, 0.0);
    for (double d : sol.kernel_coeffs) EXPECT_EQ(d, 0.0);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) EXPECT_EQ(eval_corrector(sol, random_point(rng, 8, 5.0)), 0.0);
    const auto p = check_properties(sol);
    EXPECT_TRUE(p.zero_solution);
    EXPECT_EQ(p.v_lap_v, 0.0);
    EXPECT_FALSE(p.decay[0].defined);
}

TEST(Solve, RejectsNonPositiveTolerance) {
    EXPECT_THROW(solve_corrector(unit_curvature(1), standard_grid(), 0.0), std::invalid_argument);
}

TEST(Solve, ResidualsBelowTolerance) {
    const auto sol = solve_corrector(unit_curvature(1), standard_grid(), 1e-8);
    EXPECT_LE(sol.residual_interior, 1e-8);
    EXPECT_LE(sol.residual_boundary, 1e-8);
    EXPECT_EQ(sol.curvature_hash, curvature_hash(unit_curvature(1)));
}

TEST(Solve, ManufacturedSolutionConvergesAtSecondOrder) {
    for (int n : {8, 11}) {
        ReducedProblem prob;
        prob.forcing = [n](double r, double t) { return -gauss_lw(n, r, t); };
        prob.robin_rhs = [n](double r) { return n / (1 + r * r) * std::exp(-0.25 * r * r); };
        // The Robin problem has a near-kernel whose amplification grows with n,
        // so coarse grids are pre-asymptotic; 80/160/320 cells are not.
        RadialGrid g = RadialGrid::standard(80, 20.0, 20.0);
        std::vector<double> err;
        for (int level = 0; level < 3; ++level) {
            const auto f = solve_reduced(Dimension(n), g, prob);
            double e = 0.0;
            for (int i = 0; i < g.n_r(); ++i)
                for (int j = 0; j <= g.n_t(); ++j)
                    e = std::max(e, std::abs(f.w[f.at(i, j)] - gauss_w(g.r_center(i), g.t_node(j))));
            err.push_back(e);
            g = g.refined();
        }
        EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.3) << "n=" << n << " errors " << err[0] << ' ' << err[1] << ' ' << err[2];
    }
}

TEST(Solve, RefinementOrderNearTwo) {
    const auto st = refinement_study(unit_curvature(2), RadialGrid::standard(100), 1e-8);
    ASSERT_EQ(st.cells, (std::vector<int>{100, 200, 400}));
    EXPECT_NEAR(st.order, 2.0, 0.3);
    // Richardson: the extrapolated value is closer to the finest than the finest is to the middle.
    EXPECT_LT(std::abs(st.extrapolated - st.values[2]), std::abs(st.values[2] - st.values[1]));
}

TEST(SectorReduction, BruteForceLaplacianMatchesReducedOperator) {
    // n-dimensional central differences of T_ij z_i z_j w(|z|, t) against
    // T_ij z_i z_j [w_rr + (n+2)/r w_r + w_tt] for the Gaussian profile.
    std::mt19937_64 rng(2);
    for (int n : {8, 10}) {
        const auto c = unit_curvature(3, n);
        const Eigen::MatrixXd t = sector_decompose(c).sectors.at(0).tensor;
        const int m = n - 1;
        auto qf = [&](const double* z) {
            double q = 0.0;
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) q += t(a, b) * z[a] * z[b];
            return q;
        };
        auto field = [&](const std::vector<double>& y) {
            double r2 = 0.0;
            for (int a = 0; a < m; ++a) r2 += y[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(a)];
            return qf(y.data()) * gauss_w(std::sqrt(r2), y.back());
        };
        std::vector<double> errs;
        for (double h : {4e-2, 2e-2, 1e-2}) {
            std::mt19937_64 local(rng());
            double worst = 0.0, scale = 0.0;
            for (int k = 0; k < 30; ++k) {
                auto p = random_point(local, n, 3.0);
                p.t += 0.5;
                std::vector<double> y(p.z);
                y.push_back(p.t);
                double lap = 0.0;
                for (int a = 0; a < n; ++a) {
                    auto yp = y, ym = y;
                    yp[static_cast<std::size_t>(a)] += h;
                    ym[static_cast<std::size_t>(a)] -= h;
                    lap += (field(yp) - 2 * field(y) + field(ym)) / (h * h);
                }
                const double exact = qf(p.z.data()) * gauss_lw(n, std::sqrt(p.z_norm_sq()), p.t);
                worst = std::max(worst, std::abs(lap - exact));
                scale = std::max(scale, std::abs(exact));
            }
            errs.push_back(worst / scale);
        }
        EXPECT_LT(errs[2], 0.02);
        EXPECT_LT(errs[2], errs[1]);
        EXPECT_LT(errs[1], errs[0]);
        EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.5);  // second-order stencil
    }
}

TEST(SectorReduction, SolvedCorrectorSatisfiesItsEquation) {
    // Trace of the recovered Hessian plus the source, at the same sample points
    // on two grids: small, and shrinking at the discretization order.
    const auto c = unit_curvature(4);
    std::vector<double> rel;
    for (int cells : {100, 200}) {
        const auto sol = solve_corrector(c, RadialGrid::standard(cells), 1e-8);
        std::mt19937_64 rng(3);
        double worst = 0.0, scale = 0.0;
        for (int k = 0; k < 200; ++k) {
            auto y = random_point(rng, 8, 4.0);
            y.t += 0.25;
            const auto jet = corrector_jet(sol, y);
            ASSERT_TRUE(jet.covered);
            const double f = rhs_corrector(c, y);
            worst = std::max(worst, std::abs(jet.hess.trace() + f));
            scale = std::max(scale, std::abs(f));
        }
        rel.push_back(worst / scale);
    }
    EXPECT_LT(rel[1], 0.05);
    EXPECT_GT(rel[0] / rel[1], 3.0) << rel[0] << " -> " << rel[1];
}

TEST(SectorReduction, JetAgreesWithFiniteDifferencesOfTheField) {
    const auto sol = solve_corrector(unit_curvature(5), standard_grid(), 1e-8);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 10; ++k) {
        auto y = random_point(rng, 8, 3.0);
        y.t += 0.5;
        auto f = [&](const HalfSpacePoint& p) { return eval_corrector(sol, p); };
        const auto jet = corrector_jet(sol, y);
        EXPECT_NEAR(jet.value, f(y), 1e-14);
        const SmallVec g = fd_gradient(f, y, 1e-3);
        EXPECT_LT((g - jet.grad).norm(), 0.02 * jet.grad.norm() + 1e-10);
    }
}

TEST(Family, UnitDeltaIsTheCorrector) {
    const auto sol = solve_corrector(unit_curvature(6), standard_grid(), 1e-8);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const auto y = random_point(rng, 8, 5.0);
        EXPECT_EQ(eval_corrector_family(sol, 1.0, y), eval_corrector(sol, y));
    }
}

TEST(Family, ScalingIdentityProperty) {
    const auto sol = solve_corrector(unit_curvature(6), standard_grid(), 1e-8);
    std::mt19937_64 rng(6);
    for (double delta : {0.01, 0.1, 0.5, 3.0}) {
        for (int k = 0; k < 30; ++k) {
            const auto y = random_point(rng, 8, 10.0 * delta);
            std::vector<double> z(y.z);
            for (double& c : z) c /= delta;
            const double expect = std::pow(delta, -3.0) * eval_corrector(sol, HalfSpacePoint(z, y.t / delta));
            const double got = eval_corrector_family(sol, delta, y);
            EXPECT_NEAR(got, expect, 1e-12 * std::max(std::abs(expect), 1e-300));
        }
    }
}

TEST(Family, LinearInCurvature) {
    const auto c = unit_curvature(7);
    const auto one = solve_corrector(c, standard_grid(), 1e-8);
    const auto two = solve_corrector(c.scaled(2.0), standard_grid(), 1e-8);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        const auto y = random_point(rng, 8, 8.0);
        const double v1 = eval_corrector(one, y);
        EXPECT_NEAR(eval_corrector(two, y), 2.0 * v1, 1e-8 * std::max(1.0, std::abs(v1)));
    }
}

TEST(Properties, BoundaryMomentVanishes) {
    const auto sol = solve_corrector(unit_curvature(8), standard_grid(), 1e-8);
    const auto p = check_properties(sol);
    EXPECT_GT(p.v_l2_norm, 0.0);
    EXPECT_LT(std::abs(p.uvq_integral), 1e-4 * p.v_l2_norm);
}

TEST(Properties, DirichletPairingNegativeAndDecayAtEight) {
    const auto sol = solve_corrector(unit_curvature(9), standard_grid(), 1e-8);
    const auto p = check_properties(sol);
    EXPECT_LT(p.v_lap_v, 0.0);
    ASSERT_TRUE(p.decay[0].defined);
    EXPECT_EQ(p.decay[0].expected, -4.0);
    EXPECT_NEAR(p.decay[0].exponent, -4.0, 0.3);
    EXPECT_NEAR(p.decay[1].exponent, -5.0, 0.3);
}

TEST(Properties, TangentialKernelProjectionIsANoOp) {
    for (int n : {8, 10}) {
        const auto sol = solve_corrector(unit_curvature(10, n), standard_grid(), 1e-8);
        const double vnorm = check_properties(sol).v_l2_norm;
        for (int b = 0; b + 1 < n; ++b) {
            EXPECT_LE(std::abs(sol.defects_before[static_cast<std::size_t>(b)]), 1e-10 * vnorm);
            EXPECT_LE(std::abs(sol.kernel_coeffs[static_cast<std::size_t>(b)]), 1e-10 * vnorm);
        }
        for (double d : sol.defects_after) EXPECT_LE(std::abs(d), 1e-12 * vnorm);
    }
}

TEST(Properties, DirichletPairingRotationInvariantProperty) {
    std::mt19937_64 rng(8);
    const auto c = unit_curvature(11);
    const double base = check_properties(solve_corrector(c, standard_grid(), 1e-8)).v_lap_v;
    for (int k = 0; k < 3; ++k) {
        const auto r = c.rotated(random_orthogonal(rng, 7));
        EXPECT_NEAR(check_properties(solve_corrector(r, standard_grid(), 1e-8)).v_lap_v, base, 1e-10 * std::abs(base));
    }
}

TEST(Angular, SphereConstants) {
    for (int m : {2, 3, 7, 9}) EXPECT_NEAR(sphere_area(m), 2 * std::pow(M_PI, 0.5 * m) / std::tgamma(0.5 * m), 1e-12);
    // Monte Carlo oracle for the mean of (x^T T x)^2 with T traceless, |T| = 1.
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    const int m = 7;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    t(0, 0) = 1;
    t(1, 1) = -1;
    t /= t.norm();
    double acc = 0.0;
    constexpr int kSamples = 200000;
    for (int k = 0; k < kSamples; ++k) {
        Eigen::VectorXd x(m);
        for (int a = 0; a < m; ++a) x[a] = g(rng);
        x.normalize();
        const double q = x.dot(t * x);
        acc += q * q;
    }
    EXPECT_NEAR(acc / kSamples, quadratic_form_sq_mean(m), 0.02 * quadratic_form_sq_mean(m));
}

TEST(Cache, RoundTripIsExact) {
    TempDir dir;
    const auto c = unit_curvature(12);
    const auto sol = solve_corrector(c, standard_grid(), 1e-8);
    const std::string key = corrector_cache::key(c, standard_grid(), 1e-8);
    const auto file = (dir.path() / "a.bin").string();
    corrector_cache::save(file, key, sol);
    CorrectorSolution back(standard_grid());
    ASSERT_TRUE(corrector_cache::load(file, key, back));
    EXPECT_EQ(back.kernel_coeffs, sol.kernel_coeffs);
    EXPECT_EQ(back.curvature_hash, sol.curvature_hash);
    ASSERT_EQ(back.sectors.size(), sol.sectors.size());
    EXPECT_EQ(back.sectors[0].profile->w, sol.sectors[0].profile->w);
    std::mt19937_64 rng(10);
    for (int k = 0; k < 20; ++k) {
        const auto y = random_point(rng, 8, 5.0);
        EXPECT_EQ(eval_corrector(back, y), eval_corrector(sol, y));
    }
}

TEST(Cache, KeyDependsOnEveryInput) {
    const auto c = unit_curvature(13);
    const auto k = corrector_cache::key(c, standard_grid(), 1e-8);
    EXPECT_NE(k, corrector_cache::key(c, standard_grid(), 1e-9));
    EXPECT_NE(k, corrector_cache::key(c, RadialGrid::standard(100), 1e-8));
    EXPECT_NE(k, corrector_cache::key(c.scaled(2.0), standard_grid(), 1e-8));
}

TEST(Cache, DetectsCorruptionAndMismatch) {
    TempDir dir;
    const auto c = unit_curvature(14);
    const auto sol = solve_corrector(c, standard_grid(), 1e-8);
    const std::string key = corrector_cache::key(c, standard_grid(), 1e-8);
    const auto file = (dir.path() / "b.bin").string();
    CorrectorSolution out(standard_grid());
    EXPECT_FALSE(corrector_cache::load(file, key, out));  // missing file

    corrector_cache::save(file, key, sol);
    EXPECT_THROW(corrector_cache::load(file, "other-key", out), std::runtime_error);

    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekg(0, std::ios::end);
        const auto size = static_cast<std::streamoff>(f.tellg());
        f.seekp(size - 9);
        char b = 0;
        f.seekg(size - 9);
        f.read(&b, 1);
        b = static_cast<char>(b ^ 0x5a);
        f.seekp(size - 9);
        f.write(&b, 1);
    }
    EXPECT_THROW(corrector_cache::load(file, key, out), std::runtime_error);

    {
        std::ofstream f(file, std::ios::binary | std::ios::trunc);
        f << "JUNKJUNKJUNK";
    }
    EXPECT_THROW(corrector_cache::load(file, key, out), std::runtime_error);
}
