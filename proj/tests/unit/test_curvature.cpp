#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "yamabe/curvature.hpp"

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

// Hessian of U written out by hand: (n-2)[n w_a w_b D^{-n/2-1} - delta_ab D^{-n/2}],
// w = (z, 1 + t).
double hess_u(const HalfSpacePoint& y, int n, int a, int b) {
    const double d = (1 + y.t) * (1 + y.t) + y.z_norm_sq();
    auto w = [&](int k) { return k < n - 1 ? y.z[static_cast<std::size_t>(k)] : 1.0 + y.t; };
    return (n - 2) * (n * w(a) * w(b) * std::pow(d, -0.5 * n - 1) - (a == b) * std::pow(d, -0.5 * n));
}

// Index-loop forcing: [1/3 Rbar_ikjl z_k z_l + R_ninj t^2] d_ij U.
double oracle_rhs(const CurvatureData& c, const HalfSpacePoint& y) {
    const int m = c.m();
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double coef = c.rnn(i, j) * y.t * y.t;
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l)
                    coef += c.rbar(i, k, j, l) * y.z[static_cast<std::size_t>(k)] * y.z[static_cast<std::size_t>(l)] / 3.0;
            acc += coef * hess_u(y, c.n, i, j);
        }
    return acc;
}

bool has_violation(const ValidationReport& r, const std::string& name) {
    for (const auto& v : r.violations())
        if (v.check == name) return true;
    return false;
}

}  // namespace

TEST(Validate, ZeroDataPasses) { EXPECT_TRUE(validate(CurvatureData::zero(Dimension(8))).pass()); }

TEST(Validate, LoneEntryBreaksAntisymmetry) {
    CurvatureData c = CurvatureData::zero(Dimension(8));
    c.rbar.at(0, 1, 0, 2) = 1.0;  // Rbar_{1213} without partners
    const auto r = validate(c);
    EXPECT_FALSE(r.pass());
    EXPECT_TRUE(has_violation(r, "rbar_antisymmetry_ik"));
}

TEST(Validate, RandomAdmissiblePassesForManySeedsProperty) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const int n = 8 + static_cast<int>(seed % 5);
        const CurvatureData c = random_admissible(seed, 1.0, Dimension(n));
        ASSERT_TRUE(validate(c).pass()) << "seed " << seed;
        // Brute-force scan of the symmetries over every index tuple.
        const int m = c.m();
        double worst = 0.0;
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k)
                for (int j = 0; j < m; ++j)
                    for (int l = 0; l < m; ++l) {
                        const double r = c.rbar(i, k, j, l);
                        worst = std::max(worst, std::abs(r + c.rbar(k, i, j, l)));
                        worst = std::max(worst, std::abs(r + c.rbar(i, k, l, j)));
                        worst = std::max(worst, std::abs(r - c.rbar(j, l, i, k)));
                        worst = std::max(worst, std::abs(r + c.rbar(i, j, l, k) + c.rbar(i, l, k, j)));
                    }
        EXPECT_LT(worst, 1e-13) << "seed " << seed;
    }
}

TEST(RandomAdmissible, IsDeterministic) {
    const auto a = random_admissible(42, 1.0, Dimension(9));
    const auto b = random_admissible(42, 1.0, Dimension(9));
    EXPECT_EQ(a.canonical_bytes(), b.canonical_bytes());
    EXPECT_NE(a.canonical_bytes(), random_admissible(43, 1.0, Dimension(9)).canonical_bytes());
}

TEST(RandomAdmissible, RicciTracesVanish) {
    const auto c = random_admissible(11, 2.0, Dimension(10));
    const int m = c.m();
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
            double tr = 0.0;
            for (int i = 0; i < m; ++i) tr += c.rbar(i, k, i, l);
            EXPECT_NEAR(tr, 0.0, 1e-13);
        }
    double tr = 0.0;
    for (int i = 0; i < m; ++i) tr += c.rnn(i, i);
    EXPECT_NEAR(tr, 0.0, 1e-13);
    EXPECT_NEAR(weyl_norm_sq(c), 4.0, 1e-12);
    EXPECT_NEAR(rnn_norm_sq(c), 4.0, 1e-12);
}

TEST(Norms, ZeroData) {
    const auto c = CurvatureData::zero(Dimension(8));
    EXPECT_EQ(weyl_norm_sq(c), 0.0);
    EXPECT_EQ(rnn_norm_sq(c), 0.0);
}

TEST(Norms, QuadraticInScale) {
    const auto c = random_admissible(5, 1.0, Dimension(8));
    for (double s : {0.5, 3.0}) {
        EXPECT_NEAR(weyl_norm_sq(c.scaled(s)), s * s * weyl_norm_sq(c), 1e-12);
        EXPECT_NEAR(rnn_norm_sq(c.scaled(s)), s * s * rnn_norm_sq(c), 1e-12);
    }
}

TEST(Norms, TwoPlaneBlockMatchesIndexSum) {
    CurvatureData c = CurvatureData::zero(Dimension(8));
    c.rbar.at(0, 1, 0, 1) = 1.0;
    c.rbar.at(1, 0, 1, 0) = 1.0;
    c.rbar.at(0, 1, 1, 0) = -1.0;
    c.rbar.at(1, 0, 0, 1) = -1.0;
    double brute = 0.0;
    for (double v : c.rbar.data()) brute += v * v;
    EXPECT_EQ(brute, 4.0);
    EXPECT_DOUBLE_EQ(weyl_norm_sq(c), brute);
}

TEST(Norms, RotationInvarianceProperty) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 8 + trial % 4;
        const auto c = random_admissible(100 + trial, 1.0, Dimension(n));
        const auto r = c.rotated(random_orthogonal(rng, n - 1));
        EXPECT_NEAR(weyl_norm_sq(r), weyl_norm_sq(c), 1e-12);
        EXPECT_NEAR(rnn_norm_sq(r), rnn_norm_sq(c), 1e-12);
    }
}

TEST(Metric, IdentityAtOrigin) {
    const auto c = with_random_derivatives(random_admissible(1, 1.0, Dimension(8)), 1, 1.0);
    const HalfSpacePoint o(std::vector<double>(7, 0.0), 0.0);
    EXPECT_EQ(metric_inverse(c, o), SmallMat::Identity(8, 8));
}

TEST(Metric, IdentityForFlatData) {
    std::mt19937_64 rng(9);
    const auto c = CurvatureData::zero(Dimension(9));
    for (int k = 0; k < 20; ++k) EXPECT_EQ(metric_inverse(c, random_point(rng, 9, 3.0)), SmallMat::Identity(9, 9));
}

TEST(Metric, QuadraticTermMatchesIndexLoop) {
    std::mt19937_64 rng(10);
    const auto c = with_random_derivatives(random_admissible(2, 1.0, Dimension(8)), 2, 1.0);
    const int m = c.m();
    for (int k = 0; k < 20; ++k) {
        const auto y = random_point(rng, 8, 1.0);
        const auto mt = metric_terms(c, y);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double expect = c.rnn(i, j) * y.t * y.t;
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b)
                        expect += c.rbar(i, a, j, b) * y.z[static_cast<std::size_t>(a)] * y.z[static_cast<std::size_t>(b)] / 3.0;
                EXPECT_NEAR(mt.g2(i, j), expect, 1e-13);
            }
        // The full inverse metric is the sum of its homogeneous pieces.
        const SmallMat g = metric_inverse(c, y);
        SmallMat sum = SmallMat::Identity(8, 8);
        sum.topLeftCorner(m, m) += mt.g2 + mt.g3 + mt.g4;
        EXPECT_LT((g - sum).norm(), 1e-13);
    }
}

TEST(Metric, PositiveDefiniteInsideRadiusProperty) {
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto c = with_random_derivatives(random_admissible(seed, 1.0, Dimension(8)), seed, 1.0);
        const double radius = metric_spd_radius(c);
        ASSERT_TRUE(std::isfinite(radius));
        ASSERT_GT(radius, 0.0);
        for (int k = 0; k < 200; ++k) {
            const SmallMat g = metric_inverse(c, random_point(rng, 8, radius));
            EXPECT_LT((g - g.transpose()).norm(), 1e-14);
            EXPECT_GT(Eigen::SelfAdjointEigenSolver<SmallMat>(g).eigenvalues().minCoeff(), 0.0);
        }
    }
    EXPECT_TRUE(std::isinf(metric_spd_radius(CurvatureData::zero(Dimension(8)))));
}

TEST(Metric, DeterminantIsOne) {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 10; ++k) EXPECT_EQ(metric_det(random_point(rng, 8, 2.0)), 1.0);
}

TEST(MeanCurvature, ModelIsHomogeneous) {
    std::mt19937_64 rng(13);
    const MeanCurvatureModel h{2.5, 3.0};
    const HalfSpacePoint o(std::vector<double>(7, 0.0), 0.0);
    EXPECT_EQ(mean_curvature_model(o, h), 0.0);
    for (int k = 0; k < 20; ++k) {
        const auto y = random_point(rng, 8, 2.0);
        EXPECT_NEAR(mean_curvature_model(y, h) / std::pow(y.norm(), 3), 2.5, 1e-13);
    }
}

TEST(Rhs, ZeroForFlatData) {
    std::mt19937_64 rng(14);
    const auto c = CurvatureData::zero(Dimension(8));
    for (int k = 0; k < 20; ++k) EXPECT_EQ(rhs_corrector(c, random_point(rng, 8, 3.0)), 0.0);
}

TEST(Rhs, VanishesOnNormalAxisForNormalData) {
    CurvatureData c = random_admissible(3, 1.0, Dimension(8));
    c.rbar = TangentTensor(7, 4);
    for (double t : {0.0, 0.3, 1.0, 4.0}) {
        EXPECT_NEAR(rhs_corrector(c, HalfSpacePoint(std::vector<double>(7, 0.0), t)), 0.0, 1e-15);
    }
}

TEST(Rhs, TangentialDataContributesNothingProperty) {
    std::mt19937_64 rng(15);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CurvatureData c = random_admissible(seed, 1.0, Dimension(9));
        c.rnn = TangentTensor(8, 2);
        for (int k = 0; k < 50; ++k) {
            const auto y = random_point(rng, 9, 4.0);
            EXPECT_NEAR(rhs_corrector(c, y), 0.0, 1e-14);
            EXPECT_NEAR(oracle_rhs(c, y), 0.0, 1e-14);
        }
    }
}

TEST(Rhs, MatchesIndexLoopOracle) {
    std::mt19937_64 rng(16);
    const auto c = random_admissible(4, 1.0, Dimension(8));
    for (int k = 0; k < 50; ++k) {
        const auto y = random_point(rng, 8, 4.0);
        EXPECT_NEAR(rhs_corrector(c, y), oracle_rhs(c, y), 1e-14);
    }
}

TEST(Rhs, LinearInCurvatureProperty) {
    std::mt19937_64 rng(17);
    const auto c1 = with_random_derivatives(random_admissible(21, 1.0, Dimension(8)), 21, 1.0);
    const auto c2 = with_random_derivatives(random_admissible(22, 1.0, Dimension(8)), 22, 1.0);
    for (auto [a, b] : {std::pair{0.7, -1.3}, std::pair{2.0, 0.5}}) {
        const auto mix = c1.combined(a, c2, b);
        for (int k = 0; k < 50; ++k) {
            const auto y = random_point(rng, 8, 4.0);
            EXPECT_NEAR(rhs_corrector(mix, y), a * rhs_corrector(c1, y) + b * rhs_corrector(c2, y), 1e-14);
        }
    }
}

TEST(Rhs, IndependentOfTangentialCurvatureProperty) {
    std::mt19937_64 rng(18);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto c = random_admissible(seed, 1.0, Dimension(10));
        CurvatureData zeroed = c;
        zeroed.rbar = TangentTensor(9, 4);
        for (int k = 0; k < 50; ++k) {
            const auto y = random_point(rng, 10, 4.0);
            EXPECT_NEAR(rhs_corrector(c, y), rhs_corrector(zeroed, y), 1e-14);
        }
    }
}

TEST(Sectors, NormalDataGivesOneSector) {
    CurvatureData c = random_admissible(6, 1.0, Dimension(8));
    const auto dec = sector_decompose(c);
    ASSERT_EQ(dec.sectors.size(), 1u);
    EXPECT_EQ(dec.sectors[0].profile, ProfileKind::NormalCurvature);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) EXPECT_DOUBLE_EQ(dec.sectors[0].tensor(i, j), c.rnn(i, j));
    // n(n-2) t^2 D^{-(n+2)/2}
    for (double r : {0.0, 0.5, 2.0})
        for (double t : {0.0, 0.7, 3.0}) {
            const double d = (1 + t) * (1 + t) + r * r;
            EXPECT_NEAR(profile_forcing(ProfileKind::NormalCurvature, Dimension(8), r, t), 48.0 * t * t * std::pow(d, -5.0),
                        1e-15);
        }
}

TEST(Sectors, FlatDataGivesNone) { EXPECT_TRUE(sector_decompose(CurvatureData::zero(Dimension(8))).sectors.empty()); }

TEST(Sectors, ReconstructTheForcing) {
    std::mt19937_64 rng(19);
    const auto c = random_admissible(7, 1.0, Dimension(9));
    const auto dec = sector_decompose(c);
    for (int k = 0; k < 100; ++k) {
        const auto y = random_point(rng, 9, 5.0);
        EXPECT_NEAR(dec.evaluate(y), rhs_corrector(c, y), 1e-12);
    }
}
