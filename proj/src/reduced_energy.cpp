#include "yamabe/reduced_energy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "yamabe/quadrature.hpp"

namespace yamabe {

namespace {

using std::numbers::pi;
constexpr double kQuadTol = 1e-13;
constexpr unsigned kMaxDepth = 20;

template <class F>
double adaptive(F f, double a, double b) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, kMaxDepth, kQuadTol, &err);
}

// Closed form of int_{R^m} |u|^{2k} (1+|u|^2)^{-p} du.
double power_moment(int m, double k, double p) {
    const double h = 0.5 * m;
    return std::pow(pi, h) * std::exp(std::lgamma(h + k) + std::lgamma(p - h - k) - std::lgamma(h) - std::lgamma(p));
}

// Integral over r in (0, inf) of r^a (b2 + r^2)^{-p}, after r = tan(theta);
// written with sin/cos powers so that no factor overflows near pi/2.
double radial(double a, double b2, double p) {
    return adaptive(
        [=](double th) {
            const double s = std::sin(th), c = std::cos(th);
            if (c <= 0.0) return 0.0;
            return std::pow(s, a) * std::pow(c, 2.0 * p - a - 2.0) * std::pow(b2 * c * c + s * s, -p);
        },
        0.0, 0.5 * pi);
}

// Outer integral over t in (0, inf) after t = tan(phi).
template <class F>
double over_t(F inner) {
    return adaptive(
        [&](double ph) {
            const double c = std::cos(ph);
            if (c <= 0.0) return 0.0;
            const double t = std::tan(ph);
            return inner(t) / (c * c);
        },
        0.0, 0.5 * pi);
}

void require_above_six(Dimension n, const char* what) {
    if (n.value() <= 6) {
        throw std::domain_error(std::string(what) + " diverges for n <= 6");
    }
}

}  // namespace

// Closed forms on their own, for the energy constants evaluated in loops.
namespace {

double i1_closed(Dimension n) { return power_moment(n.tangential(), 0.0, n.value() - 1.0); }

double i2_closed(Dimension n) {
    const int nn = n.value();
    // d/dp of the power moment brings down -ln(1+r^2); ln U = -(n-2)/2 ln(1+r^2).
    return -0.5 * (nn - 2) * i1_closed(n) *
           (boost::math::digamma(nn - 1.0) - boost::math::digamma(0.5 * (nn - 1)));
}

double i3_closed(Dimension n) {
    require_above_six(n, "I3");
    return power_moment(n.tangential(), 1.0, n.value() - 2.0) / (n.value() - 6.0);
}

double i4_closed(Dimension n) {
    require_above_six(n, "I4");
    const int nn = n.value();
    // int_0^inf t^2 (1+t)^{3-n} dt = B(3, n-6)
    return power_moment(n.tangential(), 2.0, nn) * 2.0 / ((nn - 4.0) * (nn - 5.0) * (nn - 6.0));
}

// Integration by parts against the boundary condition: int |grad U|^2 = (n-2) I1.
double grad_sq_closed(Dimension n) { return (n.value() - 2) * i1_closed(n); }

}  // namespace

double DualValue::rel_gap() const {
    const double s = std::max(std::abs(closed_form), std::abs(quadrature));
    return s == 0.0 ? 0.0 : std::abs(closed_form - quadrature) / s;
}

DualValue moment_i1(Dimension n) {
    const int nn = n.value(), m = n.tangential();
    DualValue v;
    v.closed_form = i1_closed(n);
    v.quadrature = sphere_area(m) * radial(m - 1.0, 1.0, nn - 1.0);
    return v;
}

DualValue moment_i2(Dimension n) {
    const int nn = n.value(), m = n.tangential();
    DualValue v;
    v.closed_form = i2_closed(n);
    const double a = m - 1.0, p = nn - 1.0;
    v.quadrature = sphere_area(m) * adaptive(
                                        [=](double th) {
                                            const double s = std::sin(th), c = std::cos(th);
                                            if (c <= 0.0) return 0.0;
                                            // (1+r^2) = 1/c^2, so ln U = (n-2) ln c
                                            return std::pow(s, a) * std::pow(c, 2.0 * p - a - 2.0) * (nn - 2) * std::log(c);
                                        },
                                        0.0, 0.5 * pi);
    return v;
}

DualValue moment_i3(Dimension n) {
    const int nn = n.value(), m = n.tangential();
    DualValue v;
    v.closed_form = i3_closed(n);
    v.quadrature = sphere_area(m) * over_t([=](double t) { return radial(m + 1.0, (1 + t) * (1 + t), nn - 2.0); });
    return v;
}

DualValue moment_i4(Dimension n) {
    const int nn = n.value(), m = n.tangential();
    DualValue v;
    v.closed_form = i4_closed(n);
    v.quadrature = sphere_area(m) * over_t([=](double t) { return t * t * radial(m + 3.0, (1 + t) * (1 + t), nn); });
    return v;
}

DualValue dirichlet_energy(Dimension n) {
    const int nn = n.value(), m = n.tangential();
    DualValue v;
    v.closed_form = grad_sq_closed(n);
    // |grad U|^2 = (n-2)^2 D^{1-n}
    v.quadrature = sphere_area(m) * (nn - 2.0) * (nn - 2.0) *
                   over_t([=](double t) { return radial(m - 1.0, (1 + t) * (1 + t), nn - 1.0); });
    return v;
}

MomentIntegrals moment_integrals(Dimension n) {
    MomentIntegrals mi;
    mi.n = n.value();
    mi.i1 = moment_i1(n);
    mi.i2 = moment_i2(n);
    mi.i3 = moment_i3(n);
    mi.i4 = moment_i4(n);
    mi.grad_sq = dirichlet_energy(n);
    return mi;
}

McEstimate qmc_i4(Dimension n, std::size_t points, int replicates, std::uint64_t seed) {
    require_above_six(n, "I4");
    if (points == 0 || replicates < 2) throw std::invalid_argument("qmc_i4 needs points > 0 and >= 2 replicates");
    const int nn = n.value(), m = n.tangential();
    const int d = m + 2;
    const double nu = nn - 3.0;
    const boost::math::chi_squared chi(nu);
    const boost::math::beta_distribution<double> bt(3.0, nn - 6.0);
    // Normalizations of the two proposal densities.
    const double z_norm = std::pow(pi, 0.5 * m) * std::exp(std::lgamma(0.5 * nu) - std::lgamma(nn - 2.0));
    const double t_norm = boost::math::beta(3.0, nn - 6.0);

    std::vector<double> means;
    for (int rep = 0; rep < replicates; ++rep) {
        const auto u = quad::shifted_sobol(d, points, seed + 7919ULL * static_cast<std::uint64_t>(rep));
        double acc = 0.0;
        std::vector<double> z(static_cast<std::size_t>(m));
        for (std::size_t k = 0; k < points; ++k) {
            const double* row = u.data() + k * static_cast<std::size_t>(d);
            const double w = boost::math::quantile(chi, row[m]);
            const double x = boost::math::quantile(bt, row[m + 1]);
            const double t = x / (1.0 - x);
            const double a = 1.0 + t;
            double g2 = 0.0, z2 = 0.0;
            for (int i = 0; i < m; ++i) {
                const double g = quad::normal_quantile(row[i]);
                g2 += g * g;
                z[static_cast<std::size_t>(i)] = a * g / std::sqrt(w);
                z2 += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
            }
            const double u2 = g2 / w;
            // integrand at the sampled n-dimensional point
            const double f = t * t * z2 * z2 * std::pow(a * a + z2, -static_cast<double>(nn));
            // proposal density: beta-prime in t, scaled Student-t in z
            const double q_t = t * t * std::pow(a, -nu) / t_norm;
            const double q_z = std::pow(1.0 + u2, -(nn - 2.0)) / z_norm * std::pow(a, -static_cast<double>(m));
            acc += f / (q_t * q_z);
        }
        means.push_back(acc / static_cast<double>(points));
    }
    McEstimate e;
    e.replicates = replicates;
    e.points_per_replicate = points;
    double s = 0.0;
    for (double v : means) s += v;
    e.value = s / replicates;
    double ss = 0.0;
    for (double v : means) ss += (v - e.value) * (v - e.value);
    e.std_error = std::sqrt(ss / (replicates - 1) / replicates);
    return e;
}

double const_A(Dimension n) {
    const int nn = n.value();
    const auto i1 = i1_closed(n);
    return 0.5 * grad_sq_closed(n) - (nn - 2.0) * (nn - 2.0) / (2.0 * (nn - 1)) * i1;
}

double const_C(Dimension n) {
    const int nn = n.value();
    return std::pow(nn - 2.0, 3) / (4.0 * (nn - 1)) * i1_closed(n);
}

double b_log_coefficient(Dimension n) {
    const int nn = n.value();
    return -std::pow(nn - 2.0, 3) / (16.0 * (nn - 1)) * i1_closed(n);
}

double const_B(Dimension n, double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
    if (eps == 0.0) return 0.0;
    const int nn = n.value();
    const double i1 = i1_closed(n);
    const double i2 = i2_closed(n);
    const double lin = std::pow(nn - 2.0, 3) / (2.0 * (nn - 1)) * i1 - (nn - 2.0) * (nn - 2.0) / (2.0 * (nn - 1)) * i2;
    return eps * lin + eps * std::abs(std::log(eps)) * b_log_coefficient(n);
}

double BCoefficientCheck::rel_gap() const {
    return std::abs(recomputed - stated) / std::max(std::abs(stated), 1e-300);
}

BCoefficientCheck b_coefficient_check(Dimension n) {
    const int nn = n.value();
    // G(eps; L) = delta^{-eps(n-2)/2} with L = ln(delta). Its eps-derivative
    // at eps = 0 is the first Taylor coefficient; with ln(delta) = ln(lambda)
    // + ln(eps)/4 the part proportional to ln(eps) is a quarter of it.
    const auto g = [nn](double e, double l) { return std::exp(-e * 0.5 * (nn - 2) * l); };
    const double h = 1e-6;
    const double d_eps = (g(h, 1.0) - g(-h, 1.0)) / (2.0 * h);
    BCoefficientCheck c;
    // coefficient of eps ln(eps) is d_eps/4; of eps|ln eps| its negative
    c.taylor_factor = -0.25 * d_eps;
    const double pre = (nn - 2.0) * (nn - 2.0) / (2.0 * (nn - 1)) * i1_closed(n);
    c.recomputed = -c.taylor_factor * pre;
    c.stated = b_log_coefficient(n);
    c.variant_sixth = -(nn - 2.0) / 6.0 * pre;
    return c;
}

PhiValue phi(const CurvatureData& curv, const CorrectorSolution& sol) {
    if (curv.n != sol.n || curvature_hash(curv) != sol.curvature_hash) {
        throw std::invalid_argument("corrector solution was computed for different curvature data");
    }
    const Dimension dim(curv.n);
    const int nn = dim.value();
    const auto props = check_properties(sol);
    PhiValue p;
    p.half_v_lap_v = 0.5 * props.v_lap_v;
    p.v_lap_v_boundary = props.v_lap_v_boundary;
    const double w2 = weyl_norm_sq(curv);
    const double r2 = rnn_norm_sq(curv);
    p.weyl_term = w2 == 0.0 ? 0.0 : -(nn - 2.0) / (96.0 * (nn - 1)) * w2 * i3_closed(dim);
    // (n-2)(n-8) is an exact integer; at n = 8 the term is exactly zero.
    const int factor = (nn - 2) * (nn - 8);
    p.normal_term = (factor == 0 || r2 == 0.0)
                        ? 0.0
                        : -static_cast<double>(factor) / (2.0 * (nn * nn - 1.0)) * r2 * i4_closed(dim);
    p.value = p.half_v_lap_v + p.weyl_term + p.normal_term;
    return p;
}

double reduced_energy(double lambda, double eps, double phi_val, Dimension n) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double l2 = lambda * lambda;
    return const_A(n) + const_B(n, eps) + eps * l2 * l2 * phi_val + const_C(n) * eps * std::log(lambda);
}

double reduced_energy_dlambda(double lambda, double eps, double phi_val, Dimension n) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    return eps * (4.0 * lambda * lambda * lambda * phi_val + const_C(n) / lambda);
}

namespace {

// Golden-section maximization of g(l) = phi l^4 + c ln l. Points are compared
// through the exactly rearranged difference g(b) - g(a), which keeps full
// relative precision where the function is flat.
double golden_max(double phi_val, double c, double a, double b) {
    auto diff = [&](double x, double y) {  // g(y) - g(x)
        const double dxy = y - x;
        return phi_val * dxy * (y + x) * (y * y + x * x) + c * std::log1p(dxy / x);
    };
    const double inv = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = a, hi = b;
    double x1 = hi - inv * (hi - lo), x2 = lo + inv * (hi - lo);
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        if (diff(x1, x2) > 0.0) {  // g(x2) > g(x1)
            lo = x1;
            x1 = x2;
            x2 = lo + inv * (hi - lo);
        } else {
            hi = x2;
            x2 = x1;
            x1 = hi - inv * (hi - lo);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Maximizer maximize_with(double phi_val, double c_const, double a, double b) {
    if (!(phi_val < 0.0)) throw std::domain_error("phi >= 0: the reduced energy has no interior maximum");
    if (!(a > 0.0 && b > a)) throw std::invalid_argument("need 0 < a < b");
    if (!(c_const > 0.0)) throw std::invalid_argument("C must be positive");
    Maximizer mx;
    mx.closed_form = std::pow(c_const / (4.0 * std::abs(phi_val)), 0.25);
    mx.golden = golden_max(phi_val, c_const, a, b);
    if (mx.closed_form >= a && mx.closed_form <= b) {
        mx.lambda = mx.closed_form;
        mx.interior = true;
    } else {
        // increasing before the closed-form point and decreasing after it
        mx.lambda = mx.closed_form < a ? a : b;
        mx.interior = false;
    }
    mx.golden_rel_gap = std::abs(mx.golden - mx.lambda) / mx.lambda;
    return mx;
}

Maximizer maximize(double phi_val, Dimension n, double a, double b) {
    return maximize_with(phi_val, const_C(n), a, b);
}

std::vector<LandscapeSample> landscape(double phi_val, double eps, Dimension n, double a, double b, int points) {
    if (points < 2 || !(a > 0.0 && b > a)) throw std::invalid_argument("invalid landscape request");
    std::vector<LandscapeSample> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        const double l = a + (b - a) * k / (points - 1);
        out.push_back({l, reduced_energy(l, eps, phi_val, n), reduced_energy_dlambda(l, eps, phi_val, n)});
    }
    return out;
}

BlowUpProfile::BlowUpProfile(double delta, const CorrectorSolution& sol) : delta_(delta), sol_(&sol) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
}

double BlowUpProfile::operator()(const HalfSpacePoint& y) const {
    const Dimension dim(sol_->n);
    return eval_bubble_family(y, delta_, dim) + delta_ * delta_ * eval_corrector_family(*sol_, delta_, y);
}

BlowUpProfile::Extremes BlowUpProfile::sample_extremes(int radial, int angular, double extent) const {
    if (radial < 2 || angular < 2 || !(extent > 0.0)) throw std::invalid_argument("invalid sampling request");
    const int m = sol_->n - 1;
    std::vector<std::vector<double>> dirs;
    for (const auto& s : sol_->sectors) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.tensor);
        for (int c = 0; c < m; ++c) {
            std::vector<double> d(static_cast<std::size_t>(m));
            for (int a = 0; a < m; ++a) d[static_cast<std::size_t>(a)] = es.eigenvectors()(a, c);
            dirs.push_back(std::move(d));
        }
    }
    if (dirs.empty()) {
        std::vector<double> d(static_cast<std::size_t>(m), 0.0);
        d[0] = 1.0;
        dirs.push_back(d);
    }
    Extremes ex;
    ex.min = INFINITY;
    ex.max = -INFINITY;
    for (int i = 0; i < radial; ++i) {
        // geometric radii in scaled units, plus the origin
        const double rho = i == 0 ? 0.0 : extent * std::pow(1e-3, 1.0 - static_cast<double>(i) / (radial - 1));
        for (int a = 0; a < angular; ++a) {
            const double th = 0.5 * std::numbers::pi * a / (angular - 1);
            for (const auto& d : dirs) {
                std::vector<double> z(d);
                for (double& v : z) v *= delta_ * rho * std::sin(th);
                const HalfSpacePoint y(std::move(z), delta_ * rho * std::cos(th));
                bool cov = true;
                const double u = eval_bubble_family(y, delta_, Dimension(sol_->n));
                const double v = eval_corrector_family(*sol_, delta_, y, &cov);
                const double val = u + delta_ * delta_ * v;
                if (!cov) ++ex.uncovered;
                ex.min = std::min(ex.min, val);
                ex.max = std::max(ex.max, val);
                ++ex.samples;
            }
        }
    }
    return ex;
}

BlowUpProfile assemble_profile(double delta, const CurvatureData& curv, const CorrectorSolution& sol) {
    if (curv.n != sol.n || curvature_hash(curv) != sol.curvature_hash) {
        throw std::invalid_argument("corrector solution was computed for different curvature data");
    }
    return BlowUpProfile(delta, sol);
}

}  // namespace yamabe
