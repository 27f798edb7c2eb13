#include "yamabe/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "yamabe/quadrature.hpp"

namespace yamabe {

namespace {

// Remainder integrals may reach out to this fraction of the corrector grid.
constexpr double kCoverageFraction = 3.0;

// The normalized boundary exponent (n/(n-2)) of the critical nonlinearity.
double critical_power(int n) { return static_cast<double>(n) / (n - 2); }

// (1+s)^a - 1 - a s without cancellation for small s; (1+s)^+ beyond -1.
double second_order_rest(double a, double s) {
    if (std::abs(s) < 0.05) {
        double term = a * (a - 1.0) / 2.0 * s * s;
        double acc = term;
        for (int k = 3; k < 40; ++k) {
            term *= (a - k + 1.0) / k * s;
            acc += term;
            if (std::abs(term) < 1e-18 * std::abs(acc)) break;
        }
        return acc;
    }
    const double base = std::max(1.0 + s, 0.0);
    return std::pow(base, a) - 1.0 - a * s;
}

// Radial nodes in s = ln(1 + rho) whose panel boundaries include every
// truncation radius, so that each (delta) integral is an exact sub-sum.
struct RadialNodes {
    std::vector<double> rho, weight;  // weight includes d rho / d s, not rho^{d-1}
};

RadialNodes radial_nodes(const std::vector<double>& cut_s, double width, int order) {
    std::vector<double> br(cut_s);
    br.push_back(0.0);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }), br.end());
    RadialNodes out;
    for (std::size_t j = 0; j + 1 < br.size(); ++j) {
        const double len = br[j + 1] - br[j];
        const int panels = std::max(1, static_cast<int>(std::ceil(len / width)));
        const auto rule = quad::composite(br[j], br[j + 1], panels, order);
        for (std::size_t k = 0; k < rule.x.size(); ++k) {
            const double e = std::exp(rule.x[k]);
            out.rho.push_back(e - 1.0);
            out.weight.push_back(rule.w[k] * e);
        }
    }
    return out;
}

struct Accumulator {
    double total = 0.0;
    double outer = 0.0;
    void add(double v, bool is_outer) {
        total += v;
        if (is_outer) outer += v;
    }
    double share() const { return total > 0.0 ? outer / total : 0.0; }
};

void check_inputs(const CurvatureData& curv, const CorrectorSolution& sol, std::span<const double> deltas,
                  std::span<const double> eps, const RemainderOptions& opt) {
    if (curv.n != sol.n || curvature_hash(curv) != sol.curvature_hash) {
        throw std::invalid_argument("corrector solution was computed for different curvature data");
    }
    if (deltas.size() != eps.size() || deltas.empty()) throw std::invalid_argument("delta and eps lists must match");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (!(deltas[k] > 0.0) || !(eps[k] > 0.0)) throw std::invalid_argument("delta and eps must be positive");
        // Near the Dirichlet wall the discrete corrector loses its relative
        // accuracy, which the boundary mismatch amplifies through U^{a-2} v^2.
        const double reach = opt.cutoff_radius / deltas[k];
        if (reach > std::min(sol.grid.r_max(), sol.grid.t_max()) / kCoverageFraction) {
            throw std::invalid_argument("corrector grid too small for cutoff_radius / delta");
        }
    }
    if (!(opt.cutoff_radius > 0.0) || opt.radial_order < 1 || !(opt.panel_width > 0.0) || opt.polar_nodes < 1) {
        throw std::invalid_argument("invalid remainder quadrature options");
    }
}

}  // namespace

double s_eps(Dimension n, double eps) {
    if (!(eps >= 0.0)) throw std::domain_error("eps must be nonnegative");
    const int nn = n.value();
    return 2.0 * (nn - 1) / (nn - 2) + nn * eps;
}

double boundary_exponent(Dimension n, double eps) {
    if (!(eps >= 0.0)) throw std::domain_error("eps must be nonnegative");
    const int nn = n.value();
    return (2.0 * (nn - 1) + nn * (nn - 2.0) * eps) / (nn + (nn - 2.0) * eps);
}

NittkaExponents nittka_exponents(Dimension n, double eps) {
    const int nn = n.value();
    NittkaExponents e;
    e.s = s_eps(n, eps);
    const double kappa = (nn - 2.0) / (nn - 1.0) * eps;
    e.q = (2.0 * nn + nn * nn * kappa) / (nn + 2.0 + 2.0 * nn * kappa);
    const double lo = 2.0 * nn / (nn + 2.0);
    if (e.q < lo || e.q >= 0.5 * nn) throw std::domain_error("integrability exponent outside [2n/(n+2), n/2)");
    e.boundary = boundary_exponent(n, eps);
    e.r = e.boundary - (nn - 1.0) * e.q / (nn - e.q);
    e.interior = e.q + e.r;
    return e;
}

double scalar_curvature_model(const CurvatureData& curv, const HalfSpacePoint& y, double transverse_c) {
    const double alpha = -weyl_norm_sq(curv) / (12.0 * (curv.n - 1));
    return alpha * y.z_norm_sq() + transverse_c * y.t * y.t;
}

double RemainderQuantities::composite() const { return std::max({q_h, q_delta, q_bdry, q_pert}); }

std::vector<RemainderQuantities> remainder_batch(const CurvatureData& curv, const CorrectorSolution& sol,
                                                 std::span<const double> deltas, std::span<const double> eps,
                                                 const RemainderOptions& opt) {
    check_inputs(curv, sol, deltas, eps, opt);
    const Dimension dim(curv.n);
    const int nn = dim.value(), m = dim.tangential();
    const std::size_t cases = deltas.size();
    const double a = critical_power(nn);
    const double a_coef = (nn - 2.0) / (4.0 * (nn - 1.0));

    std::vector<double> cut_x(cases), cut_s(cases), p_int(cases), p_bd(cases);
    for (std::size_t k = 0; k < cases; ++k) {
        cut_x[k] = opt.cutoff_radius / deltas[k];
        cut_s[k] = std::log1p(cut_x[k]);
        const auto ex = nittka_exponents(dim, eps[k]);
        p_int[k] = ex.interior;
        p_bd[k] = ex.boundary;
    }
    const RadialNodes rad = radial_nodes(cut_s, opt.panel_width, opt.radial_order);

    // ---- interior: x = rho (sin(theta) sigma, cos(theta)) ----
    std::vector<Accumulator> acc_int(cases);
    {
        const auto sphere = quad::balanced_sphere_points(m, opt.sphere_base, opt.sphere_seed);
        const double sigma_w = sphere_area(m) / static_cast<double>(sphere.size());
        const auto polar = quad::composite(0.0, 0.5 * std::numbers::pi, 1, opt.polar_nodes);
        std::vector<double> z(static_cast<std::size_t>(m));
        for (std::size_t ip = 0; ip < polar.x.size(); ++ip) {
            const double th = polar.x[ip];
            const double st = std::sin(th), ct = std::cos(th);
            const double dir_w = polar.w[ip] * std::pow(st, m - 1) * sigma_w;
            for (std::size_t is = 0; is < sphere.size(); ++is) {
                const double* sg = sphere.point(is);
                for (int c = 0; c < m; ++c) z[static_cast<std::size_t>(c)] = st * sg[c];
                // The metric pieces are homogeneous, so one evaluation per direction suffices.
                const MetricTerms unit = metric_terms(curv, HalfSpacePoint(z, ct));
                const double r_unit = scalar_curvature_model(curv, HalfSpacePoint(z, ct), opt.transverse_c);
                for (std::size_t ir = 0; ir < rad.rho.size(); ++ir) {
                    const double rho = rad.rho[ir];
                    std::vector<double> zx(z);
                    for (double& c : zx) c *= rho;
                    const HalfSpacePoint x(std::move(zx), rho * ct);
                    const double u0 = eval_bubble(x, dim);
                    const SmallVec gu = bubble_gradient(x, dim);
                    const SmallMat hu = bubble_hessian(x, dim);
                    const CorrectorJet vj = corrector_jet(sol, x);

                    const double r2 = rho * rho, r3 = r2 * rho, r4 = r3 * rho;
                    double g2hv = 0.0, g3hu = 0.0, g3hv = 0.0, g4hu = 0.0, g4hv = 0.0;
                    double d2gv = 0.0, d3gu = 0.0, d3gv = 0.0, d4gu = 0.0, d4gv = 0.0;
                    for (int i = 0; i < m; ++i) {
                        for (int j = 0; j < m; ++j) {
                            g2hv += unit.g2(i, j) * vj.hess(i, j);
                            g3hu += unit.g3(i, j) * hu(i, j);
                            g3hv += unit.g3(i, j) * vj.hess(i, j);
                            g4hu += unit.g4(i, j) * hu(i, j);
                            g4hv += unit.g4(i, j) * vj.hess(i, j);
                        }
                        d2gv += unit.d2[i] * vj.grad[i];
                        d3gu += unit.d3[i] * gu[i];
                        d3gv += unit.d3[i] * vj.grad[i];
                        d4gu += unit.d4[i] * gu[i];
                        d4gv += unit.d4[i] * vj.grad[i];
                    }
                    const double atil = a_coef * r_unit * r2;
                    // The delta^2 order cancels: v solves -Delta v = g2 : D^2 U + d2 . grad U.
                    const double c3 = r3 * g3hu + r2 * d3gu;
                    const double c4 = r4 * g4hu + r3 * d4gu + r2 * g2hv + rho * d2gv - atil * u0;
                    const double c5 = r3 * g3hv + r2 * d3gv;
                    const double c6 = r4 * g4hv + r3 * d4gv - atil * vj.value;
                    const double base_w = dir_w * rad.weight[ir] * std::pow(rho, nn - 1);
                    for (std::size_t k = 0; k < cases; ++k) {
                        if (rho >= cut_x[k]) continue;
                        const double d = deltas[k];
                        const double d3 = d * d * d;
                        const double e = d3 * (c3 + d * (c4 + d * (c5 + d * c6)));
                        acc_int[k].add(base_w * std::pow(std::abs(e), p_int[k]), rho > 0.5 * cut_x[k]);
                    }
                }
            }
        }
    }

    // ---- boundary: x = (rho sigma, 0) ----
    std::vector<Accumulator> acc_h(cases), acc_b(cases), acc_p(cases);
    {
        const auto sphere = quad::balanced_sphere_points(m, opt.sphere_base + 1, opt.sphere_seed + 1);
        const double sigma_w = sphere_area(m) / static_cast<double>(sphere.size());
        std::vector<double> z(static_cast<std::size_t>(m));
        for (std::size_t is = 0; is < sphere.size(); ++is) {
            const double* sg = sphere.point(is);
            for (std::size_t ir = 0; ir < rad.rho.size(); ++ir) {
                const double rho = rad.rho[ir];
                for (int c = 0; c < m; ++c) z[static_cast<std::size_t>(c)] = rho * sg[c];
                const HalfSpacePoint x(z, 0.0);
                const double u0 = std::pow(1.0 + rho * rho, -0.5 * (nn - 2));
                const double v = eval_corrector(sol, x);
                const double base_w = sigma_w * rad.weight[ir] * std::pow(rho, m - 1);
                for (std::size_t k = 0; k < cases; ++k) {
                    if (rho >= cut_x[k]) continue;
                    const bool outer = rho > 0.5 * cut_x[k];
                    const double d = deltas[k];
                    const double u = u0 + d * d * v;
                    const double bh = d * opt.h_model.at_radius(d * rho) * u;
                    const double bb = (nn - 2.0) * std::pow(u0, a) * second_order_rest(a, d * d * v / u0);
                    double bp = 0.0;
                    if (u > 0.0) {
                        bp = (nn - 2.0) * std::pow(u, a) *
                             std::expm1(eps[k] * (std::log(u) - 0.5 * (nn - 2) * std::log(d)));
                    }
                    acc_h[k].add(base_w * std::pow(std::abs(bh), p_bd[k]), outer);
                    acc_b[k].add(base_w * std::pow(std::abs(bb), p_bd[k]), outer);
                    acc_p[k].add(base_w * std::pow(std::abs(bp), p_bd[k]), outer);
                }
            }
        }
    }

    std::vector<RemainderQuantities> out(cases);
    for (std::size_t k = 0; k < cases; ++k) {
        auto& q = out[k];
        const double d = deltas[k];
        q.delta = d;
        q.eps = eps[k];
        q.p_interior = p_int[k];
        q.p_boundary = p_bd[k];
        // Changing variables y = delta x leaves these powers of delta in front.
        const double f_int = std::pow(d, nn / p_int[k] - 0.5 * (nn + 2));
        const double f_bd = std::pow(d, (nn - 1) / p_bd[k] - 0.5 * nn);
        q.q_delta = f_int * std::pow(acc_int[k].total, 1.0 / p_int[k]);
        q.q_h = f_bd * std::pow(acc_h[k].total, 1.0 / p_bd[k]);
        q.q_bdry = f_bd * std::pow(acc_b[k].total, 1.0 / p_bd[k]);
        q.q_pert = f_bd * std::pow(acc_p[k].total, 1.0 / p_bd[k]);
        q.outer_share_delta = acc_int[k].share();
        q.outer_share_h = acc_h[k].share();
        q.h_power_integral = acc_h[k].total;
    }
    return out;
}

RemainderQuantities remainder_quantities(const CurvatureData& curv, const CorrectorSolution& sol, double delta,
                                         double eps, const RemainderOptions& opt) {
    const double d[1] = {delta}, e[1] = {eps};
    return remainder_batch(curv, sol, d, e, opt).front();
}

McEstimate qmc_h_power_integral(const CorrectorSolution& sol, double delta, double eps, const RemainderOptions& opt,
                                std::size_t points, int replicates, std::uint64_t seed) {
    if (points == 0 || replicates < 2) throw std::invalid_argument("QMC needs points > 0 and >= 2 replicates");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const Dimension dim(sol.n);
    const int m = dim.tangential();
    const double p = boundary_exponent(dim, eps);
    const double cut_s = std::log1p(opt.cutoff_radius / delta);
    const double area = sphere_area(m);
    std::vector<double> means;
    std::vector<double> z(static_cast<std::size_t>(m));
    for (int rep = 0; rep < replicates; ++rep) {
        const auto u = quad::shifted_sobol(m + 1, points, seed + 104729ULL * static_cast<std::uint64_t>(rep));
        double acc = 0.0;
        for (std::size_t k = 0; k < points; ++k) {
            const double* row = u.data() + k * static_cast<std::size_t>(m + 1);
            const double s = row[0] * cut_s;
            const double rho = std::expm1(s);
            double g2 = 0.0;
            for (int c = 0; c < m; ++c) {
                const double g = quad::normal_quantile(row[c + 1]);
                z[static_cast<std::size_t>(c)] = g;
                g2 += g * g;
            }
            const double scale = rho / std::sqrt(g2);
            for (double& c : z) c *= scale;
            const HalfSpacePoint x(z, 0.0);
            const double u0 = std::pow(1.0 + rho * rho, -0.5 * (sol.n - 2));
            const double v = eval_corrector(sol, x);
            const double bh = delta * opt.h_model.at_radius(delta * rho) * (u0 + delta * delta * v);
            acc += std::pow(std::abs(bh), p) * cut_s * (rho + 1.0) * std::pow(rho, m - 1) * area;
        }
        means.push_back(acc / static_cast<double>(points));
    }
    McEstimate e;
    e.replicates = replicates;
    e.points_per_replicate = points;
    for (double v : means) e.value += v;
    e.value /= replicates;
    double ss = 0.0;
    for (double v : means) ss += (v - e.value) * (v - e.value);
    e.std_error = std::sqrt(ss / (replicates - 1) / replicates);
    return e;
}

std::vector<double> geometric_grid(double eps_max, double eps_min, int points) {
    if (!(eps_max > eps_min && eps_min > 0.0) || points < 2) throw std::invalid_argument("invalid geometric grid");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double lmax = std::log(eps_max), lmin = std::log(eps_min);
    for (int k = 0; k < points; ++k) g[static_cast<std::size_t>(k)] = std::exp(lmax + (lmin - lmax) * k / (points - 1));
    g.front() = eps_max;
    g.back() = eps_min;
    return g;
}

ScalingStudy scaling_study(const CurvatureData& curv, const CorrectorSolution& sol, double lambda,
                           std::span<const double> eps_grid, const RemainderOptions& opt, double significance) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (eps_grid.size() < 4) throw std::invalid_argument("scaling study needs at least four eps values");
    for (std::size_t k = 1; k < eps_grid.size(); ++k) {
        if (!(eps_grid[k] < eps_grid[k - 1])) throw std::invalid_argument("eps grid must be strictly decreasing");
    }
    if (!(eps_grid.back() > 0.0) || std::log10(eps_grid.front() / eps_grid.back()) < 3.0 - 1e-12) {
        throw std::invalid_argument("eps grid must span at least three decades");
    }
    ScalingStudy st;
    st.n = curv.n;
    st.lambda = lambda;
    st.significance = significance;
    st.eps.assign(eps_grid.begin(), eps_grid.end());
    for (double e : st.eps) st.delta.push_back(lambda * std::pow(e, 0.25));
    st.rows = remainder_batch(curv, sol, st.delta, st.eps, opt);

    std::vector<double> le, lll, yh, yd, yb, yp, yc;
    for (const auto& r : st.rows) {
        le.push_back(std::log(r.eps));
        lll.push_back(std::log(std::abs(std::log(r.eps))));
        // A zero piece (e.g. c_h = 0) is kept out of the log fits by a floor.
        auto lg = [](double v) { return std::log(std::max(v, 1e-300)); };
        yh.push_back(lg(r.q_h));
        yd.push_back(lg(r.q_delta));
        yb.push_back(lg(r.q_bdry));
        yp.push_back(lg(r.q_pert));
        yc.push_back(lg(r.composite()));
    }
    st.fit_h = stats::fit_line(le, yh);
    st.fit_delta = stats::fit_line(le, yd);
    st.fit_bdry = stats::fit_line(le, yb);
    st.fit_pert = stats::fit_line(le, yp);
    st.fit_composite = stats::fit_line(le, yc);
    st.log_fit = stats::fit_two(le, lll, yc);
    st.log_test = stats::nested_f_test(st.fit_composite.rss, 2, st.log_fit.rss, 3, static_cast<int>(le.size()));
    st.log_correction = st.log_test.p_value < significance;
    return st;
}

GapCheck verify_gap(double eps, double phi_norm, Dimension /*n*/, double c) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
    if (!(phi_norm >= 0.0)) throw std::invalid_argument("phi norm must be nonnegative");
    GapCheck g;
    g.eps = eps;
    g.phi_norm = phi_norm;
    g.bound = phi_norm * phi_norm + c * (eps * std::abs(std::log(eps)) + std::sqrt(eps)) * phi_norm;
    g.ratio = g.bound / eps;
    g.margin = 1.0 - g.ratio;
    g.ok = g.ratio < 1.0;
    return g;
}

double predicted_phi_norm(Dimension n, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double base = std::pow(eps, 0.75);
    return n.value() == 8 ? base * (1.0 + std::abs(std::log(eps))) : base;
}

GapSequence verify_gap_sequence(std::span<const double> eps, std::span<const double> phi_norms, Dimension n,
                                double c) {
    if (eps.size() != phi_norms.size() || eps.size() < 2) throw std::invalid_argument("need matching sequences");
    GapSequence s;
    s.strictly_decreasing = true;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (k > 0 && !(eps[k] < eps[k - 1])) throw std::invalid_argument("eps sequence must decrease");
        s.points.push_back(verify_gap(eps[k], phi_norms[k], n, c));
        if (k > 0 && !(s.points[k].ratio < s.points[k - 1].ratio)) s.strictly_decreasing = false;
    }
    return s;
}

}  // namespace yamabe
