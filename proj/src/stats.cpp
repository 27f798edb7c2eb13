#include "yamabe/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace yamabe::stats {

double LinearFit::slope_ci(double level) const {
    if (dof < 1) return INFINITY;
    const boost::math::students_t dist(dof);
    return boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - level))) * slope_se;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t k = x.size();
    if (k != y.size() || k < 2) throw std::invalid_argument("fit_line needs matching samples, at least two");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < k; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.rss += r * r;
    }
    f.dof = static_cast<int>(k) - 2;
    f.slope_se = f.dof > 0 ? std::sqrt(f.rss / f.dof / sxx) : INFINITY;
    return f;
}

TwoTermFit fit_two(const std::vector<double>& x, const std::vector<double>& c,
                   const std::vector<double>& y) {
    const auto k = static_cast<Eigen::Index>(x.size());
    if (c.size() != x.size() || y.size() != x.size() || k < 3) {
        throw std::invalid_argument("fit_two needs matching samples, at least three");
    }
    Eigen::MatrixXd a(k, 3);
    Eigen::VectorXd b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = x[static_cast<std::size_t>(i)];
        a(i, 2) = c[static_cast<std::size_t>(i)];
        b[i] = y[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
    TwoTermFit f;
    f.b0 = beta[0];
    f.b1 = beta[1];
    f.b2 = beta[2];
    f.rss = (a * beta - b).squaredNorm();
    f.dof = static_cast<int>(k) - 3;
    return f;
}

FTest nested_f_test(double rss_reduced, int params_reduced, double rss_full, int params_full,
                    int observations) {
    const int df1 = params_full - params_reduced;
    const int df2 = observations - params_full;
    if (df1 < 1 || df2 < 1) throw std::invalid_argument("nested F test: not enough degrees of freedom");
    FTest t;
    if (rss_full <= 0.0) {
        t.statistic = INFINITY;
        t.p_value = 0.0;
        return t;
    }
    t.statistic = ((rss_reduced - rss_full) / df1) / (rss_full / df2);
    if (t.statistic <= 0.0) return t;
    const boost::math::fisher_f dist(df1, df2);
    t.p_value = boost::math::cdf(boost::math::complement(dist, t.statistic));
    return t;
}

}  // namespace yamabe::stats
