#pragma once

// Least-squares fits used for exponent estimation.

#include <vector>

namespace yamabe::stats {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;  ///< standard error of the slope
    double rss = 0.0;       ///< residual sum of squares
    int dof = 0;            ///< residual degrees of freedom
    /// Half-width of the two-sided Student-t confidence interval of the slope.
    double slope_ci(double level = 0.95) const;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// y = b0 + b1 x + b2 c, where c is an extra regressor (e.g. log|log eps|).
struct TwoTermFit {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double rss = 0.0;
    int dof = 0;
};

TwoTermFit fit_two(const std::vector<double>& x, const std::vector<double>& c,
                   const std::vector<double>& y);

/// Nested-model F comparison of `reduced` (p0 parameters) inside `full` (p1).
struct FTest {
    double statistic = 0.0;
    double p_value = 1.0;
};

FTest nested_f_test(double rss_reduced, int params_reduced, double rss_full, int params_full,
                    int observations);

}  // namespace yamabe::stats
