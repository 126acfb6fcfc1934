#pragma once

#include <span>
#include <vector>

namespace icudp {

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // population variance

/// Empirical quantile with linear interpolation between order statistics:
/// rank h = p*(n-1), result = v[floor(h)] + frac(h)*(v[floor(h)+1]-v[floor(h)]).
/// `sorted` must be ascending and non-empty; p in [0, 1].
double percentile_sorted(std::span<const double> sorted, double p);

/// Convenience: copies, sorts, then interpolates.
double percentile(std::vector<double> xs, double p);

double median_sorted(std::span<const double> sorted);

/// Coefficient of determination between observed and model-expected values:
/// 1 - SS_res/SS_tot with SS_tot about the observed mean. Degenerate SS_tot=0
/// returns 1 when residuals are zero too, otherwise 0.
double r_squared(std::span<const double> observed,
                 std::span<const double> expected);

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

/// Weighted least squares fit of y = intercept + slope*x.
LineFit weighted_line_fit(std::span<const double> xs,
                          std::span<const double> ys,
                          std::span<const double> ws);

}  // namespace icudp
