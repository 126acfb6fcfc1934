#include "icudp/stats.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "icudp/errors.hpp"

namespace icudp {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw NumericError("mean of empty range");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size());
}

double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw NumericError("percentile of empty range");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    double h = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double percentile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    return percentile_sorted(xs, p);
}

double median_sorted(std::span<const double> sorted) {
    return percentile_sorted(sorted, 0.5);
}

double r_squared(std::span<const double> observed,
                 std::span<const double> expected) {
    assert(observed.size() == expected.size());
    if (observed.empty()) throw NumericError("r_squared of empty range");
    double m = mean(observed);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double r = observed[i] - expected[i];
        double d = observed[i] - m;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

LineFit weighted_line_fit(std::span<const double> xs,
                          std::span<const double> ys,
                          std::span<const double> ws) {
    assert(xs.size() == ys.size() && xs.size() == ws.size());
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
        swy += ws[i] * ys[i];
        swxx += ws[i] * xs[i] * xs[i];
        swxy += ws[i] * xs[i] * ys[i];
    }
    if (sw <= 0.0) throw NumericError("weighted_line_fit: no weight");
    double denom = sw * swxx - swx * swx;
    if (denom == 0.0) return LineFit{swy / sw, 0.0};
    LineFit fit;
    fit.slope = (sw * swxy - swx * swy) / denom;
    fit.intercept = (swy - fit.slope * swx) / sw;
    return fit;
}

}  // namespace icudp
