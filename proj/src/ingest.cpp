#include "icudp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icudp/stats.hpp"

namespace icudp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(AggMode m) {
    switch (m) {
        case AggMode::Mean: return "MEAN";
        case AggMode::Sum: return "SUM";
        case AggMode::ZeroFill: return "ZERO_FILL";
    }
    return "MEAN";
}

AggMode agg_mode_from_string(const std::string& s) {
    if (s == "MEAN") return AggMode::Mean;
    if (s == "SUM") return AggMode::Sum;
    if (s == "ZERO_FILL") return AggMode::ZeroFill;
    throw DataError("unknown aggregation mode '" + s + "'");
}

int FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

bool passes_inclusion(const RawEventStream& stream, const FeatureSchema& schema,
                      double min_fraction) {
    int total = 0;
    std::vector<bool> seen(schema.names.size(), false);
    for (const auto& ev : stream.events) {
        int f = schema.index_of(ev.feature);
        if (f >= 0) seen[f] = true;
    }
    int measured = 0;
    for (int f = 0; f < schema.size(); ++f) {
        if (schema.modes[f] == AggMode::ZeroFill) continue;  // always imputable
        ++total;
        if (seen[f]) ++measured;
    }
    if (total == 0) return true;
    return static_cast<double>(measured) / total >= min_fraction;
}

PeriodFeatureMatrix bin_and_aggregate(const RawEventStream& stream,
                                      const FeatureSchema& schema,
                                      double period_hours) {
    if (period_hours <= 0.0) throw DataError("period_hours must be positive");
    if (stream.events.empty()) throw EmptyStreamError(stream.stay_id);

    double t_max = 0.0;
    for (const auto& ev : stream.events) {
        if (!(ev.timestamp_hours >= 0.0) || !std::isfinite(ev.timestamp_hours))
            throw DataError("stay '" + stream.stay_id +
                            "': timestamps must be non-negative and finite");
        t_max = std::max(t_max, ev.timestamp_hours);
    }
    int n_periods = static_cast<int>(std::floor(t_max / period_hours)) + 1;
    int n_features = schema.size();

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_periods, n_features);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n_periods, n_features);

    for (const auto& ev : stream.events) {
        int f = schema.index_of(ev.feature);
        if (f < 0) throw SchemaMismatchError(ev.feature);
        int t = std::min(
            n_periods - 1,
            static_cast<int>(std::floor(ev.timestamp_hours / period_hours)));
        sums(t, f) += ev.value;
        counts(t, f) += 1;
    }

    PeriodFeatureMatrix out;
    out.stay_id = stream.stay_id;
    out.period_hours = period_hours;
    out.values.resize(n_periods, n_features);
    out.missing.resize(n_periods, n_features);
    for (int t = 0; t < n_periods; ++t) {
        for (int f = 0; f < n_features; ++f) {
            int c = counts(t, f);
            switch (schema.modes[f]) {
                case AggMode::Mean:
                    out.values(t, f) = c > 0 ? sums(t, f) / c : kNaN;
                    out.missing(t, f) = c == 0;
                    break;
                case AggMode::Sum:
                    out.values(t, f) = c > 0 ? sums(t, f) : kNaN;
                    out.missing(t, f) = c == 0;
                    break;
                case AggMode::ZeroFill:
                    out.values(t, f) = c > 0 ? sums(t, f) : 0.0;
                    out.missing(t, f) = false;
                    break;
            }
        }
    }
    return out;
}

PeriodFeatureMatrix carry_forward_impute(PeriodFeatureMatrix m) {
    for (int f = 0; f < m.features(); ++f) {
        bool have_prior = false;
        double prior = 0.0;
        for (int t = 0; t < m.periods(); ++t) {
            if (!m.missing(t, f)) {
                have_prior = true;
                prior = m.values(t, f);
            } else if (have_prior) {
                m.values(t, f) = prior;
                m.missing(t, f) = false;
            }
        }
    }
    return m;
}

FeaturePools fit_feature_pools(const std::vector<PeriodFeatureMatrix>& binned,
                               double lower_q, double upper_q) {
    FeaturePools pools;
    pools.lower_q = lower_q;
    pools.upper_q = upper_q;
    if (binned.empty()) return pools;
    int n_features = binned.front().features();
    pools.sorted_values.resize(n_features);
    pools.medians.assign(n_features, 0.0);
    for (const auto& m : binned) {
        if (m.features() != n_features)
            throw DataError("inconsistent feature counts across stays");
        for (int f = 0; f < n_features; ++f)
            for (int t = 0; t < m.periods(); ++t)
                if (!m.missing(t, f))
                    pools.sorted_values[f].push_back(m.values(t, f));
    }
    for (int f = 0; f < n_features; ++f) {
        auto& vals = pools.sorted_values[f];
        std::sort(vals.begin(), vals.end());
        if (!vals.empty()) pools.medians[f] = median_sorted(vals);
    }
    return pools;
}

PeriodFeatureMatrix cap_outliers(const FeaturePools& pools,
                                 PeriodFeatureMatrix m,
                                 std::vector<std::string>* warnings) {
    for (int f = 0; f < m.features(); ++f) {
        if (static_cast<std::size_t>(f) >= pools.sorted_values.size() ||
            pools.sorted_values[f].size() < 2) {
            if (warnings)
                warnings->push_back("feature column " + std::to_string(f) +
                                    ": <2 pooled observations, caps skipped");
            continue;
        }
        const auto& pool = pools.sorted_values[f];
        double lo = percentile_sorted(pool, pools.lower_q);
        double hi = percentile_sorted(pool, pools.upper_q);
        for (int t = 0; t < m.periods(); ++t) {
            if (m.missing(t, f)) continue;
            m.values(t, f) = std::clamp(m.values(t, f), lo, hi);
        }
    }
    return m;
}

PeriodFeatureMatrix regression_impute(const FeaturePools& pools,
                                      PeriodFeatureMatrix m,
                                      const ImputeOptions& opts) {
    if (!m.any_missing()) return m;
    const int n = m.periods();
    const int nf = m.features();
    if (static_cast<int>(pools.medians.size()) != nf)
        throw DataError("pools do not match matrix feature count");

    // Rows where each feature was actually observed; these train the fits.
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed = !m.missing;

    // Median initialization; single-row matrices stop here.
    for (int f = 0; f < nf; ++f)
        for (int t = 0; t < n; ++t)
            if (m.missing(t, f)) m.values(t, f) = pools.medians[f];
    m.missing.setConstant(false);
    if (n == 1 || nf < 2) return m;

    std::vector<int> incomplete;
    for (int f = 0; f < nf; ++f) {
        long n_obs = observed.col(f).count();
        if (n_obs > 0 && n_obs < n) incomplete.push_back(f);
        // all-missing columns stay at the training median
    }
    if (incomplete.empty()) return m;

    for (int round = 0; round < opts.rounds; ++round) {
        for (int f : incomplete) {
            std::vector<int> train_rows, fill_rows;
            for (int t = 0; t < n; ++t)
                (observed(t, f) ? train_rows : fill_rows).push_back(t);

            const int p = nf - 1;
            Eigen::MatrixXd x(train_rows.size(), p);
            Eigen::VectorXd y(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i) {
                int t = train_rows[i];
                int c = 0;
                for (int g = 0; g < nf; ++g)
                    if (g != f) x(i, c++) = m.values(t, g);
                y(i) = m.values(t, f);
            }
            // Ridge on centered data; the intercept is not penalized.
            Eigen::RowVectorXd x_mean = x.colwise().mean();
            double y_mean = y.mean();
            Eigen::MatrixXd xc = x.rowwise() - x_mean;
            Eigen::VectorXd yc = y.array() - y_mean;
            Eigen::MatrixXd gram = xc.transpose() * xc;
            gram.diagonal().array() += opts.ridge_lambda;
            Eigen::VectorXd beta = gram.ldlt().solve(xc.transpose() * yc);

            for (int t : fill_rows) {
                double pred = y_mean;
                int c = 0;
                for (int g = 0; g < nf; ++g) {
                    if (g == f) continue;
                    pred += beta(c) * (m.values(t, g) - x_mean(c));
                    ++c;
                }
                m.values(t, f) = pred;
            }
        }
    }
    return m;
}

PeriodFeatureMatrix preprocess_stay(const RawEventStream& stream,
                                    const FeatureSchema& schema,
                                    const FeaturePools& pools,
                                    double period_hours,
                                    const ImputeOptions& opts,
                                    std::vector<std::string>* warnings) {
    auto m = bin_and_aggregate(stream, schema, period_hours);
    m = cap_outliers(pools, std::move(m), warnings);
    m = carry_forward_impute(std::move(m));
    return regression_impute(pools, std::move(m), opts);
}

}  // namespace icudp
