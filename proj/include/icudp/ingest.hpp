#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "icudp/errors.hpp"

namespace icudp {

enum class AggMode : std::uint8_t {
    Mean,     // vitals/labs: average within a bin
    Sum,      // e.g. urine output: add within a bin
    ZeroFill  // medications/treatments: add, absent means none administered
};

std::string to_string(AggMode m);
AggMode agg_mode_from_string(const std::string& s);

/// Ordered feature list; the order defines matrix column order.
struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<AggMode> modes;

    int size() const { return static_cast<int>(names.size()); }
    /// Index of a feature name, -1 when unknown.
    int index_of(std::string_view name) const;
};

struct RawEvent {
    double timestamp_hours = 0.0;  // since ICU admission
    std::string feature;
    double value = 0.0;
};

/// Timestamped measurements for one ICU stay, pre-binning.
struct RawEventStream {
    std::string stay_id;
    std::vector<RawEvent> events;
};

/// Per-period feature matrix for one stay. Row t covers
/// [t*period_hours, (t+1)*period_hours). Missing cells hold NaN until imputed.
struct PeriodFeatureMatrix {
    std::string stay_id;
    double period_hours = 12.0;
    Eigen::MatrixXd values;  // periods x features
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;

    int periods() const { return static_cast<int>(values.rows()); }
    int features() const { return static_cast<int>(values.cols()); }
    bool any_missing() const { return missing.any(); }
};

/// Dataset-wide per-feature value pools, computed on the training split only.
/// Back the outlier caps and the imputation fallbacks.
struct FeaturePools {
    std::vector<std::vector<double>> sorted_values;  // ascending, per feature
    std::vector<double> medians;
    double lower_q = 0.001;
    double upper_q = 0.999;
};

FeaturePools fit_feature_pools(const std::vector<PeriodFeatureMatrix>& binned,
                               double lower_q = 0.001, double upper_q = 0.999);

/// Stay-level inclusion predicate: at least `min_fraction` of the non-zero-fill
/// features must have at least one measurement.
bool passes_inclusion(const RawEventStream& stream, const FeatureSchema& schema,
                      double min_fraction = 0.5);

PeriodFeatureMatrix bin_and_aggregate(const RawEventStream& stream,
                                      const FeatureSchema& schema,
                                      double period_hours = 12.0);

/// Last observation carried forward, per feature. Leading gaps stay flagged.
PeriodFeatureMatrix carry_forward_impute(PeriodFeatureMatrix m);

/// Clamp observed values into [p_lower, p_upper] of the training pools.
/// Features with fewer than 2 pooled observations pass through (warning).
PeriodFeatureMatrix cap_outliers(const FeaturePools& pools,
                                 PeriodFeatureMatrix m,
                                 std::vector<std::string>* warnings = nullptr);

struct ImputeOptions {
    int rounds = 10;
    double ridge_lambda = 1.0;
};

/// Fill remaining gaps by round-robin ridge regression of each incomplete
/// feature on the others, from a training-median initialization. Single-row
/// matrices and all-missing columns fall back to training medians.
PeriodFeatureMatrix regression_impute(const FeaturePools& pools,
                                      PeriodFeatureMatrix m,
                                      const ImputeOptions& opts = {});

/// bin -> cap -> carry-forward -> regression; output has no missing cells.
PeriodFeatureMatrix preprocess_stay(const RawEventStream& stream,
                                    const FeatureSchema& schema,
                                    const FeaturePools& pools,
                                    double period_hours = 12.0,
                                    const ImputeOptions& opts = {},
                                    std::vector<std::string>* warnings = nullptr);

}  // namespace icudp
