#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "icudp/ingest.hpp"
#include "icudp/transitions.hpp"
#include "icudp/types.hpp"

namespace icudp {

/// Known-truth cohort generator. States are ordered by severity: p_ud is
/// nondecreasing in the state index, and the synthetic clinician discharges
/// healthier states more often. Every estimator and solver in the toolkit can
/// be checked against this model exactly.
struct GroundTruthModel {
    int h_true = 0;
    Eigen::MatrixXd keep;            // row-stochastic
    Eigen::VectorXd p_ud;            // nondecreasing (severity gradient)
    Eigen::VectorXd discharge_prob;  // clinician policy, per state
    Eigen::MatrixXd feature_means;   // h x f emitter means
    double noise_scale = 1.0;
    Eigen::VectorXd initial_dist;
    std::uint64_t seed = 0;
    int max_periods = 1000;  // stays longer than this are censored

    int n_features() const { return static_cast<int>(feature_means.cols()); }
    TransitionModel to_transition_model() const;

    struct MakeOptions {
        int h = 10;
        int n_features = 4;
        double separation = 5.0;  // centroid spacing in noise-scale units
        double noise_scale = 1.0;
        double self_loop_weight = 2.0;   // extra mass on staying put
        double neighbor_decay = 0.7;     // transition affinity falls with |dx|
        double ud_max = 0.8;             // p_ud drawn from sorted U(0, ud_max)
        double discharge_max = 0.5;      // healthiest-state discharge ceiling
        double discharge_steepness = 4.0;
        int max_periods = 1000;
    };
    static GroundTruthModel make(const MakeOptions& opts, std::uint64_t seed);
};

/// Sample stays under the synthetic clinician: evolve by the keep matrix,
/// discharge per discharge_prob, outcome per p_ud at the discharge state.
std::vector<LabeledTrajectory> sample_cohort(const GroundTruthModel& model,
                                             int n_stays, std::uint64_t seed);

struct EmitOptions {
    double period_hours = 12.0;
    double drop_fraction = 0.0;             // chance an observation is dropped
    std::vector<double> per_feature_drop;   // optional per-feature override
};

/// Scatter one stay's per-period Gaussian feature draws as timestamped events.
/// Streams derive from (seed, stay_id), so subsets reproduce.
RawEventStream emit_features(const LabeledTrajectory& traj,
                             const GroundTruthModel& model,
                             const FeatureSchema& schema, std::uint64_t seed,
                             const EmitOptions& opts = {});

/// f0..f{n-1}, all MEAN-aggregated.
FeatureSchema synthetic_schema(int n_features);

}  // namespace icudp
