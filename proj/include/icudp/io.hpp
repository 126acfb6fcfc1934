#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "icudp/cluster.hpp"
#include "icudp/ingest.hpp"
#include "icudp/mdp.hpp"
#include "icudp/synth.hpp"
#include "icudp/transitions.hpp"
#include "icudp/types.hpp"

namespace icudp {

using json = nlohmann::json;

/// Deterministic formatting used for every CSV number the toolkit writes.
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// events: CSV with header stay_id,timestamp_hours,feature,value;
// stays keep their first-appearance order
std::vector<RawEventStream> read_events_csv(const std::string& path);
void write_events_csv(const std::string& path,
                      const std::vector<RawEventStream>& streams);

// schema: JSON {"features": [{"name":..., "mode":...}, ...]}
FeatureSchema schema_from_json(const json& j);
json schema_to_json(const FeatureSchema& schema);

// outcome labels per stay: CSV stay_id,terminal_event,t_window_days
struct StayOutcome {
    std::string stay_id;
    TerminalEvent terminal_event;
    int t_window_days = 30;
};
std::vector<StayOutcome> read_outcomes_csv(const std::string& path);
void write_outcomes_csv(const std::string& path,
                        const std::vector<StayOutcome>& outcomes);

// trajectories: JSON-lines, one per line
std::vector<LabeledTrajectory> read_trajectories_jsonl(const std::string& path);
void write_trajectories_jsonl(const std::string& path,
                              const std::vector<LabeledTrajectory>& trajs);

// feature matrices: CSV stay_id,period,<feature...>, one row per period
void write_feature_matrices_csv(const std::string& path,
                                const std::vector<PeriodFeatureMatrix>& mats,
                                const FeatureSchema& schema);
std::vector<PeriodFeatureMatrix> read_feature_matrices_csv(
    const std::string& path, int n_features);

json state_model_to_json(const StateModel& m);
StateModel state_model_from_json(const json& j);

json transition_model_to_json(const TransitionModel& m);
TransitionModel transition_model_from_json(const json& j);

json policy_to_json(const Policy& p);
Policy policy_from_json(const json& j);

json value_function_to_json(const ValueFunction& v);
ValueFunction value_function_from_json(const json& j);

json ground_truth_to_json(const GroundTruthModel& m);
GroundTruthModel ground_truth_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

}  // namespace icudp
