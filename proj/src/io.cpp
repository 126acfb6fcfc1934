#include "icudp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace icudp {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DataError("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("cannot parse " + what + " from '" + s + "'");
    }
}

}  // namespace

std::vector<RawEventStream> read_events_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("events file '" + path + "' is empty");

    std::vector<RawEventStream> streams;
    std::unordered_map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw DataError("events row needs 4 columns, got " +
                            std::to_string(fields.size()));
        auto [it, inserted] = index.try_emplace(fields[0], streams.size());
        if (inserted) streams.push_back(RawEventStream{fields[0], {}});
        streams[it->second].events.push_back(
            RawEvent{parse_double(fields[1], "timestamp"), fields[2],
                     parse_double(fields[3], "value")});
    }
    return streams;
}

void write_events_csv(const std::string& path,
                      const std::vector<RawEventStream>& streams) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "stay_id,timestamp_hours,feature,value\n";
    for (const auto& s : streams)
        for (const auto& ev : s.events)
            out << s.stay_id << ',' << format_double(ev.timestamp_hours) << ','
                << ev.feature << ',' << format_double(ev.value) << '\n';
}

FeatureSchema schema_from_json(const json& j) {
    FeatureSchema schema;
    if (!j.contains("features") || !j["features"].is_array())
        throw DataError("schema JSON needs a 'features' array");
    for (const auto& f : j["features"]) {
        schema.names.push_back(f.at("name").get<std::string>());
        schema.modes.push_back(
            agg_mode_from_string(f.at("mode").get<std::string>()));
    }
    return schema;
}

json schema_to_json(const FeatureSchema& schema) {
    json features = json::array();
    for (int f = 0; f < schema.size(); ++f)
        features.push_back(
            {{"name", schema.names[f]}, {"mode", to_string(schema.modes[f])}});
    return json{{"features", features}};
}

std::vector<StayOutcome> read_outcomes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("outcomes file '" + path + "' is empty");
    std::vector<StayOutcome> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw DataError("outcomes row needs 3 columns");
        out.push_back(StayOutcome{fields[0],
                                  terminal_event_from_string(fields[1]),
                                  static_cast<int>(parse_double(
                                      fields[2], "t_window_days"))});
    }
    return out;
}

void write_outcomes_csv(const std::string& path,
                        const std::vector<StayOutcome>& outcomes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "stay_id,terminal_event,t_window_days\n";
    for (const auto& o : outcomes)
        out << o.stay_id << ',' << to_string(o.terminal_event) << ','
            << o.t_window_days << '\n';
}

std::vector<LabeledTrajectory> read_trajectories_jsonl(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<LabeledTrajectory> trajs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("invalid JSON line in '" + path + "': " + e.what());
        }
        LabeledTrajectory t;
        t.stay_id = j.at("stay_id").get<std::string>();
        t.states = j.at("states").get<std::vector<StateId>>();
        t.terminal_event =
            terminal_event_from_string(j.at("terminal_event").get<std::string>());
        t.t_window_days = j.value("t_window_days", 30);
        trajs.push_back(std::move(t));
    }
    return trajs;
}

void write_trajectories_jsonl(const std::string& path,
                              const std::vector<LabeledTrajectory>& trajs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (const auto& t : trajs) {
        json j{{"stay_id", t.stay_id},
               {"states", t.states},
               {"terminal_event", to_string(t.terminal_event)},
               {"t_window_days", t.t_window_days}};
        out << j.dump() << '\n';
    }
}

void write_feature_matrices_csv(const std::string& path,
                                const std::vector<PeriodFeatureMatrix>& mats,
                                const FeatureSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "stay_id,period";
    for (const auto& name : schema.names) out << ',' << name;
    out << '\n';
    for (const auto& m : mats)
        for (int t = 0; t < m.periods(); ++t) {
            out << m.stay_id << ',' << t;
            for (int f = 0; f < m.features(); ++f)
                out << ',' << format_double(m.values(t, f));
            out << '\n';
        }
}

std::vector<PeriodFeatureMatrix> read_feature_matrices_csv(
    const std::string& path, int n_features) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("matrices file '" + path + "' is empty");

    std::vector<PeriodFeatureMatrix> mats;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::vector<std::vector<double>>> rows;  // per stay
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != n_features + 2)
            throw DataError("matrix row has wrong column count");
        auto [it, inserted] = index.try_emplace(fields[0], rows.size());
        if (inserted) {
            rows.emplace_back();
            order.push_back(fields[0]);
        }
        std::vector<double> vals(n_features);
        for (int f = 0; f < n_features; ++f)
            vals[f] = parse_double(fields[f + 2], "feature value");
        rows[it->second].push_back(std::move(vals));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        PeriodFeatureMatrix m;
        m.stay_id = order[i];
        m.values.resize(rows[i].size(), n_features);
        m.missing.resize(rows[i].size(), n_features);
        m.missing.setConstant(false);
        for (std::size_t t = 0; t < rows[i].size(); ++t)
            for (int f = 0; f < n_features; ++f)
                m.values(t, f) = rows[i][t][f];
        mats.push_back(std::move(m));
    }
    return mats;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != j[0].size())
            throw DataError("ragged matrix in JSON");
        for (std::size_t c = 0; c < j[r].size(); ++c)
            m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json state_model_to_json(const StateModel& m) {
    return json{{"h", m.h},
                {"seed", m.seed},
                {"feature_mins", vector_to_json(m.scaler.mins)},
                {"feature_maxs", vector_to_json(m.scaler.maxs)},
                {"centroids", matrix_to_json(m.centroids)}};
}

StateModel state_model_from_json(const json& j) {
    StateModel m;
    m.h = j.at("h").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.scaler.mins = vector_from_json(j.at("feature_mins"));
    m.scaler.maxs = vector_from_json(j.at("feature_maxs"));
    m.centroids = matrix_from_json(j.at("centroids"));
    if (m.centroids.rows() != m.h)
        throw DataError("state model centroid count does not match h");
    return m;
}

json transition_model_to_json(const TransitionModel& m) {
    return json{{"h", m.h},
                {"keep_matrix", matrix_to_json(m.keep)},
                {"p_ud", vector_to_json(m.p_ud)},
                {"p_sd", vector_to_json(m.p_sd)},
                {"counts",
                 {{"keep", matrix_to_json(m.keep_counts)},
                  {"keep_exposure", vector_to_json(m.keep_exposure)},
                  {"ud_events", vector_to_json(m.ud_events)},
                  {"outcome_events", vector_to_json(m.outcome_events)}}}};
}

TransitionModel transition_model_from_json(const json& j) {
    TransitionModel m;
    m.h = j.at("h").get<int>();
    m.keep = matrix_from_json(j.at("keep_matrix"));
    m.p_ud = vector_from_json(j.at("p_ud"));
    m.p_sd = vector_from_json(j.at("p_sd"));
    const auto& counts = j.at("counts");
    m.keep_counts = matrix_from_json(counts.at("keep"));
    m.keep_exposure = vector_from_json(counts.at("keep_exposure"));
    m.ud_events = vector_from_json(counts.at("ud_events"));
    m.outcome_events = vector_from_json(counts.at("outcome_events"));
    m.validate();
    return m;
}

json policy_to_json(const Policy& p) {
    json actions = json::array();
    for (Action a : p.action) actions.push_back(to_string(a));
    return json{{"actions", actions}};
}

Policy policy_from_json(const json& j) {
    Policy p;
    for (const auto& a : j.at("actions"))
        p.action.push_back(action_from_string(a.get<std::string>()));
    return p;
}

json value_function_to_json(const ValueFunction& v) {
    return json{{"j", vector_to_json(v.j)}, {"j_sd", v.j_sd}, {"j_ud", v.j_ud}};
}

ValueFunction value_function_from_json(const json& j) {
    ValueFunction v;
    v.j = vector_from_json(j.at("j"));
    v.j_sd = j.at("j_sd").get<double>();
    v.j_ud = j.at("j_ud").get<double>();
    return v;
}

json ground_truth_to_json(const GroundTruthModel& m) {
    return json{{"h_true", m.h_true},
                {"keep_matrix", matrix_to_json(m.keep)},
                {"p_ud", vector_to_json(m.p_ud)},
                {"discharge_prob", vector_to_json(m.discharge_prob)},
                {"feature_means", matrix_to_json(m.feature_means)},
                {"noise_scale", m.noise_scale},
                {"initial_dist", vector_to_json(m.initial_dist)},
                {"seed", m.seed},
                {"max_periods", m.max_periods}};
}

GroundTruthModel ground_truth_from_json(const json& j) {
    GroundTruthModel m;
    m.h_true = j.at("h_true").get<int>();
    m.keep = matrix_from_json(j.at("keep_matrix"));
    m.p_ud = vector_from_json(j.at("p_ud"));
    m.discharge_prob = vector_from_json(j.at("discharge_prob"));
    m.feature_means = matrix_from_json(j.at("feature_means"));
    m.noise_scale = j.at("noise_scale").get<double>();
    m.initial_dist = vector_from_json(j.at("initial_dist"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.max_periods = j.at("max_periods").get<int>();
    return m;
}

}  // namespace icudp
