#include "icudp/synth.hpp"

#include <algorithm>
#include <cmath>

#include "icudp/rng.hpp"

namespace icudp {

TransitionModel GroundTruthModel::to_transition_model() const {
    TransitionModel m;
    m.h = h_true;
    m.keep = keep;
    m.p_ud = p_ud;
    m.p_sd = (1.0 - p_ud.array()).matrix();
    m.keep_counts = Eigen::MatrixXd::Zero(h_true, h_true);
    m.keep_exposure = Eigen::VectorXd::Zero(h_true);
    m.ud_events = Eigen::VectorXd::Zero(h_true);
    m.outcome_events = Eigen::VectorXd::Zero(h_true);
    m.validate();
    return m;
}

GroundTruthModel GroundTruthModel::make(const MakeOptions& opts,
                                        std::uint64_t seed) {
    if (opts.h < 1) throw DataError("ground truth needs H >= 1");
    if ((1 << opts.n_features) < opts.h)
        throw DataError("need 2^F >= H to place distinct feature means");

    GroundTruthModel m;
    m.h_true = opts.h;
    m.noise_scale = opts.noise_scale;
    m.seed = seed;
    m.max_periods = opts.max_periods;
    RngStream rng(derive_seed(seed, hash_tag("ground-truth")));

    // Keep dynamics: neighbor-biased random rows with a self-loop boost.
    // All entries positive, so every state is reachable and estimable.
    m.keep.resize(opts.h, opts.h);
    for (int x = 0; x < opts.h; ++x) {
        double row_sum = 0.0;
        for (int y = 0; y < opts.h; ++y) {
            double w = (0.2 + 0.8 * rng.uniform01()) *
                       std::exp(-opts.neighbor_decay * std::abs(x - y));
            if (x == y) w *= 1.0 + opts.self_loop_weight;
            m.keep(x, y) = w;
            row_sum += w;
        }
        m.keep.row(x) /= row_sum;
    }

    // Severity gradient: sorted uniforms, so p_ud is nondecreasing by design.
    std::vector<double> ud(opts.h);
    for (double& u : ud) u = rng.uniform01() * opts.ud_max;
    std::sort(ud.begin(), ud.end());
    m.p_ud = Eigen::Map<Eigen::VectorXd>(ud.data(), opts.h);

    // Imperfect clinician: logistic in severity rank, discharging healthier
    // patients more often.
    m.discharge_prob.resize(opts.h);
    for (int x = 0; x < opts.h; ++x) {
        double frac = opts.h > 1 ? static_cast<double>(x) / (opts.h - 1) : 0.0;
        double z = opts.discharge_steepness * (0.5 - frac);
        m.discharge_prob(x) = opts.discharge_max / (1.0 + std::exp(-z));
    }

    // Distinct means on hypercube corners, `separation` noise units apart.
    m.feature_means.resize(opts.h, opts.n_features);
    for (int x = 0; x < opts.h; ++x)
        for (int f = 0; f < opts.n_features; ++f)
            m.feature_means(x, f) =
                ((x >> f) & 1) ? opts.separation * opts.noise_scale : 0.0;

    m.initial_dist = Eigen::VectorXd::Constant(opts.h, 1.0 / opts.h);
    return m;
}

std::vector<LabeledTrajectory> sample_cohort(const GroundTruthModel& model,
                                             int n_stays, std::uint64_t seed) {
    if (n_stays < 1) throw DataError("n_stays must be >= 1");
    std::vector<double> init(model.initial_dist.data(),
                             model.initial_dist.data() + model.h_true);
    std::vector<std::vector<double>> rows(model.h_true,
                                          std::vector<double>(model.h_true));
    for (int x = 0; x < model.h_true; ++x)
        for (int y = 0; y < model.h_true; ++y) rows[x][y] = model.keep(x, y);

    std::vector<LabeledTrajectory> cohort;
    cohort.reserve(n_stays);
    for (int i = 0; i < n_stays; ++i) {
        RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        LabeledTrajectory traj;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "synth-%06d", i);
        traj.stay_id = buf;

        int x = rng.categorical(init);
        while (true) {
            traj.states.push_back(x + 1);
            if (rng.bernoulli(model.discharge_prob(x))) {
                traj.terminal_event = rng.bernoulli(model.p_ud(x))
                                          ? TerminalEvent::DischargedUd
                                          : TerminalEvent::DischargedSd;
                break;
            }
            if (traj.length() >= model.max_periods) {
                traj.terminal_event = TerminalEvent::Censored;
                break;
            }
            x = rng.categorical(rows[x]);
        }
        cohort.push_back(std::move(traj));
    }
    return cohort;
}

RawEventStream emit_features(const LabeledTrajectory& traj,
                             const GroundTruthModel& model,
                             const FeatureSchema& schema, std::uint64_t seed,
                             const EmitOptions& opts) {
    if (schema.size() != model.n_features())
        throw DataError("schema does not match emitter feature count");
    RngStream rng(derive_seed(seed, hash_tag(traj.stay_id), hash_tag("emit")));

    RawEventStream stream;
    stream.stay_id = traj.stay_id;
    for (int t = 0; t < traj.length(); ++t) {
        int x = traj.states[t] - 1;
        for (int f = 0; f < schema.size(); ++f) {
            double drop =
                static_cast<std::size_t>(f) < opts.per_feature_drop.size()
                    ? opts.per_feature_drop[f]
                    : opts.drop_fraction;
            bool dropped = rng.bernoulli(drop);
            double offset = rng.uniform01();
            double value = rng.normal(model.feature_means(x, f), model.noise_scale);
            if (dropped) continue;
            stream.events.push_back(RawEvent{
                (t + offset) * opts.period_hours, schema.names[f], value});
        }
    }
    return stream;
}

FeatureSchema synthetic_schema(int n_features) {
    FeatureSchema schema;
    for (int f = 0; f < n_features; ++f) {
        schema.names.push_back("f" + std::to_string(f));
        schema.modes.push_back(AggMode::Mean);
    }
    return schema;
}

}  // namespace icudp
