#include "icudp/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "icudp/rng.hpp"
#include "icudp/stats.hpp"

namespace icudp {

namespace fs = std::filesystem;

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::exception_ptr first_error;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            for (int i = w; i < n; i += jobs) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string resolve_output_dir(const RunConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("ICUDP_OUT_DIR"); env && *env)
        return env;
    return "out";
}

namespace {

struct DataBundle {
    FeatureSchema schema;
    std::vector<RawEventStream> streams;   // inclusion-filtered
    std::vector<StayOutcome> outcomes;     // aligned with streams
    bool synthetic = false;
    GroundTruthModel ground_truth;
    std::vector<LabeledTrajectory> true_trajectories;
};

TerminalEvent outcome_of(const LabeledTrajectory& t) { return t.terminal_event; }

DataBundle load_or_simulate(const RunConfig& config, const std::string& outdir) {
    DataBundle data;
    if (config.use_synthetic_input()) {
        data.synthetic = true;
        GroundTruthModel::MakeOptions opts;
        opts.h = config.synth.h_true;
        opts.n_features = config.synth.n_features;
        opts.separation = config.synth.separation;
        opts.noise_scale = config.synth.noise_scale;
        opts.max_periods = config.synth.max_periods;
        data.ground_truth = GroundTruthModel::make(opts, config.seed);
        data.true_trajectories =
            sample_cohort(data.ground_truth, config.synth.n_stays,
                          derive_seed(config.seed, hash_tag("cohort")));
        data.schema = synthetic_schema(config.synth.n_features);
        EmitOptions emit;
        emit.period_hours = config.period_hours;
        emit.drop_fraction = config.synth.drop_fraction;
        for (const auto& traj : data.true_trajectories) {
            data.streams.push_back(emit_features(traj, data.ground_truth,
                                                 data.schema, config.seed,
                                                 emit));
            data.outcomes.push_back(StayOutcome{
                traj.stay_id, outcome_of(traj), config.t_window_days});
        }
        write_json_file(outdir + "/ground_truth.json",
                        ground_truth_to_json(data.ground_truth));
        write_trajectories_jsonl(outdir + "/trajectories_true.jsonl",
                                 data.true_trajectories);
        write_events_csv(outdir + "/events.csv", data.streams);
        write_json_file(outdir + "/schema.json", schema_to_json(data.schema));
        write_outcomes_csv(outdir + "/outcomes.csv", data.outcomes);
    } else {
        data.schema = schema_from_json(read_json_file(config.input.schema_json));
        data.streams = read_events_csv(config.input.events_csv);
        auto outcomes = read_outcomes_csv(config.input.outcomes_csv);
        std::unordered_map<std::string, const StayOutcome*> by_id;
        for (const auto& o : outcomes) by_id[o.stay_id] = &o;
        std::vector<RawEventStream> kept;
        for (auto& s : data.streams) {
            auto it = by_id.find(s.stay_id);
            if (it == by_id.end())
                throw DataError("no outcome label for stay '" + s.stay_id + "'");
            kept.push_back(std::move(s));
            data.outcomes.push_back(*it->second);
        }
        data.streams = std::move(kept);
    }

    // stay-level inclusion filter
    std::vector<RawEventStream> streams;
    std::vector<StayOutcome> outcomes;
    for (std::size_t i = 0; i < data.streams.size(); ++i) {
        if (!passes_inclusion(data.streams[i], data.schema,
                              config.inclusion_min_fraction))
            continue;
        streams.push_back(std::move(data.streams[i]));
        outcomes.push_back(data.outcomes[i]);
    }
    if (streams.empty())
        throw DataError("no stays pass the inclusion filter");
    data.streams = std::move(streams);
    data.outcomes = std::move(outcomes);
    return data;
}

struct SplitResult {
    SplitMetrics metrics;
    std::vector<CurvePoint> curves;
    std::vector<CalibrationRow> calibration;
    json state_model;
    json transition_model;
    json policy;
    json value;
};

SplitResult run_split(const RunConfig& config, const DataBundle& data,
                      int split) {
    const std::uint64_t split_seed =
        derive_seed(config.seed, hash_tag("split"), split);
    const int n_stays = static_cast<int>(data.streams.size());

    // deterministic shuffle, then train/test partition
    std::vector<int> order(n_stays);
    for (int i = 0; i < n_stays; ++i) order[i] = i;
    RngStream shuffle_rng(derive_seed(split_seed, hash_tag("shuffle")));
    for (int i = n_stays - 1; i > 0; --i)
        std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    int n_train = std::max(
        1, std::min(n_stays - 1,
                    static_cast<int>(config.splits.fraction * n_stays)));
    std::vector<int> train_idx(order.begin(), order.begin() + n_train);
    std::vector<int> test_idx(order.begin() + n_train, order.end());

    // percentile pools from the training split only
    ImputeOptions impute{config.impute_rounds, config.ridge_lambda};
    std::vector<PeriodFeatureMatrix> train_binned;
    train_binned.reserve(train_idx.size());
    for (int i : train_idx)
        train_binned.push_back(bin_and_aggregate(data.streams[i], data.schema,
                                                 config.period_hours));
    FeaturePools pools = fit_feature_pools(train_binned);

    auto preprocess_all = [&](const std::vector<int>& idx) {
        std::vector<PeriodFeatureMatrix> out;
        out.reserve(idx.size());
        for (int i : idx)
            out.push_back(preprocess_stay(data.streams[i], data.schema, pools,
                                          config.period_hours, impute));
        return out;
    };
    std::vector<PeriodFeatureMatrix> train_mats = preprocess_all(train_idx);
    std::vector<PeriodFeatureMatrix> test_mats = preprocess_all(test_idx);

    // clustering windows: optionally restrict to stays that end in discharge
    const bool pre_discharge = config.cluster.windows == "pre_discharge";
    long n_rows = 0;
    for (std::size_t s = 0; s < train_mats.size(); ++s) {
        if (pre_discharge &&
            !is_discharge(data.outcomes[train_idx[s]].terminal_event))
            continue;
        n_rows += train_mats[s].periods();
    }
    if (n_rows < config.cluster.k)
        throw DataError("not enough training windows for k clusters");
    Eigen::MatrixXd window_rows(n_rows, data.schema.size());
    long r = 0;
    for (std::size_t s = 0; s < train_mats.size(); ++s) {
        if (pre_discharge &&
            !is_discharge(data.outcomes[train_idx[s]].terminal_event))
            continue;
        window_rows.middleRows(r, train_mats[s].periods()) =
            train_mats[s].values;
        r += train_mats[s].periods();
    }
    KMeansOptions kopts{config.cluster.max_iter, config.cluster.restarts};
    StateModel state_model =
        fit_state_model(window_rows, config.cluster.k,
                        derive_seed(split_seed, hash_tag("kmeans")), kopts);

    auto to_trajectories = [&](const std::vector<int>& idx,
                               const std::vector<PeriodFeatureMatrix>& mats) {
        std::vector<LabeledTrajectory> trajs;
        trajs.reserve(idx.size());
        for (std::size_t s = 0; s < idx.size(); ++s) {
            LabeledTrajectory t;
            t.stay_id = data.streams[idx[s]].stay_id;
            t.terminal_event = data.outcomes[idx[s]].terminal_event;
            t.t_window_days = data.outcomes[idx[s]].t_window_days;
            for (int p = 0; p < mats[s].periods(); ++p)
                t.states.push_back(assign_raw(
                    state_model, mats[s].values.row(p).transpose()));
            trajs.push_back(std::move(t));
        }
        return trajs;
    };
    std::vector<LabeledTrajectory> train_trajs =
        to_trajectories(train_idx, train_mats);
    std::vector<LabeledTrajectory> test_trajs =
        to_trajectories(test_idx, test_mats);

    TransitionModel tm_train =
        estimate_transition_model(train_trajs, config.cluster.k);

    SplitResult res;
    res.metrics.split = split;
    res.metrics.r2 = validate_r2(tm_train, test_trajs);

    CostSpec cost = CostSpec::uniform(config.cluster.k, config.mdp.g_ud,
                                      config.mdp.alpha, config.mdp.g_keep,
                                      config.mdp.g_discharge, config.mdp.g_sd,
                                      config.t_window_days);
    SolveResult solved = policy_iteration(tm_train, cost);

    // model-based OPE simulates with probabilities from the evaluation split
    std::vector<LabeledTrajectory> test_disch = filter_discharged(test_trajs);
    if (test_disch.empty())
        throw DataError("split " + std::to_string(split) +
                        ": no discharged stays in the test set");
    TransitionModel tm_test =
        estimate_transition_model(test_disch, config.cluster.k);

    OpeConfig ope;
    ope.n_mc = config.ope.n_mc;
    ope.n_bootstrap = config.ope.n_bootstrap;
    ope.delta = config.ope.delta;
    ope.horizon_cap = config.ope.horizon_cap;
    ope.seed = derive_seed(split_seed, hash_tag("ope"));

    double gamma = match_rp2_gamma(solved.policy, test_disch);
    res.metrics.rp2_gamma = gamma;
    auto evaluate = [&](const PolicySpec& spec) {
        auto costs = policy_costs(test_disch, spec, tm_test, cost, ope);
        return bootstrap_bounds(costs, ope.n_bootstrap, ope.delta, ope.seed);
    };
    res.metrics.op = evaluate(PolicySpec::make_op(solved.policy));
    res.metrics.cp = evaluate(PolicySpec::make_cp());
    res.metrics.rp1 = evaluate(PolicySpec::make_rp1());
    res.metrics.rp2 = evaluate(PolicySpec::make_rp2(gamma));

    res.curves = performance_curves(tm_train, cost, config.mdp.gud_grid,
                                    test_disch, ope);
    res.calibration = policy_calibration(test_disch, cost);

    res.state_model = state_model_to_json(state_model);
    res.transition_model = transition_model_to_json(tm_train);
    res.policy = policy_to_json(solved.policy);
    res.value = value_function_to_json(solved.value);
    return res;
}

class CsvTable {
  public:
    CsvTable(std::string path, const std::string& header,
             const std::string& audit)
        : path_(std::move(path)) {
        rows_.push_back(header + "," + audit);
    }
    void add(const std::string& row, const std::string& audit_values) {
        rows_.push_back(row + "," + audit_values);
    }
    void write() const {
        std::ofstream out(path_);
        if (!out) throw DataError("cannot write '" + path_ + "'");
        for (const auto& r : rows_) out << r << '\n';
    }

  private:
    std::string path_;
    std::vector<std::string> rows_;
};

std::string policy_stats_row(const PolicyCurveStats& s, double period_hours) {
    return std::to_string(s.n_discharged) + "," + format_double(s.frac_ud) +
           "," +
           format_double(s.mean_expected_los_periods * period_hours / 24.0);
}

}  // namespace

std::vector<std::array<std::string, 4>> summarize_metrics(
    const std::vector<SplitMetrics>& metrics) {
    auto col = [&](const std::function<double(const SplitMetrics&)>& get) {
        std::vector<double> v;
        v.reserve(metrics.size());
        for (const auto& m : metrics) v.push_back(get(m));
        std::sort(v.begin(), v.end());
        return v;
    };
    std::vector<std::pair<std::string, std::function<double(const SplitMetrics&)>>>
        fields = {
            {"r2_keep", [](const auto& m) { return m.r2.keep; }},
            {"r2_sd", [](const auto& m) { return m.r2.sd; }},
            {"r2_ud", [](const auto& m) { return m.r2.ud; }},
            {"op_mean_cost", [](const auto& m) { return m.op.mean_cost; }},
            {"op_ub", [](const auto& m) { return m.op.upper_bound; }},
            {"cp_mean_cost", [](const auto& m) { return m.cp.mean_cost; }},
            {"cp_lb", [](const auto& m) { return m.cp.lower_bound; }},
            {"rp1_mean_cost", [](const auto& m) { return m.rp1.mean_cost; }},
            {"rp2_mean_cost", [](const auto& m) { return m.rp2.mean_cost; }},
            {"rp2_gamma", [](const auto& m) { return m.rp2_gamma; }},
        };
    std::vector<std::array<std::string, 4>> rows;
    for (const auto& [name, get] : fields) {
        auto v = col(get);
        rows.push_back({name, format_double(median_sorted(v)),
                        format_double(percentile_sorted(v, 0.25)),
                        format_double(percentile_sorted(v, 0.75))});
    }
    return rows;
}

PipelineResult run_pipeline(const RunConfig& config) {
    config.validate();
    const std::string outdir = resolve_output_dir(config);

    // fail before any output is written when inputs are unreadable
    if (!config.use_synthetic_input()) {
        for (const std::string& p :
             {config.input.events_csv, config.input.schema_json,
              config.input.outcomes_csv})
            if (!fs::exists(p))
                throw ConfigError("input file '" + p + "' does not exist");
    }
    fs::create_directories(outdir);
    fs::create_directories(outdir + "/splits");

    DataBundle data = load_or_simulate(config, outdir);

    const int n_splits = config.splits.n_splits;
    std::vector<SplitResult> results(n_splits);
    parallel_for(n_splits, config.jobs,
                 [&](int i) { results[i] = run_split(config, data, i); });

    const std::string audit_header = "seed,config_hash";
    const std::string audit =
        std::to_string(config.seed) + "," + config.hash_hex();
    std::vector<std::string> outputs;

    for (int i = 0; i < n_splits; ++i) {
        std::string dir = outdir + "/splits/" + std::to_string(i);
        fs::create_directories(dir);
        write_json_file(dir + "/state_model.json", results[i].state_model);
        write_json_file(dir + "/transition_model.json",
                        results[i].transition_model);
        write_json_file(dir + "/policy.json", results[i].policy);
        write_json_file(dir + "/value.json", results[i].value);
        for (const char* f :
             {"state_model.json", "transition_model.json", "policy.json",
              "value.json"})
            outputs.push_back("splits/" + std::to_string(i) + "/" + f);
    }

    CsvTable metrics_csv(
        outdir + "/metrics.csv",
        "split,r2_keep,r2_sd,r2_ud,rp2_gamma,op_mean,op_lb,op_ub,cp_mean,cp_lb,"
        "cp_ub,rp1_mean,rp1_lb,rp1_ub,rp2_mean,rp2_lb,rp2_ub",
        audit_header);
    auto est_cols = [](const PolicyCostEstimate& e) {
        return format_double(e.mean_cost) + "," + format_double(e.lower_bound) +
               "," + format_double(e.upper_bound);
    };
    std::vector<SplitMetrics> metrics;
    for (const auto& r : results) {
        metrics.push_back(r.metrics);
        metrics_csv.add(std::to_string(r.metrics.split) + "," +
                            format_double(r.metrics.r2.keep) + "," +
                            format_double(r.metrics.r2.sd) + "," +
                            format_double(r.metrics.r2.ud) + "," +
                            format_double(r.metrics.rp2_gamma) + "," +
                            est_cols(r.metrics.op) + "," +
                            est_cols(r.metrics.cp) + "," +
                            est_cols(r.metrics.rp1) + "," +
                            est_cols(r.metrics.rp2),
                        audit);
    }
    metrics_csv.write();
    outputs.push_back("metrics.csv");

    // evolution of the confidence bounds with the number of trained models
    CsvTable evolution_csv(outdir + "/bound_evolution.csv",
                           "n_models,op_ub_mean,cp_lb_mean", audit_header);
    double ub_sum = 0.0, lb_sum = 0.0;
    for (int i = 0; i < n_splits; ++i) {
        ub_sum += results[i].metrics.op.upper_bound;
        lb_sum += results[i].metrics.cp.lower_bound;
        evolution_csv.add(std::to_string(i + 1) + "," +
                              format_double(ub_sum / (i + 1)) + "," +
                              format_double(lb_sum / (i + 1)),
                          audit);
    }
    evolution_csv.write();
    outputs.push_back("bound_evolution.csv");

    CsvTable curves_csv(
        outdir + "/curves.csv",
        "split,g_ud,rp2_gamma,policy,n_discharged,frac_ud,mean_expected_los_"
        "days",
        audit_header);
    for (const auto& r : results)
        for (const auto& pt : r.curves) {
            auto prefix = std::to_string(r.metrics.split) + "," +
                          format_double(pt.g_ud) + "," +
                          format_double(pt.rp2_gamma) + ",";
            curves_csv.add(prefix + "OP," +
                               policy_stats_row(pt.op, config.period_hours),
                           audit);
            curves_csv.add(prefix + "RP2," +
                               policy_stats_row(pt.rp2, config.period_hours),
                           audit);
            curves_csv.add(prefix + "CP," +
                               policy_stats_row(pt.cp, config.period_hours),
                           audit);
        }
    curves_csv.write();
    outputs.push_back("curves.csv");

    // per-grid-point aggregate across splits (mean and two-sigma band)
    CsvTable curve_summary_csv(outdir + "/curves_summary.csv",
                               "g_ud,policy,frac_ud_mean,frac_ud_sd,n_"
                               "discharged_mean,n_discharged_sd,los_days_mean,"
                               "los_days_sd",
                               audit_header);
    if (!results.empty()) {
        for (std::size_t g = 0; g < results.front().curves.size(); ++g) {
            auto agg = [&](const std::function<const PolicyCurveStats&(
                               const CurvePoint&)>& pick,
                           const std::string& name) {
                std::vector<double> frac, nd, los;
                for (const auto& r : results) {
                    frac.push_back(pick(r.curves[g]).frac_ud);
                    nd.push_back(pick(r.curves[g]).n_discharged);
                    los.push_back(pick(r.curves[g]).mean_expected_los_periods *
                                  config.period_hours / 24.0);
                }
                curve_summary_csv.add(
                    format_double(results.front().curves[g].g_ud) + "," + name +
                        "," + format_double(mean(frac)) + "," +
                        format_double(std::sqrt(variance(frac))) + "," +
                        format_double(mean(nd)) + "," +
                        format_double(std::sqrt(variance(nd))) + "," +
                        format_double(mean(los)) + "," +
                        format_double(std::sqrt(variance(los))),
                    audit);
            };
            agg([](const CurvePoint& p) -> const PolicyCurveStats& {
                return p.op;
            }, "OP");
            agg([](const CurvePoint& p) -> const PolicyCurveStats& {
                return p.rp2;
            }, "RP2");
            agg([](const CurvePoint& p) -> const PolicyCurveStats& {
                return p.cp;
            }, "CP");
        }
    }
    curve_summary_csv.write();
    outputs.push_back("curves_summary.csv");

    CsvTable calib_csv(outdir + "/calibration.csv",
                       "split,cost_lo,cost_hi,n,ud_rate", audit_header);
    for (const auto& r : results)
        for (const auto& row : r.calibration)
            calib_csv.add(std::to_string(r.metrics.split) + "," +
                              format_double(row.cost_lo) + "," +
                              format_double(row.cost_hi) + "," +
                              std::to_string(row.n) + "," +
                              format_double(row.ud_rate),
                          audit);
    calib_csv.write();
    outputs.push_back("calibration.csv");

    CsvTable report_csv(outdir + "/report.csv", "metric,median,q1,q3",
                        audit_header);
    for (const auto& row : summarize_metrics(metrics))
        report_csv.add(row[0] + "," + row[1] + "," + row[2] + "," + row[3],
                       audit);
    report_csv.write();
    outputs.push_back("report.csv");

    if (data.synthetic) {
        outputs.insert(outputs.end(),
                       {"ground_truth.json", "trajectories_true.jsonl",
                        "events.csv", "schema.json", "outcomes.csv"});
    }
    std::sort(outputs.begin(), outputs.end());

    json manifest{{"config", config.to_json()},
                  {"config_hash", config.hash_hex()},
                  {"seed", config.seed},
                  {"version", "0.1.0"},
                  {"n_stays_included", data.streams.size()},
                  {"outputs", outputs}};
    manifest["manifest_hash"] = [&] {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(
                          hash_tag(manifest.dump())));
        return std::string(buf);
    }();
    write_json_file(outdir + "/manifest.json", manifest);

    PipelineResult res;
    res.manifest = std::move(manifest);
    res.manifest_path = outdir + "/manifest.json";
    res.metrics = std::move(metrics);
    return res;
}

}  // namespace icudp
