#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include "icudp/io.hpp"
#include "icudp/ope.hpp"
#include "icudp/pipeline.hpp"
#include "icudp/rng.hpp"
#include "icudp/stats.hpp"

namespace fs = std::filesystem;
using namespace icudp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string default_out_dir() {
    if (const char* env = std::getenv("ICUDP_OUT_DIR"); env && *env)
        return env;
    return "out";
}

// audit columns for standalone subcommand tables: the seed plus a hash of
// the command's effective parameters
std::string audit_row(std::uint64_t seed, const json& params) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_tag(params.dump())));
    return std::to_string(seed) + "," + buf;
}

void write_table(const std::string& path, const std::string& header,
                 const std::vector<std::string>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << header << "\n";
    for (const auto& r : rows) out << r << "\n";
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> grid;
    for (const auto& tok : split_csv_line(csv)) {
        if (tok.empty()) continue;
        grid.push_back(std::stod(tok));
    }
    if (grid.empty()) throw ConfigError("empty g_UD grid");
    return grid;
}

CostSpec cost_from_flags(int h, double gud, double alpha, double gkeep,
                         double gdischarge, double gsd) {
    return CostSpec::uniform(h, gud, alpha, gkeep, gdischarge, gsd);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"icudp: discharge policy learning and evaluation toolkit"};
    app.require_subcommand(1);

    // ---- run ----
    auto* cmd_run = app.add_subcommand("run", "full pipeline from a config file");
    std::string run_config_path;
    std::string run_out;
    std::uint64_t run_seed = 0;
    int run_jobs = 0;
    bool run_seed_set = false;
    cmd_run->add_option("--config", run_config_path, "config JSON")->required();
    cmd_run->add_option("--out", run_out, "output directory override");
    cmd_run->add_option("--seed", run_seed, "seed override")
        ->each([&](const std::string&) { run_seed_set = true; });
    cmd_run->add_option("--jobs", run_jobs, "parallel split jobs override");

    // ---- simulate ----
    auto* cmd_sim = app.add_subcommand("simulate", "generate a synthetic cohort");
    int sim_h = 10, sim_f = 4, sim_stays = 2000, sim_max_periods = 500;
    double sim_sep = 5.0, sim_noise = 1.0, sim_drop = 0.1, sim_period = 12.0;
    std::uint64_t sim_seed = 0;
    std::string sim_out = default_out_dir();
    cmd_sim->add_option("--h", sim_h, "number of true states");
    cmd_sim->add_option("--features", sim_f, "feature dimension");
    cmd_sim->add_option("--stays", sim_stays, "number of stays");
    cmd_sim->add_option("--separation", sim_sep, "mean separation in noise units");
    cmd_sim->add_option("--noise", sim_noise, "feature noise scale");
    cmd_sim->add_option("--drop", sim_drop, "observation drop fraction");
    cmd_sim->add_option("--max-periods", sim_max_periods, "censor cap");
    cmd_sim->add_option("--period-hours", sim_period, "period length");
    cmd_sim->add_option("--seed", sim_seed, "seed");
    cmd_sim->add_option("--out", sim_out, "output directory");

    // ---- preprocess ----
    auto* cmd_pre = app.add_subcommand(
        "preprocess", "bin, cap, and impute raw event streams");
    std::string pre_events, pre_schema, pre_out = "matrices.csv";
    double pre_period = 12.0, pre_inclusion = 0.5, pre_lambda = 1.0;
    int pre_rounds = 10;
    cmd_pre->add_option("--events", pre_events, "events CSV")->required();
    cmd_pre->add_option("--schema", pre_schema, "schema JSON")->required();
    cmd_pre->add_option("--out", pre_out, "output matrices CSV");
    cmd_pre->add_option("--period-hours", pre_period, "period length");
    cmd_pre->add_option("--inclusion", pre_inclusion, "inclusion min fraction");
    cmd_pre->add_option("--rounds", pre_rounds, "imputation rounds");
    cmd_pre->add_option("--lambda", pre_lambda, "ridge regularization");

    // ---- cluster ----
    auto* cmd_cluster = app.add_subcommand(
        "cluster", "fit the health-state model by k-means");
    std::string cl_matrices, cl_schema, cl_out = "state_model.json";
    std::string cl_outcomes, cl_windows = "all", cl_wcss_ks, cl_wcss_out = "wcss.csv";
    int cl_k = 400, cl_restarts = 5, cl_max_iter = 300;
    std::uint64_t cl_seed = 0;
    cmd_cluster->add_option("--matrices", cl_matrices, "feature matrices CSV")
        ->required();
    cmd_cluster->add_option("--schema", cl_schema, "schema JSON")->required();
    cmd_cluster->add_option("--k", cl_k, "number of clusters");
    cmd_cluster->add_option("--seed", cl_seed, "seed");
    cmd_cluster->add_option("--restarts", cl_restarts, "k-means restarts");
    cmd_cluster->add_option("--max-iter", cl_max_iter, "Lloyd iteration cap");
    cmd_cluster->add_option("--outcomes", cl_outcomes,
                            "outcomes CSV (for --windows pre_discharge)");
    cmd_cluster->add_option("--windows", cl_windows,
                            "training windows: all | pre_discharge");
    cmd_cluster->add_option("--wcss", cl_wcss_ks,
                            "comma-separated k list for an elbow curve");
    cmd_cluster->add_option("--wcss-out", cl_wcss_out, "elbow curve CSV");
    cmd_cluster->add_option("--out", cl_out, "state model JSON");

    // ---- estimate ----
    auto* cmd_est = app.add_subcommand(
        "estimate", "estimate the transition model from trajectories");
    std::string est_trajs, est_out = "transition_model.json", est_validate;
    std::string est_r2_out = "r2.csv";
    int est_h = 0;
    double est_smoothing = 0.5;
    cmd_est->add_option("--trajectories", est_trajs, "trajectories JSONL")
        ->required();
    cmd_est->add_option("--h", est_h, "number of health states")->required();
    cmd_est->add_option("--smoothing", est_smoothing, "outcome smoothing");
    cmd_est->add_option("--validate", est_validate,
                        "held-out trajectories JSONL for an R^2 check");
    cmd_est->add_option("--r2-out", est_r2_out, "R^2 table CSV");
    cmd_est->add_option("--out", est_out, "transition model JSON");

    // ---- solve ----
    auto* cmd_solve = app.add_subcommand("solve", "compute the optimal policy");
    std::string so_model, so_policy_out = "policy.json",
                so_value_out = "value.json", so_method = "pi";
    double so_gud = 3.0, so_alpha = 0.95, so_gkeep = 1.0, so_gdisch = 0.0,
           so_gsd = 0.0, so_vi_tol = 1e-8;
    cmd_solve->add_option("--model", so_model, "transition model JSON")
        ->required();
    cmd_solve->add_option("--gud", so_gud, "unsuccessful-discharge penalty");
    cmd_solve->add_option("--alpha", so_alpha, "discount factor");
    cmd_solve->add_option("--g-keep", so_gkeep, "per-period keep cost");
    cmd_solve->add_option("--g-discharge", so_gdisch, "discharge cost");
    cmd_solve->add_option("--g-sd", so_gsd, "successful-discharge cost");
    cmd_solve->add_option("--method", so_method, "pi | vi");
    cmd_solve->add_option("--vi-tol", so_vi_tol, "value iteration tolerance");
    cmd_solve->add_option("--out-policy", so_policy_out, "policy JSON");
    cmd_solve->add_option("--out-value", so_value_out, "value function JSON");

    // ---- apply-policy ----
    auto* cmd_apply = app.add_subcommand(
        "apply-policy", "replay a policy over recorded trajectories");
    std::string ap_kind = "op", ap_trajs, ap_model, ap_policy,
                ap_out = "decisions.csv";
    double ap_gud = 3.0, ap_alpha = 0.95, ap_gkeep = 1.0, ap_gdisch = 0.0,
           ap_gsd = 0.0, ap_gamma = -1.0;
    int ap_mc = 100, ap_cap = 1000;
    std::uint64_t ap_seed = 0;
    cmd_apply->add_option("--kind", ap_kind, "op | cp | rp1 | rp2");
    cmd_apply->add_option("--trajectories", ap_trajs, "trajectories JSONL")
        ->required();
    cmd_apply->add_option("--model", ap_model, "transition model JSON")
        ->required();
    cmd_apply->add_option("--policy", ap_policy, "policy JSON (op / rp2 match)");
    cmd_apply->add_option("--gamma", ap_gamma,
                          "rp2 extension probability; <0 matches OP");
    cmd_apply->add_option("--gud", ap_gud, "unsuccessful-discharge penalty");
    cmd_apply->add_option("--alpha", ap_alpha, "discount");
    cmd_apply->add_option("--g-keep", ap_gkeep, "keep cost");
    cmd_apply->add_option("--g-discharge", ap_gdisch, "discharge cost");
    cmd_apply->add_option("--g-sd", ap_gsd, "successful-discharge cost");
    cmd_apply->add_option("--mc", ap_mc, "Monte-Carlo rollouts");
    cmd_apply->add_option("--horizon-cap", ap_cap, "rollout horizon cap");
    cmd_apply->add_option("--seed", ap_seed, "seed");
    cmd_apply->add_option("--out", ap_out, "decisions CSV");

    // ---- ope ----
    auto* cmd_ope = app.add_subcommand(
        "ope", "bootstrap policy cost bounds on a test set");
    std::string ope_trajs, ope_model, ope_policy, ope_out = "estimates.csv";
    double ope_gud = 3.0, ope_alpha = 0.95, ope_gkeep = 1.0, ope_gdisch = 0.0,
           ope_gsd = 0.0, ope_delta = 0.95;
    int ope_mc = 100, ope_boot = 2000, ope_cap = 1000;
    std::uint64_t ope_seed = 0;
    cmd_ope->add_option("--trajectories", ope_trajs, "test trajectories JSONL")
        ->required();
    cmd_ope->add_option("--model", ope_model, "transition model JSON")
        ->required();
    cmd_ope->add_option("--policy", ope_policy, "OP policy JSON")->required();
    cmd_ope->add_option("--gud", ope_gud, "unsuccessful-discharge penalty");
    cmd_ope->add_option("--alpha", ope_alpha, "discount");
    cmd_ope->add_option("--g-keep", ope_gkeep, "keep cost");
    cmd_ope->add_option("--g-discharge", ope_gdisch, "discharge cost");
    cmd_ope->add_option("--g-sd", ope_gsd, "successful-discharge cost");
    cmd_ope->add_option("--mc", ope_mc, "Monte-Carlo rollouts per stay");
    cmd_ope->add_option("--boot", ope_boot, "bootstrap resamples B");
    cmd_ope->add_option("--delta", ope_delta, "confidence level");
    cmd_ope->add_option("--horizon-cap", ope_cap, "rollout horizon cap");
    cmd_ope->add_option("--seed", ope_seed, "seed");
    cmd_ope->add_option("--out", ope_out, "estimates CSV");

    // ---- curves ----
    auto* cmd_curves = app.add_subcommand(
        "curves", "performance curves over a g(UD) grid");
    std::string cu_trajs, cu_model, cu_grid = "0,0.5,1,2,3,5",
                cu_out = "curves.csv";
    double cu_alpha = 0.95, cu_gkeep = 1.0, cu_gdisch = 0.0, cu_gsd = 0.0,
           cu_period = 12.0;
    int cu_mc = 100, cu_cap = 1000;
    std::uint64_t cu_seed = 0;
    cmd_curves->add_option("--trajectories", cu_trajs, "test trajectories JSONL")
        ->required();
    cmd_curves->add_option("--model", cu_model, "transition model JSON")
        ->required();
    cmd_curves->add_option("--gud-grid", cu_grid, "comma-separated penalties");
    cmd_curves->add_option("--alpha", cu_alpha, "discount");
    cmd_curves->add_option("--g-keep", cu_gkeep, "keep cost");
    cmd_curves->add_option("--g-discharge", cu_gdisch, "discharge cost");
    cmd_curves->add_option("--g-sd", cu_gsd, "successful-discharge cost");
    cmd_curves->add_option("--mc", cu_mc, "rollouts for deferred stays");
    cmd_curves->add_option("--horizon-cap", cu_cap, "rollout horizon cap");
    cmd_curves->add_option("--period-hours", cu_period, "period length");
    cmd_curves->add_option("--seed", cu_seed, "seed");
    cmd_curves->add_option("--out", cu_out, "curve table CSV");

    // ---- calibrate ----
    auto* cmd_cal = app.add_subcommand(
        "calibrate", "UD rate by realized clinician cost bucket");
    std::string cal_trajs, cal_out = "calibration.csv";
    double cal_gud = 3.0, cal_alpha = 0.95, cal_gkeep = 1.0, cal_gdisch = 0.0,
           cal_gsd = 0.0;
    int cal_buckets = 10, cal_h = 0;
    std::uint64_t cal_seed = 0;
    cmd_cal->add_option("--trajectories", cal_trajs, "test trajectories JSONL")
        ->required();
    cmd_cal->add_option("--h", cal_h, "number of health states")->required();
    cmd_cal->add_option("--gud", cal_gud, "unsuccessful-discharge penalty");
    cmd_cal->add_option("--alpha", cal_alpha, "discount");
    cmd_cal->add_option("--g-keep", cal_gkeep, "keep cost");
    cmd_cal->add_option("--g-discharge", cal_gdisch, "discharge cost");
    cmd_cal->add_option("--g-sd", cal_gsd, "successful-discharge cost");
    cmd_cal->add_option("--buckets", cal_buckets, "number of cost buckets");
    cmd_cal->add_option("--seed", cal_seed, "seed (audit column only)");
    cmd_cal->add_option("--out", cal_out, "calibration CSV");

    // ---- report ----
    auto* cmd_rep = app.add_subcommand(
        "report", "median/IQR summary of a finished run");
    std::string rep_dir, rep_out;
    cmd_rep->add_option("--run-dir", rep_dir, "pipeline output directory")
        ->required();
    cmd_rep->add_option("--out", rep_out, "summary CSV (default <run-dir>/report.csv)");

    CLI11_PARSE(app, argc, argv);

    if (*cmd_run) {
        RunConfig config = RunConfig::load(run_config_path);
        if (!run_out.empty()) config.output_dir = run_out;
        if (run_seed_set) config.seed = run_seed;
        if (run_jobs > 0) config.jobs = run_jobs;
        PipelineResult res = run_pipeline(config);
        std::cout << "run complete: " << res.manifest_path << "\n";
        return kExitOk;
    }

    if (*cmd_sim) {
        GroundTruthModel::MakeOptions opts;
        opts.h = sim_h;
        opts.n_features = sim_f;
        opts.separation = sim_sep;
        opts.noise_scale = sim_noise;
        opts.max_periods = sim_max_periods;
        GroundTruthModel gt = GroundTruthModel::make(opts, sim_seed);
        auto cohort = sample_cohort(gt, sim_stays,
                                    derive_seed(sim_seed, hash_tag("cohort")));
        FeatureSchema schema = synthetic_schema(sim_f);
        EmitOptions emit;
        emit.period_hours = sim_period;
        emit.drop_fraction = sim_drop;
        std::vector<RawEventStream> streams;
        std::vector<StayOutcome> outcomes;
        for (const auto& traj : cohort) {
            streams.push_back(emit_features(traj, gt, schema, sim_seed, emit));
            outcomes.push_back(StayOutcome{traj.stay_id, traj.terminal_event, 30});
        }
        fs::create_directories(sim_out);
        write_json_file(sim_out + "/ground_truth.json", ground_truth_to_json(gt));
        write_trajectories_jsonl(sim_out + "/trajectories_true.jsonl", cohort);
        write_events_csv(sim_out + "/events.csv", streams);
        write_json_file(sim_out + "/schema.json", schema_to_json(schema));
        write_outcomes_csv(sim_out + "/outcomes.csv", outcomes);
        std::cout << "simulated " << cohort.size() << " stays into " << sim_out
                  << "\n";
        return kExitOk;
    }

    if (*cmd_pre) {
        FeatureSchema schema = schema_from_json(read_json_file(pre_schema));
        auto streams = read_events_csv(pre_events);
        std::vector<RawEventStream> included;
        for (auto& s : streams)
            if (passes_inclusion(s, schema, pre_inclusion))
                included.push_back(std::move(s));
        if (included.empty()) throw DataError("no stays pass inclusion");
        std::vector<PeriodFeatureMatrix> binned;
        for (const auto& s : included)
            binned.push_back(bin_and_aggregate(s, schema, pre_period));
        FeaturePools pools = fit_feature_pools(binned);
        ImputeOptions opts{pre_rounds, pre_lambda};
        std::vector<PeriodFeatureMatrix> mats;
        std::vector<std::string> warnings;
        for (auto& m : binned) {
            m = cap_outliers(pools, std::move(m), &warnings);
            m = carry_forward_impute(std::move(m));
            mats.push_back(regression_impute(pools, std::move(m), opts));
        }
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        write_feature_matrices_csv(pre_out, mats, schema);
        std::cout << "wrote " << mats.size() << " stays to " << pre_out << "\n";
        return kExitOk;
    }

    if (*cmd_cluster) {
        FeatureSchema schema = schema_from_json(read_json_file(cl_schema));
        auto mats = read_feature_matrices_csv(cl_matrices, schema.size());
        std::unordered_set<std::string> keep_ids;
        bool filter = cl_windows == "pre_discharge";
        if (filter) {
            if (cl_outcomes.empty())
                throw ConfigError("--windows pre_discharge needs --outcomes");
            for (const auto& o : read_outcomes_csv(cl_outcomes))
                if (is_discharge(o.terminal_event)) keep_ids.insert(o.stay_id);
        }
        long rows = 0;
        for (const auto& m : mats)
            if (!filter || keep_ids.count(m.stay_id)) rows += m.periods();
        if (rows == 0) throw DataError("no clustering windows selected");
        Eigen::MatrixXd data(rows, schema.size());
        long r = 0;
        for (const auto& m : mats) {
            if (filter && !keep_ids.count(m.stay_id)) continue;
            data.middleRows(r, m.periods()) = m.values;
            r += m.periods();
        }
        KMeansOptions kopts{cl_max_iter, cl_restarts};
        StateModel model = fit_state_model(data, cl_k, cl_seed, kopts);
        write_json_file(cl_out, state_model_to_json(model));
        std::cout << "fitted " << cl_k << " states on " << rows
                  << " windows -> " << cl_out << "\n";
        if (!cl_wcss_ks.empty()) {
            std::vector<int> ks;
            for (double v : parse_grid(cl_wcss_ks))
                ks.push_back(static_cast<int>(v));
            auto curve =
                wcss_curve(model.scaler.transform(data), ks, cl_seed, kopts);
            json params{{"cmd", "wcss"}, {"ks", cl_wcss_ks}, {"seed", cl_seed}};
            std::vector<std::string> rows_out;
            for (auto [k, w] : curve)
                rows_out.push_back(std::to_string(k) + "," + format_double(w) +
                                   "," + audit_row(cl_seed, params));
            write_table(cl_wcss_out, "k,wcss,seed,config_hash", rows_out);
        }
        return kExitOk;
    }

    if (*cmd_est) {
        auto trajs = read_trajectories_jsonl(est_trajs);
        TransitionModel model =
            estimate_transition_model(trajs, est_h, est_smoothing);
        write_json_file(est_out, transition_model_to_json(model));
        std::cout << "estimated transition model -> " << est_out << "\n";
        if (!est_validate.empty()) {
            auto test = read_trajectories_jsonl(est_validate);
            R2Triple r2 = validate_r2(model, test);
            json params{{"cmd", "estimate"}, {"h", est_h}};
            write_table(est_r2_out, "r2_keep,r2_sd,r2_ud,seed,config_hash",
                        {format_double(r2.keep) + "," + format_double(r2.sd) +
                         "," + format_double(r2.ud) + "," +
                         audit_row(0, params)});
            std::cout << "r2_keep=" << format_double(r2.keep)
                      << " r2_sd=" << format_double(r2.sd)
                      << " r2_ud=" << format_double(r2.ud) << "\n";
        }
        return kExitOk;
    }

    if (*cmd_solve) {
        TransitionModel model =
            transition_model_from_json(read_json_file(so_model));
        CostSpec cost = cost_from_flags(model.h, so_gud, so_alpha, so_gkeep,
                                        so_gdisch, so_gsd);
        SolveResult res;
        if (so_method == "pi")
            res = policy_iteration(model, cost);
        else if (so_method == "vi")
            res = value_iteration(model, cost, so_vi_tol);
        else
            throw ConfigError("--method must be pi or vi");
        write_json_file(so_policy_out, policy_to_json(res.policy));
        write_json_file(so_value_out, value_function_to_json(res.value));
        int discharged = 0;
        for (Action a : res.policy.action)
            if (a == Action::Discharge) ++discharged;
        std::cout << so_method << " converged in " << res.iterations
                  << " iterations; discharge states: " << discharged << "/"
                  << model.h << "\n";
        return kExitOk;
    }

    if (*cmd_apply) {
        TransitionModel model =
            transition_model_from_json(read_json_file(ap_model));
        auto trajs = filter_discharged(read_trajectories_jsonl(ap_trajs));
        if (trajs.empty()) throw DataError("no discharged trajectories");
        CostSpec cost = cost_from_flags(model.h, ap_gud, ap_alpha, ap_gkeep,
                                        ap_gdisch, ap_gsd);
        PolicySpec spec;
        if (ap_kind == "op" || (ap_kind == "rp2" && ap_gamma < 0.0)) {
            if (ap_policy.empty())
                throw ConfigError("--kind " + ap_kind + " needs --policy");
        }
        if (ap_kind == "op")
            spec = PolicySpec::make_op(
                policy_from_json(read_json_file(ap_policy)));
        else if (ap_kind == "cp")
            spec = PolicySpec::make_cp();
        else if (ap_kind == "rp1")
            spec = PolicySpec::make_rp1();
        else if (ap_kind == "rp2") {
            double gamma = ap_gamma;
            if (gamma < 0.0)
                gamma = match_rp2_gamma(
                    policy_from_json(read_json_file(ap_policy)), trajs);
            spec = PolicySpec::make_rp2(gamma);
        } else
            throw ConfigError("--kind must be op|cp|rp1|rp2");

        json params{{"cmd", "apply-policy"}, {"kind", ap_kind},
                    {"gud", ap_gud},         {"alpha", ap_alpha},
                    {"mc", ap_mc},           {"cap", ap_cap}};
        std::vector<std::string> rows;
        for (const auto& traj : trajs) {
            auto res = trajectory_cost(traj, spec, model, cost, ap_mc, ap_seed,
                                       ap_cap);
            rows.push_back(traj.stay_id + "," + std::to_string(traj.length()) +
                           "," + format_double(res.cost) + "," +
                           format_double(res.mean_periods) + "," +
                           (res.deviated ? "1" : "0") + "," +
                           (res.hit_horizon_cap ? "1" : "0") + "," +
                           audit_row(ap_seed, params));
        }
        write_table(ap_out,
                    "stay_id,recorded_periods,cost,mean_periods,deviated,hit_"
                    "cap,seed,config_hash",
                    rows);
        std::cout << "applied " << ap_kind << " to " << trajs.size()
                  << " stays -> " << ap_out << "\n";
        return kExitOk;
    }

    if (*cmd_ope) {
        TransitionModel model =
            transition_model_from_json(read_json_file(ope_model));
        auto trajs = filter_discharged(read_trajectories_jsonl(ope_trajs));
        if (trajs.empty()) throw DataError("no discharged trajectories");
        Policy op = policy_from_json(read_json_file(ope_policy));
        CostSpec cost = cost_from_flags(model.h, ope_gud, ope_alpha, ope_gkeep,
                                        ope_gdisch, ope_gsd);
        OpeConfig oc;
        oc.n_mc = ope_mc;
        oc.n_bootstrap = ope_boot;
        oc.delta = ope_delta;
        oc.horizon_cap = ope_cap;
        oc.seed = ope_seed;
        double gamma = match_rp2_gamma(op, trajs);
        json params{{"cmd", "ope"},   {"gud", ope_gud}, {"mc", ope_mc},
                    {"boot", ope_boot}, {"delta", ope_delta}};
        std::vector<std::string> rows;
        auto add = [&](const std::string& name, const PolicySpec& spec) {
            auto costs = policy_costs(trajs, spec, model, cost, oc);
            auto est = bootstrap_bounds(costs, oc.n_bootstrap, oc.delta, oc.seed);
            rows.push_back(name + "," + format_double(est.mean_cost) + "," +
                           format_double(est.lower_bound) + "," +
                           format_double(est.upper_bound) + "," +
                           audit_row(ope_seed, params));
        };
        add("OP", PolicySpec::make_op(op));
        add("CP", PolicySpec::make_cp());
        add("RP1", PolicySpec::make_rp1());
        add("RP2", PolicySpec::make_rp2(gamma));
        write_table(ope_out, "policy,mean_cost,lb,ub,seed,config_hash", rows);
        std::cout << "wrote bounds for 4 policies -> " << ope_out << "\n";
        return kExitOk;
    }

    if (*cmd_curves) {
        TransitionModel model =
            transition_model_from_json(read_json_file(cu_model));
        auto trajs = filter_discharged(read_trajectories_jsonl(cu_trajs));
        if (trajs.empty()) throw DataError("no discharged trajectories");
        auto grid = parse_grid(cu_grid);
        CostSpec cost = cost_from_flags(model.h, grid.front(), cu_alpha,
                                        cu_gkeep, cu_gdisch, cu_gsd);
        OpeConfig oc;
        oc.n_mc = cu_mc;
        oc.horizon_cap = cu_cap;
        oc.seed = cu_seed;
        auto curve = performance_curves(model, cost, grid, trajs, oc);
        json params{{"cmd", "curves"}, {"grid", cu_grid}, {"mc", cu_mc}};
        std::vector<std::string> rows;
        for (const auto& pt : curve) {
            auto one = [&](const std::string& name, const PolicyCurveStats& s) {
                rows.push_back(
                    format_double(pt.g_ud) + "," + format_double(pt.rp2_gamma) +
                    "," + name + "," + std::to_string(s.n_discharged) + "," +
                    format_double(s.frac_ud) + "," +
                    format_double(s.mean_expected_los_periods * cu_period /
                                  24.0) +
                    "," + audit_row(cu_seed, params));
            };
            one("OP", pt.op);
            one("RP2", pt.rp2);
            one("CP", pt.cp);
        }
        write_table(cu_out,
                    "g_ud,rp2_gamma,policy,n_discharged,frac_ud,mean_expected_"
                    "los_days,seed,config_hash",
                    rows);
        std::cout << "wrote " << rows.size() << " curve rows -> " << cu_out
                  << "\n";
        return kExitOk;
    }

    if (*cmd_cal) {
        auto trajs = filter_discharged(read_trajectories_jsonl(cal_trajs));
        if (trajs.empty()) throw DataError("no discharged trajectories");
        CostSpec cost = cost_from_flags(cal_h, cal_gud, cal_alpha, cal_gkeep,
                                        cal_gdisch, cal_gsd);
        auto rows_data = policy_calibration(trajs, cost, cal_buckets);
        json params{{"cmd", "calibrate"}, {"gud", cal_gud},
                    {"buckets", cal_buckets}};
        std::vector<std::string> rows;
        for (const auto& row : rows_data)
            rows.push_back(format_double(row.cost_lo) + "," +
                           format_double(row.cost_hi) + "," +
                           std::to_string(row.n) + "," +
                           format_double(row.ud_rate) + "," +
                           audit_row(cal_seed, params));
        write_table(cal_out, "cost_lo,cost_hi,n,ud_rate,seed,config_hash", rows);
        std::cout << "wrote " << rows.size() << " calibration buckets -> "
                  << cal_out << "\n";
        return kExitOk;
    }

    if (*cmd_rep) {
        std::string metrics_path = rep_dir + "/metrics.csv";
        std::ifstream in(metrics_path);
        if (!in) throw DataError("cannot open '" + metrics_path + "'");
        std::string line;
        if (!std::getline(in, line)) throw DataError("metrics.csv is empty");
        auto header = split_csv_line(line);
        std::vector<std::vector<double>> cols(header.size());
        std::string audit_seed = "0", audit_hash = "0";
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto fields = split_csv_line(line);
            for (std::size_t c = 0; c + 2 < fields.size(); ++c)
                cols[c].push_back(std::stod(fields[c]));
            audit_seed = fields[fields.size() - 2];
            audit_hash = fields[fields.size() - 1];
        }
        if (cols.empty() || cols[0].empty())
            throw DataError("metrics.csv has no rows");
        std::vector<std::string> rows;
        for (std::size_t c = 1; c + 2 < header.size(); ++c) {
            auto v = cols[c];
            std::sort(v.begin(), v.end());
            rows.push_back(header[c] + "," + format_double(median_sorted(v)) +
                           "," + format_double(percentile_sorted(v, 0.25)) +
                           "," + format_double(percentile_sorted(v, 0.75)) +
                           "," + audit_seed + "," + audit_hash);
        }
        std::string out_path =
            rep_out.empty() ? rep_dir + "/summary.csv" : rep_out;
        write_table(out_path, "metric,median,q1,q3,seed,config_hash", rows);
        std::cout << "wrote summary -> " << out_path << "\n";
        return kExitOk;
    }

    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
