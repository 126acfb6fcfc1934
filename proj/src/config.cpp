#include "icudp/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "icudp/rng.hpp"

namespace icudp {

using nlohmann::json;

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    maybe(j, "seed", c.seed);
    maybe(j, "output_dir", c.output_dir);
    maybe(j, "period_hours", c.period_hours);
    maybe(j, "inclusion_min_fraction", c.inclusion_min_fraction);
    maybe(j, "impute_rounds", c.impute_rounds);
    maybe(j, "ridge_lambda", c.ridge_lambda);
    maybe(j, "t_window_days", c.t_window_days);
    maybe(j, "jobs", c.jobs);
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        maybe(s, "h_true", c.synth.h_true);
        maybe(s, "n_features", c.synth.n_features);
        maybe(s, "n_stays", c.synth.n_stays);
        maybe(s, "separation", c.synth.separation);
        maybe(s, "noise_scale", c.synth.noise_scale);
        maybe(s, "drop_fraction", c.synth.drop_fraction);
        maybe(s, "max_periods", c.synth.max_periods);
    }
    if (j.contains("input")) {
        const auto& s = j.at("input");
        maybe(s, "events_csv", c.input.events_csv);
        maybe(s, "schema_json", c.input.schema_json);
        maybe(s, "outcomes_csv", c.input.outcomes_csv);
    }
    if (j.contains("cluster")) {
        const auto& s = j.at("cluster");
        maybe(s, "k", c.cluster.k);
        maybe(s, "restarts", c.cluster.restarts);
        maybe(s, "max_iter", c.cluster.max_iter);
        maybe(s, "windows", c.cluster.windows);
    }
    if (j.contains("mdp")) {
        const auto& s = j.at("mdp");
        maybe(s, "alpha", c.mdp.alpha);
        maybe(s, "g_keep", c.mdp.g_keep);
        maybe(s, "g_discharge", c.mdp.g_discharge);
        maybe(s, "g_sd", c.mdp.g_sd);
        maybe(s, "g_ud", c.mdp.g_ud);
        maybe(s, "gud_grid", c.mdp.gud_grid);
        maybe(s, "vi_tol", c.mdp.vi_tol);
    }
    if (j.contains("ope")) {
        const auto& s = j.at("ope");
        maybe(s, "n_mc", c.ope.n_mc);
        maybe(s, "n_bootstrap", c.ope.n_bootstrap);
        maybe(s, "delta", c.ope.delta);
        maybe(s, "horizon_cap", c.ope.horizon_cap);
    }
    if (j.contains("splits")) {
        const auto& s = j.at("splits");
        maybe(s, "fraction", c.splits.fraction);
        maybe(s, "n_splits", c.splits.n_splits);
    }
    return c;
}

json RunConfig::to_json() const {
    return json{
        {"seed", seed},
        {"output_dir", output_dir},
        {"period_hours", period_hours},
        {"inclusion_min_fraction", inclusion_min_fraction},
        {"impute_rounds", impute_rounds},
        {"ridge_lambda", ridge_lambda},
        {"t_window_days", t_window_days},
        {"jobs", jobs},
        {"synth",
         {{"h_true", synth.h_true},
          {"n_features", synth.n_features},
          {"n_stays", synth.n_stays},
          {"separation", synth.separation},
          {"noise_scale", synth.noise_scale},
          {"drop_fraction", synth.drop_fraction},
          {"max_periods", synth.max_periods}}},
        {"input",
         {{"events_csv", input.events_csv},
          {"schema_json", input.schema_json},
          {"outcomes_csv", input.outcomes_csv}}},
        {"cluster",
         {{"k", cluster.k},
          {"restarts", cluster.restarts},
          {"max_iter", cluster.max_iter},
          {"windows", cluster.windows}}},
        {"mdp",
         {{"alpha", mdp.alpha},
          {"g_keep", mdp.g_keep},
          {"g_discharge", mdp.g_discharge},
          {"g_sd", mdp.g_sd},
          {"g_ud", mdp.g_ud},
          {"gud_grid", mdp.gud_grid},
          {"vi_tol", mdp.vi_tol}}},
        {"ope",
         {{"n_mc", ope.n_mc},
          {"n_bootstrap", ope.n_bootstrap},
          {"delta", ope.delta},
          {"horizon_cap", ope.horizon_cap}}},
        {"splits",
         {{"fraction", splits.fraction}, {"n_splits", splits.n_splits}}}};
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid config JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

void RunConfig::validate() const {
    if (period_hours <= 0.0) throw ConfigError("period_hours must be > 0");
    if (inclusion_min_fraction < 0.0 || inclusion_min_fraction > 1.0)
        throw ConfigError("inclusion_min_fraction must lie in [0,1]");
    if (impute_rounds < 0) throw ConfigError("impute_rounds must be >= 0");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (!(mdp.alpha > 0.0 && mdp.alpha < 1.0))
        throw ConfigError("mdp.alpha must lie in (0,1)");
    if (mdp.g_ud < 0.0) throw ConfigError("mdp.g_ud must be >= 0");
    for (double g : mdp.gud_grid)
        if (g < 0.0) throw ConfigError("gud_grid values must be >= 0");
    if (cluster.k < 2) throw ConfigError("cluster.k must be >= 2");
    if (cluster.restarts < 1) throw ConfigError("cluster.restarts must be >= 1");
    if (cluster.windows != "pre_discharge" && cluster.windows != "all")
        throw ConfigError("cluster.windows must be 'pre_discharge' or 'all'");
    if (ope.n_mc < 1) throw ConfigError("ope.n_mc must be >= 1");
    if (ope.n_bootstrap < 1) throw ConfigError("ope.n_bootstrap must be >= 1");
    if (!(ope.delta > 0.0 && ope.delta < 1.0))
        throw ConfigError("ope.delta must lie in (0,1)");
    if (ope.horizon_cap < 1) throw ConfigError("ope.horizon_cap must be >= 1");
    if (!(splits.fraction > 0.0 && splits.fraction < 1.0))
        throw ConfigError("splits.fraction must lie in (0,1)");
    if (splits.n_splits < 1) throw ConfigError("splits.n_splits must be >= 1");
    if (!use_synthetic_input()) {
        if (input.schema_json.empty() || input.outcomes_csv.empty())
            throw ConfigError(
                "real input needs events_csv, schema_json and outcomes_csv");
    } else {
        if (synth.h_true < 2) throw ConfigError("synth.h_true must be >= 2");
        if (synth.n_stays < 1) throw ConfigError("synth.n_stays must be >= 1");
        if (synth.drop_fraction < 0.0 || synth.drop_fraction >= 1.0)
            throw ConfigError("synth.drop_fraction must lie in [0,1)");
    }
}

std::uint64_t RunConfig::hash() const {
    return hash_tag(to_json().dump());
}

std::string RunConfig::hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash()));
    return buf;
}

}  // namespace icudp
