#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "icudp/errors.hpp"

namespace icudp {

/// Full experiment configuration: a JSON file with nested sections.
/// CLI flags override file values; unset paths switch to synthetic input.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir;  // falls back to $ICUDP_OUT_DIR, then "out"
    double period_hours = 12.0;
    double inclusion_min_fraction = 0.5;
    int impute_rounds = 10;
    double ridge_lambda = 1.0;
    int t_window_days = 30;
    int jobs = 1;

    struct Synth {
        int h_true = 10;
        int n_features = 4;
        int n_stays = 2000;
        double separation = 5.0;
        double noise_scale = 1.0;
        double drop_fraction = 0.1;
        int max_periods = 500;
    } synth;

    struct Input {  // optional; all three set => skip simulation
        std::string events_csv;
        std::string schema_json;
        std::string outcomes_csv;
    } input;

    struct Cluster {
        int k = 10;
        int restarts = 5;
        int max_iter = 300;
        std::string windows = "pre_discharge";  // or "all"
    } cluster;

    struct Mdp {
        double alpha = 0.95;
        double g_keep = 1.0;
        double g_discharge = 0.0;
        double g_sd = 0.0;
        double g_ud = 3.0;  // primary operating point
        std::vector<double> gud_grid = {0.0, 0.5, 1.0, 2.0, 3.0, 5.0};
        double vi_tol = 1e-8;
    } mdp;

    struct Ope {
        int n_mc = 100;
        int n_bootstrap = 2000;
        double delta = 0.95;
        int horizon_cap = 1000;
    } ope;

    struct Splits {
        double fraction = 0.75;  // train share
        int n_splits = 50;
    } splits;

    bool use_synthetic_input() const { return input.events_csv.empty(); }

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static RunConfig load(const std::string& path);

    void validate() const;  // throws ConfigError

    /// FNV-1a over the canonical JSON dump; identical configs hash equal.
    std::uint64_t hash() const;
    std::string hash_hex() const;
};

}  // namespace icudp
