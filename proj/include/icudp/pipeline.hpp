#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "icudp/config.hpp"
#include "icudp/io.hpp"
#include "icudp/ope.hpp"

namespace icudp {

/// Per-split evaluation summary at the configured primary g(UD).
struct SplitMetrics {
    int split = 0;
    R2Triple r2;
    double rp2_gamma = 0.0;
    PolicyCostEstimate op, cp, rp1, rp2;
};

struct PipelineResult {
    json manifest;
    std::string manifest_path;
    std::vector<SplitMetrics> metrics;
};

/// Full experiment: simulate (or ingest) -> split -> preprocess -> cluster ->
/// estimate -> solve -> evaluate -> report. Every artifact lands under the
/// config's output dir; a rerun with the same config reproduces every byte.
PipelineResult run_pipeline(const RunConfig& config);

/// Deterministic index-parallel map: fn(i) runs on `jobs` threads, results
/// land in input order regardless of scheduling.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// Output directory resolution: explicit config value, else $ICUDP_OUT_DIR,
/// else "out".
std::string resolve_output_dir(const RunConfig& config);

/// Median/IQR summary rows over per-split metrics, as (metric, median, q1, q3).
std::vector<std::array<std::string, 4>> summarize_metrics(
    const std::vector<SplitMetrics>& metrics);

}  // namespace icudp
