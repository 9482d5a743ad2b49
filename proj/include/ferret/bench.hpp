#pragma once

#include <cstdint>

#include "ferret/ferretnet.hpp"
#include "ferret/lpd.hpp"

namespace ferret::bench {

struct BenchConfig {
    int batch_size = 128;
    int image_size = 256;
    double duration_seconds = 10.0;
    int warmup_batches = 10;
    bool include_lpd = true;
    lpd::NeighborhoodSpec spec;
    std::uint64_t seed = 0;
};

struct BenchResult {
    double fps_full = 0.0;        // images/s through LPD extraction + model
    double fps_model_only = 0.0;  // images/s through the model alone
    double lpd_ms_per_batch = 0.0;
    double model_ms_per_batch = 0.0;
    double p50_ms = 0.0;  // per-batch full-pipeline latency percentiles
    double p95_ms = 0.0;
    int batches = 0;
    int batch_size = 0;
    int threads = 0;
};

/// Steady-state throughput over synthetic random batches. Warmup batches
/// are excluded from timing. The LPD stage and the model forward are timed
/// separately within the same run, so fps_full (both stages) can never
/// exceed fps_model_only.
BenchResult benchmark_throughput(net::FerretNet& model, const BenchConfig& config);

}  // namespace ferret::bench
