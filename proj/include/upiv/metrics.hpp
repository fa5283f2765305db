#pragma once

#include "upiv/baselines.hpp"
#include "upiv/flow_field.hpp"
#include "upiv/lk_pyramidal.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace upiv {

struct AngularErrorField {
    int width = 0;
    int height = 0;
    std::vector<double> phi;          // degrees, 0 where excluded
    std::vector<std::uint8_t> mask;   // 1 = included

    // Excludes pixels closer than `margin` to any border.
    void apply_margin(int margin);
    std::size_t included() const;
};

// Space-time angle between (u_c, v_c, k) and (u_e, v_e, k), in degrees.
double angular_error_deg(Vec2 truth, Vec2 estimate, double k);

AngularErrorField angular_error(const FlowField& estimate, const FlowField& truth, double k = 1.0);

struct MetricsReport {
    double aae = 0.0;               // mean angular error, degrees
    double sad = 0.0;               // population std-dev of angular error, degrees
    double epe = 0.0;               // mean endpoint error, px (supplementary)
    double outlier_fraction = 0.0;  // endpoint error > 1 px (supplementary)
    double runtime = 0.0;           // seconds
    std::size_t pixel_count = 0;
    double frame_interval = 1.0;
};

inline constexpr double kOutlierThresholdPx = 1.0;

// Throws Errc::empty_mask when no pixel is included.
MetricsReport summarize(const AngularErrorField& err, const FlowField& estimate,
                        const FlowField& truth, double runtime_s);

// Pools several frame pairs into one report.
MetricsReport summarize(const std::vector<AngularErrorField>& errs,
                        const std::vector<FlowField>& estimates,
                        const std::vector<FlowField>& truths, double runtime_s);

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

struct ZeroFlowParams {};

struct AlgorithmSpec {
    std::string name;   // "lk", "cc", "hs", "zero"
    std::string label;  // parameter description shown in reports
    std::variant<LKParams, CCParams, HSParams, ZeroFlowParams> params;

    static AlgorithmSpec lk(const LKParams& p);
    static AlgorithmSpec cc(const CCParams& p);
    static AlgorithmSpec hs(const HSParams& p);
    static AlgorithmSpec zero();
};

struct AlgorithmOutput {
    FlowField flow;
    double ambiguous_fraction = -1.0;  // cross-correlation only
};

AlgorithmOutput run_algorithm(const AlgorithmSpec& algo, const ImageFrame& a, const ImageFrame& b,
                              unsigned workers);

struct BenchmarkConfig {
    double frame_interval = 1.0;  // k in the angular error
    int repeats = 3;              // runtime is the median over repeats
    int margin = 0;               // border pixels excluded from scoring
    unsigned workers = 1;
    bool sort_by_aae = false;     // otherwise rows keep algorithm order
    std::vector<int> pairs;       // frame-pair indices; empty = all consecutive pairs
};

struct BenchmarkRow {
    std::string algorithm;
    std::string parameter;
    bool ok = false;
    std::string error;  // diagnostic when !ok
    MetricsReport report;
    double ambiguous_fraction = -1.0;
};

struct Dataset {
    std::vector<ImageFrame> frames;
    std::vector<FlowField> truth;  // truth[i] for frames[i] -> frames[i+1]
};

std::vector<BenchmarkRow> benchmark(const std::vector<AlgorithmSpec>& algorithms,
                                    const Dataset& dataset, const BenchmarkConfig& config);

}  // namespace upiv
