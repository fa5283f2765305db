#pragma once

#include "upiv/baselines.hpp"
#include "upiv/lk_pyramidal.hpp"
#include "upiv/metrics.hpp"
#include "upiv/plot.hpp"
#include "upiv/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace upiv {

using json = nlohmann::json;

// Flat configuration document with one object per parameter block:
//   { "run": {...}, "lk": {...}, "cc": {...}, "hs": {...},
//     "scene": {...}, "flow_model": {...}, "bench": {...}, "plot": {...} }
// Unknown sections or keys are rejected with Errc::invalid_config.
struct RunConfig {
    std::string command;  // compute | bench | synth | plot
    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path truth;  // bench: directory with truth_*.flo (defaults to input)
    std::string algorithm = "lk";  // compute: lk | cc | hs
    std::string preset;            // synth: scene preset name
    std::string plot_style = "magnitude";
    unsigned workers = 1;
    std::optional<std::uint64_t> seed;
    int image_bit_depth = 8;

    LKParams lk;
    CCParams cc;
    HSParams hs;
    SceneSpec scene;
    FlowModel flow_model;
    BenchmarkConfig bench;
    PlotOptions plot;
    // Benchmark sweep lists.
    std::vector<int> bench_lk_depths{1, 2, 3, 4};
    std::vector<double> bench_hs_alphas{0.25, 0.5, 0.75};
    std::vector<int> bench_cc_templates{32, 48, 64};

    // Validates every parameter block; throws Errc::invalid_config.
    void validate() const;
};

void apply_config(RunConfig& config, const json& doc);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

json to_json(const LKParams& p);
json to_json(const CCParams& p);
json to_json(const HSParams& p);
json to_json(const SceneSpec& s);
json to_json(const FlowModel& m);

LKParams lk_params_from_json(const json& j, LKParams base = {});
CCParams cc_params_from_json(const json& j, CCParams base = {});
HSParams hs_params_from_json(const json& j, HSParams base = {});
SceneSpec scene_from_json(const json& j, SceneSpec base = {});
FlowModel flow_model_from_json(const json& j);

// The algorithm rows `bench` runs: L-K per depth, H-S per alpha, cross-
// correlation per template size (remaining parameters from the config blocks).
std::vector<AlgorithmSpec> bench_algorithms(const RunConfig& config);

// Report tables. CSV for reading, JSON for machines (schema in README).
std::string report_csv(const std::vector<BenchmarkRow>& rows);
json report_json(const std::vector<BenchmarkRow>& rows, const json& metadata = json::object());
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace upiv
