#include "upiv/config.hpp"
#include "upiv/error.hpp"
#include "upiv/io.hpp"
#include "upiv/plot.hpp"
#include "upiv/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace upiv;

namespace {

// Command-line values that override the config file when given.
struct Overrides {
    std::string config;
    std::string input, output, truth, flow, algorithm, preset, style;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    std::optional<int> depth, radius, iterations, template_size, search_radius, grid_step, frames, bit_depth,
        repeats, margin, quiver_step;
    std::optional<double> alpha, frame_interval, arrow_scale, max_speed;
    std::optional<std::string> weight_mode, cc_method, subpixel;
    bool sort = false;
};

std::string frame_name(const char* prefix, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04zu%s", prefix, i, ext);
    return buf;
}

RunConfig resolve(const std::string& command, const Overrides& o) {
    RunConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    c.command = command;
    if (!o.input.empty()) c.input = o.input;
    if (!o.output.empty()) c.output = o.output;
    if (!o.truth.empty()) c.truth = o.truth;
    if (!o.flow.empty()) c.input = o.flow;
    if (!o.algorithm.empty()) c.algorithm = o.algorithm;
    if (!o.preset.empty()) c.preset = o.preset;
    if (!o.style.empty()) c.plot_style = o.style;
    if (o.workers) c.workers = *o.workers;
    if (o.seed) c.seed = *o.seed;
    if (o.bit_depth) c.image_bit_depth = *o.bit_depth;

    if (o.depth) {
        c.lk.pyramid_depth = *o.depth;
        c.hs.pyramid_depth = *o.depth;
        c.bench_lk_depths = {*o.depth};
    }
    if (o.radius) c.lk.window_radius = *o.radius;
    if (o.iterations) {
        c.lk.max_iterations = *o.iterations;
        c.hs.iterations = *o.iterations;
    }
    if (o.weight_mode) {
        json j = {{"weight_mode", *o.weight_mode}};
        c.lk = lk_params_from_json(j, c.lk);
    }
    if (o.alpha) {
        c.hs.alpha = *o.alpha;
        c.bench_hs_alphas = {*o.alpha};
    }
    if (o.template_size) {
        c.cc.template_size = *o.template_size;
        c.bench_cc_templates = {*o.template_size};
    }
    if (o.search_radius) c.cc.search_radius = *o.search_radius;
    if (o.grid_step) c.cc.grid_step = *o.grid_step;
    if (o.cc_method) c.cc = cc_params_from_json(json{{"method", *o.cc_method}}, c.cc);
    if (o.subpixel) c.cc = cc_params_from_json(json{{"subpixel_mode", *o.subpixel}}, c.cc);
    if (o.frames) c.scene.frames = *o.frames;
    if (o.frame_interval) c.bench.frame_interval = *o.frame_interval;
    if (o.repeats) c.bench.repeats = *o.repeats;
    if (o.margin) c.bench.margin = *o.margin;
    if (o.sort) c.bench.sort_by_aae = true;
    if (o.quiver_step) c.plot.quiver_step = *o.quiver_step;
    if (o.arrow_scale) c.plot.arrow_scale = *o.arrow_scale;
    if (o.max_speed) c.plot.max_speed = *o.max_speed;
    c.bench.workers = c.workers;

    if (command == "synth" && !c.preset.empty()) {
        // The preset supplies scene and model; explicit overrides win.
        ScenePreset p = scene_preset(c.preset);
        const int frames = o.frames ? *o.frames : p.scene.frames;
        c.scene = p.scene;
        c.scene.frames = frames;
        c.flow_model = p.model;
    }
    if (c.seed) c.scene.seed = *c.seed;
    if (command == "synth" && c.flow_model.components.empty())
        throw Error(Errc::invalid_config, "synth needs --preset or a flow_model section");
    if (c.flow_model.components.empty()) c.flow_model = FlowModel::uniform(0.0, 0.0);

    c.validate();
    if (c.output.empty()) throw Error(Errc::invalid_config, "--out is required");
    if (command != "synth" && c.input.empty())
        throw Error(Errc::invalid_config, command == "plot" ? "--flow is required" : "--input is required");
    return c;
}

AlgorithmSpec selected_algorithm(const RunConfig& c) {
    if (c.algorithm == "lk") return AlgorithmSpec::lk(c.lk);
    if (c.algorithm == "cc") return AlgorithmSpec::cc(c.cc);
    return AlgorithmSpec::hs(c.hs);
}

int run_synth(const RunConfig& c) {
    fs::create_directories(c.output);
    const Sequence seq = generate_sequence(c.scene, c.flow_model);
    for (std::size_t i = 0; i < seq.frames.size(); ++i)
        write_image(seq.frames[i], c.output / frame_name("frame", i, ".png"), c.image_bit_depth);
    for (std::size_t i = 0; i < seq.truth.size(); ++i)
        write_flow(seq.truth[i], c.output / frame_name("truth", i, ".flo"));
    json meta = {{"preset", c.preset},
                 {"scene", to_json(c.scene)},
                 {"flow_model", to_json(c.flow_model)},
                 {"stats",
                  {{"particles", seq.stats.particles},
                   {"transitions", seq.stats.transitions},
                   {"replacements", seq.stats.replacements}}}};
    write_text(c.output / "scene.json", meta.dump(2) + "\n");
    std::cout << "wrote " << seq.frames.size() << " frames and " << seq.truth.size() << " truth flows to "
              << c.output.string() << "\n";
    return 0;
}

int run_compute(const RunConfig& c) {
    const std::vector<ImageFrame> frames = read_sequence(c.input);
    fs::create_directories(c.output);
    const AlgorithmSpec algo = selected_algorithm(c);
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        const AlgorithmOutput out = run_algorithm(algo, frames[i], frames[i + 1], c.workers);
        const fs::path path = c.output / frame_name("flow", i, ".flo");
        write_flow(out.flow, path);
        std::cout << path.string() << ": " << out.flow.valid_count() << "/"
                  << static_cast<std::size_t>(out.flow.width()) * out.flow.height() << " valid\n";
    }
    return 0;
}

std::vector<FlowField> read_truth(const fs::path& dir, std::size_t count) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("truth_", 0) == 0 && entry.path().extension() == ".flo")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.size() < count)
        throw Error(Errc::io, "expected " + std::to_string(count) + " truth_*.flo files in " + dir.string() +
                                  ", found " + std::to_string(files.size()));
    std::vector<FlowField> truth;
    for (std::size_t i = 0; i < count; ++i) truth.push_back(read_flow(files[i]));
    return truth;
}

int run_bench(const RunConfig& c) {
    Dataset data;
    data.frames = read_sequence(c.input);
    const fs::path truth_dir = c.truth.empty() ? c.input : c.truth;
    data.truth = read_truth(truth_dir, data.frames.size() - 1);
    const std::vector<BenchmarkRow> rows = benchmark(bench_algorithms(c), data, c.bench);

    fs::create_directories(c.output);
    write_text(c.output / "report.csv", report_csv(rows));
    json meta = {{"input", c.input.string()},
                 {"frame_interval", c.bench.frame_interval},
                 {"repeats", c.bench.repeats},
                 {"margin", c.bench.margin},
                 {"workers", c.workers},
                 {"lk", to_json(c.lk)},
                 {"cc", to_json(c.cc)},
                 {"hs", to_json(c.hs)}};
    write_text(c.output / "report.json", report_json(rows, meta).dump(2) + "\n");

    std::printf("%-10s %-22s %10s %10s %10s %10s\n", "algorithm", "parameter", "AAE(deg)", "SAD(deg)", "EPE(px)",
                "time(s)");
    bool any_failed = false;
    for (const BenchmarkRow& r : rows) {
        if (r.ok)
            std::printf("%-10s %-22s %10.4f %10.4f %10.4f %10.4f\n", r.algorithm.c_str(), r.parameter.c_str(),
                        r.report.aae, r.report.sad, r.report.epe, r.report.runtime);
        else
            std::printf("%-10s %-22s failed: %s\n", r.algorithm.c_str(), r.parameter.c_str(), r.error.c_str());
        any_failed = any_failed || !r.ok;
    }
    return any_failed ? 1 : 0;
}

int run_plot(const RunConfig& c) {
    const FlowField flow = read_flow(c.input);
    const PlotStyle style = parse_plot_style(c.plot_style);
    const RgbImage image = render_plot(flow, style, c.plot);
    char scale[64];
    std::snprintf(scale, sizeof scale, "%g", c.plot.arrow_scale);
    write_png_rgb(image, c.output,
                  {{"Software", "upiv"}, {"Style", c.plot_style}, {"ArrowScalePxPerUnit", scale}});
    std::cout << "wrote " << c.output.string() << " (" << image.width << "x" << image.height << ")\n";
    return 0;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file; command-line flags override it")
        ->check(CLI::ExistingFile);
    cmd->add_option("--workers", o.workers, "Worker threads (0 = all hardware threads)");
}

void add_algorithm_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--depth", o.depth, "Pyramid depth (L-K levels; H-S levels)");
    cmd->add_option("--radius", o.radius, "L-K window radius r (window 2r+1)");
    cmd->add_option("--iterations", o.iterations, "L-K max iterations per level; H-S sweeps per level");
    cmd->add_option("--weights", o.weight_mode, "L-K window weights")
        ->check(CLI::IsMember({"uniform", "gaussian"}));
    cmd->add_option("--alpha", o.alpha, "H-S smoothness weight");
    cmd->add_option("--template", o.template_size, "Cross-correlation template size, px");
    cmd->add_option("--search", o.search_radius, "Cross-correlation search radius, px");
    cmd->add_option("--grid-step", o.grid_step, "Cross-correlation window spacing, px");
    cmd->add_option("--cc-method", o.cc_method, "Correlation evaluation")->check(CLI::IsMember({"direct", "fft"}));
    cmd->add_option("--subpixel", o.subpixel, "Correlation peak refinement")
        ->check(CLI::IsMember({"none", "parabolic"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"upiv: dense particle-image velocimetry by pyramidal Lucas-Kanade optical flow"};
    app.require_subcommand(1, 1);
    Overrides o;

    CLI::App* compute = app.add_subcommand("compute", "Compute flow for every consecutive frame pair");
    add_common(compute, o);
    compute->add_option("--input", o.input, "Image directory or list file");
    compute->add_option("--algo", o.algorithm, "Algorithm")->check(CLI::IsMember({"lk", "cc", "hs"}));
    compute->add_option("--out", o.output, "Output directory for flow_NNNN.flo");
    add_algorithm_flags(compute, o);

    CLI::App* bench = app.add_subcommand("bench", "Score algorithms against truth flows");
    add_common(bench, o);
    bench->add_option("--input", o.input, "Image directory or list file");
    bench->add_option("--truth", o.truth, "Directory with truth_NNNN.flo (default: input directory)");
    bench->add_option("--out", o.output, "Output directory for report.csv and report.json");
    bench->add_option("--frame-interval", o.frame_interval, "Temporal component k of the angular error");
    bench->add_option("--repeats", o.repeats, "Timing repeats (median reported)");
    bench->add_option("--margin", o.margin, "Border pixels excluded from scoring");
    bench->add_flag("--sort", o.sort, "Sort rows by AAE");
    add_algorithm_flags(bench, o);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic particle sequence with truth flows");
    add_common(synth, o);
    synth->add_option("--preset", o.preset, "Scene preset")->check(CLI::IsMember(scene_preset_names()));
    synth->add_option("--out", o.output, "Output directory");
    synth->add_option("--seed", o.seed, "RNG seed");
    synth->add_option("--frames", o.frames, "Number of frames");
    synth->add_option("--bit-depth", o.bit_depth, "PNG bit depth")->check(CLI::IsMember({8, 16}));

    CLI::App* plot = app.add_subcommand("plot", "Render a flow file as an image");
    add_common(plot, o);
    plot->add_option("--flow", o.flow, "Flow file (.flo)");
    plot->add_option("--style", o.style, "Plot style")
        ->check(CLI::IsMember({"quiver", "magnitude", "combined"}));
    plot->add_option("--out", o.output, "Output PNG");
    plot->add_option("--step", o.quiver_step, "Quiver grid spacing, px");
    plot->add_option("--scale", o.arrow_scale, "Arrow length, px per px/frame");
    plot->add_option("--max-speed", o.max_speed, "Colormap upper bound (0 = field maximum)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    RunConfig config;
    try {
        config = resolve(command, o);
    } catch (const Error& e) {
        std::cerr << "upiv " << command << ": " << e.what() << "\n";
        return 2;
    }

    try {
        if (command == "synth") return run_synth(config);
        if (command == "compute") return run_compute(config);
        if (command == "bench") return run_bench(config);
        return run_plot(config);
    } catch (const std::exception& e) {
        std::cerr << "upiv " << command << ": " << e.what() << "\n";
        return 1;
    }
}
