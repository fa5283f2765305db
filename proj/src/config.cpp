#include "upiv/config.hpp"

#include "upiv/error.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace upiv {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::invalid_config, what); }

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(section + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) bad("unknown key '" + section + "." + key + "'");
}

template <typename T>
void read(const json& j, const char* key, const std::string& section, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(section + "." + key + " has the wrong type");
    }
}

WeightMode parse_weight_mode(const std::string& s) {
    if (s == "uniform") return WeightMode::uniform;
    if (s == "gaussian") return WeightMode::gaussian;
    bad("lk.weight_mode must be uniform or gaussian (got '" + s + "')");
}

SubpixelMode parse_subpixel(const std::string& s) {
    if (s == "none") return SubpixelMode::none;
    if (s == "parabolic") return SubpixelMode::parabolic;
    bad("cc.subpixel_mode must be none or parabolic (got '" + s + "')");
}

CorrelationMethod parse_method(const std::string& s) {
    if (s == "direct") return CorrelationMethod::direct;
    if (s == "fft") return CorrelationMethod::fft;
    bad("cc.method must be direct or fft (got '" + s + "')");
}

}  // namespace

json to_json(const LKParams& p) {
    return {{"window_radius", p.window_radius},
            {"weight_mode", p.weight_mode == WeightMode::uniform ? "uniform" : "gaussian"},
            {"pyramid_depth", p.pyramid_depth},
            {"max_iterations", p.max_iterations},
            {"convergence_threshold", p.convergence_threshold},
            {"min_eigenvalue_threshold", p.min_eigenvalue_threshold}};
}

json to_json(const CCParams& p) {
    return {{"template_size", p.template_size},
            {"search_radius", p.search_radius},
            {"grid_step", p.grid_step},
            {"subpixel_mode", p.subpixel_mode == SubpixelMode::none ? "none" : "parabolic"},
            {"method", p.method == CorrelationMethod::direct ? "direct" : "fft"},
            {"ambiguity_ratio", p.ambiguity_ratio}};
}

json to_json(const HSParams& p) {
    return {{"alpha", p.alpha}, {"iterations", p.iterations}, {"pyramid_depth", p.pyramid_depth}};
}

json to_json(const SceneSpec& s) {
    json j = {{"width", s.width},
              {"height", s.height},
              {"particle_density", s.particle_density},
              {"particle_radius", s.particle_radius},
              {"particle_intensity", s.particle_intensity},
              {"out_of_plane_rate", s.out_of_plane_rate},
              {"noise_sigma", s.noise_sigma},
              {"frames", s.frames},
              {"seed", s.seed},
              {"rng", kSceneRngName}};
    if (!s.particles.empty()) {
        json ps = json::array();
        for (const Vec2& p : s.particles) ps.push_back({p.x, p.y});
        j["particles"] = ps;
    }
    return j;
}

json to_json(const FlowModel& m) {
    json comps = json::array();
    for (const FlowComponent& c : m.components) {
        if (const auto* f = std::get_if<UniformFlow>(&c))
            comps.push_back({{"kind", "uniform"}, {"u", f->u}, {"v", f->v}});
        else if (const auto* f = std::get_if<ShearFlow>(&c))
            comps.push_back({{"kind", "shear"}, {"u0", f->u0}, {"rate", f->rate}, {"y_ref", f->y_ref}});
        else if (const auto* f = std::get_if<VortexFlow>(&c))
            comps.push_back({{"kind", "vortex"},
                             {"cx", f->cx},
                             {"cy", f->cy},
                             {"peak_speed", f->peak_speed},
                             {"core_radius", f->core_radius}});
    }
    return {{"components", comps}};
}

LKParams lk_params_from_json(const json& j, LKParams p) {
    check_keys(j, "lk", {"window_radius", "weight_mode", "pyramid_depth", "max_iterations",
                         "convergence_threshold", "min_eigenvalue_threshold"});
    read(j, "window_radius", "lk", p.window_radius);
    std::string mode;
    read(j, "weight_mode", "lk", mode);
    if (!mode.empty()) p.weight_mode = parse_weight_mode(mode);
    read(j, "pyramid_depth", "lk", p.pyramid_depth);
    read(j, "max_iterations", "lk", p.max_iterations);
    read(j, "convergence_threshold", "lk", p.convergence_threshold);
    read(j, "min_eigenvalue_threshold", "lk", p.min_eigenvalue_threshold);
    return p;
}

CCParams cc_params_from_json(const json& j, CCParams p) {
    check_keys(j, "cc", {"template_size", "search_radius", "grid_step", "subpixel_mode", "method",
                         "ambiguity_ratio"});
    read(j, "template_size", "cc", p.template_size);
    read(j, "search_radius", "cc", p.search_radius);
    read(j, "grid_step", "cc", p.grid_step);
    std::string s;
    read(j, "subpixel_mode", "cc", s);
    if (!s.empty()) p.subpixel_mode = parse_subpixel(s);
    s.clear();
    read(j, "method", "cc", s);
    if (!s.empty()) p.method = parse_method(s);
    read(j, "ambiguity_ratio", "cc", p.ambiguity_ratio);
    return p;
}

HSParams hs_params_from_json(const json& j, HSParams p) {
    check_keys(j, "hs", {"alpha", "iterations", "pyramid_depth"});
    read(j, "alpha", "hs", p.alpha);
    read(j, "iterations", "hs", p.iterations);
    read(j, "pyramid_depth", "hs", p.pyramid_depth);
    return p;
}

SceneSpec scene_from_json(const json& j, SceneSpec s) {
    check_keys(j, "scene", {"width", "height", "particle_density", "particle_radius", "particle_intensity",
                            "out_of_plane_rate", "noise_sigma", "frames", "seed", "rng", "particles"});
    read(j, "width", "scene", s.width);
    read(j, "height", "scene", s.height);
    read(j, "particle_density", "scene", s.particle_density);
    read(j, "particle_radius", "scene", s.particle_radius);
    read(j, "particle_intensity", "scene", s.particle_intensity);
    read(j, "out_of_plane_rate", "scene", s.out_of_plane_rate);
    read(j, "noise_sigma", "scene", s.noise_sigma);
    read(j, "frames", "scene", s.frames);
    read(j, "seed", "scene", s.seed);
    if (j.contains("rng") && j.at("rng") != kSceneRngName)
        bad(std::string("scene.rng must be \"") + kSceneRngName + "\"");
    if (j.contains("particles")) {
        s.particles.clear();
        try {
            for (const json& p : j.at("particles")) s.particles.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        } catch (const json::exception&) {
            bad("scene.particles must be a list of [x, y] pairs");
        }
    }
    return s;
}

FlowModel flow_model_from_json(const json& j) {
    check_keys(j, "flow_model", {"components"});
    FlowModel m;
    if (!j.contains("components") || !j.at("components").is_array())
        bad("flow_model.components must be a list");
    for (const json& c : j.at("components")) {
        std::string kind;
        read(c, "kind", "flow_model.components", kind);
        if (kind == "uniform") {
            check_keys(c, "flow_model.uniform", {"kind", "u", "v"});
            UniformFlow f;
            read(c, "u", "flow_model.uniform", f.u);
            read(c, "v", "flow_model.uniform", f.v);
            m.components.emplace_back(f);
        } else if (kind == "shear") {
            check_keys(c, "flow_model.shear", {"kind", "u0", "rate", "y_ref"});
            ShearFlow f;
            read(c, "u0", "flow_model.shear", f.u0);
            read(c, "rate", "flow_model.shear", f.rate);
            read(c, "y_ref", "flow_model.shear", f.y_ref);
            m.components.emplace_back(f);
        } else if (kind == "vortex") {
            check_keys(c, "flow_model.vortex", {"kind", "cx", "cy", "peak_speed", "core_radius"});
            VortexFlow f;
            read(c, "cx", "flow_model.vortex", f.cx);
            read(c, "cy", "flow_model.vortex", f.cy);
            read(c, "peak_speed", "flow_model.vortex", f.peak_speed);
            read(c, "core_radius", "flow_model.vortex", f.core_radius);
            m.components.emplace_back(f);
        } else {
            bad("flow_model component kind must be uniform, shear or vortex (got '" + kind + "')");
        }
    }
    m.validate();
    return m;
}

void apply_config(RunConfig& c, const json& doc) {
    check_keys(doc, "config", {"run", "lk", "cc", "hs", "scene", "flow_model", "bench", "plot"});
    if (doc.contains("run")) {
        const json& r = doc.at("run");
        check_keys(r, "run", {"input", "output", "truth", "algorithm", "preset", "workers", "seed",
                              "image_bit_depth", "plot_style"});
        std::string s;
        read(r, "input", "run", s);
        if (!s.empty()) c.input = s;
        s.clear();
        read(r, "output", "run", s);
        if (!s.empty()) c.output = s;
        s.clear();
        read(r, "truth", "run", s);
        if (!s.empty()) c.truth = s;
        read(r, "algorithm", "run", c.algorithm);
        read(r, "preset", "run", c.preset);
        read(r, "plot_style", "run", c.plot_style);
        read(r, "workers", "run", c.workers);
        read(r, "image_bit_depth", "run", c.image_bit_depth);
        if (r.contains("seed")) {
            std::uint64_t seed = 0;
            read(r, "seed", "run", seed);
            c.seed = seed;
        }
    }
    if (doc.contains("lk")) c.lk = lk_params_from_json(doc.at("lk"), c.lk);
    if (doc.contains("cc")) c.cc = cc_params_from_json(doc.at("cc"), c.cc);
    if (doc.contains("hs")) c.hs = hs_params_from_json(doc.at("hs"), c.hs);
    if (doc.contains("scene")) c.scene = scene_from_json(doc.at("scene"), c.scene);
    if (doc.contains("flow_model")) c.flow_model = flow_model_from_json(doc.at("flow_model"));
    if (doc.contains("bench")) {
        const json& b = doc.at("bench");
        check_keys(b, "bench", {"frame_interval", "repeats", "margin", "sort_by_aae", "pairs", "lk_depths",
                                "hs_alphas", "cc_templates"});
        read(b, "frame_interval", "bench", c.bench.frame_interval);
        read(b, "repeats", "bench", c.bench.repeats);
        read(b, "margin", "bench", c.bench.margin);
        read(b, "sort_by_aae", "bench", c.bench.sort_by_aae);
        read(b, "pairs", "bench", c.bench.pairs);
        read(b, "lk_depths", "bench", c.bench_lk_depths);
        read(b, "hs_alphas", "bench", c.bench_hs_alphas);
        read(b, "cc_templates", "bench", c.bench_cc_templates);
    }
    if (doc.contains("plot")) {
        const json& p = doc.at("plot");
        check_keys(p, "plot", {"quiver_step", "arrow_scale", "max_speed", "legend"});
        read(p, "quiver_step", "plot", c.plot.quiver_step);
        read(p, "arrow_scale", "plot", c.plot.arrow_scale);
        read(p, "max_speed", "plot", c.plot.max_speed);
        read(p, "legend", "plot", c.plot.legend);
    }
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        bad("config " + path.string() + " is not valid JSON: " + e.what());
    }
    apply_config(base, doc);
    return base;
}

void RunConfig::validate() const {
    static const std::set<std::string> commands{"compute", "bench", "synth", "plot"};
    if (!commands.count(command)) bad("command must be compute, bench, synth or plot");
    if (algorithm != "lk" && algorithm != "cc" && algorithm != "hs")
        bad("run.algorithm must be lk, cc or hs (got '" + algorithm + "')");
    if (workers > 1024) bad("run.workers must be <= 1024");
    if (image_bit_depth != 8 && image_bit_depth != 16) bad("run.image_bit_depth must be 8 or 16");
    lk.validate();
    cc.validate();
    hs.validate();
    scene.validate();
    flow_model.validate();
    plot.validate();
    parse_plot_style(plot_style);
    if (!(bench.frame_interval >= 1.0)) bad("bench.frame_interval must be >= 1");
    if (bench.repeats < 1) bad("bench.repeats must be >= 1");
    if (bench.margin < 0) bad("bench.margin must be >= 0");
    for (int d : bench_lk_depths)
        if (d < 1) bad("bench.lk_depths entries must be >= 1");
    for (double a : bench_hs_alphas)
        if (!(a > 0.0)) bad("bench.hs_alphas entries must be > 0");
    for (int t : bench_cc_templates)
        if (t < 8) bad("bench.cc_templates entries must be >= 8");
}

std::vector<AlgorithmSpec> bench_algorithms(const RunConfig& c) {
    std::vector<AlgorithmSpec> algos;
    for (int d : c.bench_lk_depths) {
        LKParams p = c.lk;
        p.pyramid_depth = d;
        algos.push_back(AlgorithmSpec::lk(p));
    }
    for (double a : c.bench_hs_alphas) {
        HSParams p = c.hs;
        p.alpha = a;
        algos.push_back(AlgorithmSpec::hs(p));
    }
    for (int t : c.bench_cc_templates) {
        CCParams p = c.cc;
        p.template_size = t;
        algos.push_back(AlgorithmSpec::cc(p));
    }
    return algos;
}

std::string report_csv(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream out;
    out << "algorithm,parameter,status,aae_deg,sad_deg,epe_px_suppl,outlier_fraction_suppl,runtime_s,"
           "pixel_count,frame_interval,ambiguous_fraction,error\n";
    char buf[512];
    for (const BenchmarkRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%g,%.6f,", r.algorithm.c_str(),
                      r.parameter.c_str(), r.ok ? "ok" : "failed", r.report.aae, r.report.sad, r.report.epe,
                      r.report.outlier_fraction, r.report.runtime, r.report.pixel_count,
                      r.report.frame_interval, r.ambiguous_fraction);
        std::string err = r.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        out << buf << err << "\n";
    }
    return out.str();
}

json report_json(const std::vector<BenchmarkRow>& rows, const json& metadata) {
    json arr = json::array();
    for (const BenchmarkRow& r : rows) {
        json row = {{"algorithm", r.algorithm}, {"parameter", r.parameter}, {"status", r.ok ? "ok" : "failed"}};
        if (r.ok) {
            row["aae_deg"] = r.report.aae;
            row["sad_deg"] = r.report.sad;
            row["runtime_s"] = r.report.runtime;
            row["pixel_count"] = r.report.pixel_count;
            row["frame_interval"] = r.report.frame_interval;
            row["supplementary"] = {{"epe_px", r.report.epe},
                                    {"outlier_fraction", r.report.outlier_fraction},
                                    {"outlier_threshold_px", kOutlierThresholdPx}};
            if (r.ambiguous_fraction >= 0.0) row["ambiguous_fraction"] = r.ambiguous_fraction;
        } else {
            row["error"] = r.error;
        }
        arr.push_back(row);
    }
    return {{"schema", "upiv-bench-report/1"}, {"metadata", metadata}, {"rows", arr}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

}  // namespace upiv
