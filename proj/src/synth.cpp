#include "upiv/synth.hpp"

#include "upiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace upiv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double SceneRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SceneRng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

FlowKind FlowModel::kind() const {
    if (components.size() != 1) return FlowKind::composite;
    return std::visit(overloaded{[](const UniformFlow&) { return FlowKind::uniform; },
                                 [](const ShearFlow&) { return FlowKind::shear; },
                                 [](const VortexFlow&) { return FlowKind::vortex; }},
                      components.front());
}

Vec2 FlowModel::velocity(double x, double y) const {
    Vec2 total;
    for (const FlowComponent& c : components) {
        total += std::visit(
            overloaded{[](const UniformFlow& f) { return Vec2{f.u, f.v}; },
                       [y](const ShearFlow& f) { return Vec2{f.u0 + f.rate * (y - f.y_ref), 0.0}; },
                       [x, y](const VortexFlow& f) {
                           const double dx = x - f.cx;
                           const double dy = y - f.cy;
                           const double r = std::hypot(dx, dy);
                           if (r == 0.0) return Vec2{};
                           const double speed = r < f.core_radius ? f.peak_speed * r / f.core_radius
                                                                  : f.peak_speed * f.core_radius / r;
                           return Vec2{-dy / r * speed, dx / r * speed};
                       }},
            c);
    }
    return total;
}

void FlowModel::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, "flow_model." + what); };
    for (const FlowComponent& c : components) {
        std::visit(overloaded{[&](const UniformFlow& f) {
                                  if (!std::isfinite(f.u) || !std::isfinite(f.v))
                                      fail("uniform velocity must be finite");
                              },
                              [&](const ShearFlow& f) {
                                  if (!std::isfinite(f.u0) || !std::isfinite(f.rate) ||
                                      !std::isfinite(f.y_ref))
                                      fail("shear parameters must be finite");
                              },
                              [&](const VortexFlow& f) {
                                  if (!std::isfinite(f.cx) || !std::isfinite(f.cy) ||
                                      !std::isfinite(f.peak_speed))
                                      fail("vortex parameters must be finite");
                                  if (!(f.core_radius > 0.0)) fail("vortex core_radius must be > 0");
                              }},
                   c);
    }
}

void SceneSpec::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, "scene." + what); };
    if (width < 2 || height < 2) fail("width and height must be >= 2");
    if (!(particle_density >= 0.0) || !std::isfinite(particle_density))
        fail("particle_density must be >= 0");
    if (!(particle_radius > 0.0) || !std::isfinite(particle_radius)) fail("particle_radius must be > 0");
    if (!(particle_intensity > 0.0) || !std::isfinite(particle_intensity))
        fail("particle_intensity must be > 0");
    if (!(out_of_plane_rate >= 0.0 && out_of_plane_rate <= 1.0))
        fail("out_of_plane_rate must be in [0, 1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
    if (frames < 2) fail("frames must be >= 2");
    for (const Vec2& p : particles)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail("particle positions must be finite");
}

namespace {

// Particles live on a domain extended by `margin` on every side so that the
// visible frame keeps a uniform seeding as particles stream through. Particles
// leaving the extended domain re-enter on the opposite side.
struct Domain {
    double x0, y0, w, h;

    Vec2 wrap(Vec2 p) const {
        auto mod = [](double v, double lo, double len) {
            double r = std::fmod(v - lo, len);
            if (r < 0.0) r += len;
            return lo + r;
        };
        return {mod(p.x, x0, w), mod(p.y, y0, h)};
    }
    Vec2 draw(SceneRng& rng) const {
        const double x = x0 + rng.uniform() * w;
        const double y = y0 + rng.uniform() * h;
        return {x, y};
    }
};

double max_speed_over(const FlowModel& model, const Domain& d) {
    double best = 0.0;
    const int steps = 64;
    for (int j = 0; j <= steps; ++j)
        for (int i = 0; i <= steps; ++i)
            best = std::max(best, norm(model.velocity(d.x0 + d.w * i / steps, d.y0 + d.h * j / steps)));
    return best;
}

Domain make_domain(const SceneSpec& spec, const FlowModel& model) {
    const Domain visible{0.0, 0.0, static_cast<double>(spec.width), static_cast<double>(spec.height)};
    const double margin = std::ceil(3.0 * spec.particle_radius + max_speed_over(model, visible) + 2.0);
    return {-margin, -margin, spec.width + 2.0 * margin, spec.height + 2.0 * margin};
}

Grid render(const SceneSpec& spec, const std::vector<Vec2>& particles) {
    Grid acc(spec.width, spec.height);
    const double sigma = spec.particle_radius;
    const double cutoff = 3.0 * sigma;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (const Vec2& p : particles) {
        const int x0 = std::max(0, static_cast<int>(std::ceil(p.x - cutoff)));
        const int x1 = std::min(spec.width - 1, static_cast<int>(std::floor(p.x + cutoff)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(p.y - cutoff)));
        const int y1 = std::min(spec.height - 1, static_cast<int>(std::floor(p.y + cutoff)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
                if (d2 > cutoff * cutoff) continue;
                acc(x, y) += spec.particle_intensity * std::exp(-d2 * inv2s2);
            }
        }
    }
    return acc;
}

std::vector<Vec2> initial_particles(const SceneSpec& spec, const Domain& domain, SceneRng& rng) {
    if (!spec.particles.empty()) return spec.particles;
    const auto count = static_cast<std::size_t>(std::llround(spec.particle_density * domain.w * domain.h));
    std::vector<Vec2> ps;
    ps.reserve(count);
    for (std::size_t i = 0; i < count; ++i) ps.push_back(domain.draw(rng));
    return ps;
}

constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ull;

}  // namespace

FlowField sample_flow(const FlowModel& model, int width, int height) {
    FlowField f(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) f.set(x, y, model.velocity(x, y));
    return f;
}

Sequence generate_sequence(const SceneSpec& spec, const FlowModel& model) {
    spec.validate();
    model.validate();
    const Domain domain = make_domain(spec, model);
    SceneRng geometry(spec.seed);
    SceneRng noise(spec.seed ^ kNoiseStream);

    std::vector<Vec2> particles = initial_particles(spec, domain, geometry);
    const bool explicit_particles = !spec.particles.empty();

    Sequence seq;
    seq.stats.particles = particles.size();
    const FlowField truth = sample_flow(model, spec.width, spec.height);
    for (int f = 0; f < spec.frames; ++f) {
        Grid img = render(spec, particles);
        if (spec.noise_sigma > 0.0)
            for (double& v : img.values()) v += spec.noise_sigma * noise.normal();
        seq.frames.push_back(ImageFrame::from_clamped(std::move(img)));
        if (f + 1 == spec.frames) break;

        seq.truth.push_back(truth);
        for (Vec2& p : particles) {
            p += model.velocity(p.x, p.y);
            if (!explicit_particles) p = domain.wrap(p);
            ++seq.stats.transitions;
            if (spec.out_of_plane_rate > 0.0 && geometry.uniform() < spec.out_of_plane_rate) {
                p = domain.draw(geometry);
                ++seq.stats.replacements;
            }
        }
    }
    return seq;
}

double density_to_saturation(const SceneSpec& spec) {
    spec.validate();
    const Domain domain = make_domain(spec, FlowModel{});
    SceneRng geometry(spec.seed);
    const std::vector<Vec2> particles = initial_particles(spec, domain, geometry);
    const Grid img = render(spec, particles);
    std::size_t hot = 0;
    for (double v : img.values())
        if (v > 0.9) ++hot;
    return static_cast<double>(hot) / static_cast<double>(img.size());
}

double stream_speed_to_pixels(double cm_per_s) { return cm_per_s * 32.0 / 60.0; }

namespace {

SceneSpec base_scene() {
    SceneSpec s;
    s.particle_density = kSaturationDensity;
    return s;
}

}  // namespace

ScenePreset scene_preset(std::string_view name) {
    ScenePreset p;
    p.name = std::string(name);
    p.scene = base_scene();
    const double cx = 0.5 * (p.scene.width - 1);
    const double cy = 0.5 * (p.scene.height - 1);
    if (name == "fast") {
        p.scene.noise_sigma = 0.01;
        p.model = FlowModel::uniform(stream_speed_to_pixels(35.0), 0.0);
    } else if (name == "medium") {
        p.scene.noise_sigma = 0.01;
        p.model.components = {UniformFlow{stream_speed_to_pixels(25.0), 0.0},
                              VortexFlow{cx, cy, 2.0, 30.0}};
    } else if (name == "uniform") {
        p.model = FlowModel::uniform(3.0, 2.0);
    } else if (name == "shear") {
        p.model.components = {ShearFlow{2.0, 0.02, cy}};
    } else if (name == "vortex") {
        p.model.components = {VortexFlow{cx, cy, 3.0, 40.0}};
    } else if (name == "static") {
        p.scene.out_of_plane_rate = 0.0;
        p.model = FlowModel::uniform(0.0, 0.0);
    } else {
        throw Error(Errc::invalid_config, "unknown scene preset '" + std::string(name) + "'");
    }
    return p;
}

std::vector<std::string> scene_preset_names() {
    return {"fast", "medium", "uniform", "shear", "vortex", "static"};
}

}  // namespace upiv
