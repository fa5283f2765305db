#include "support.hpp"

#include "upiv/error.hpp"
#include "upiv/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace upiv;

namespace {

// Intensity-weighted centroid over a square neighbourhood.
Vec2 centroid(const ImageFrame& f, Vec2 near, int half) {
    double sx = 0, sy = 0, s = 0;
    for (int y = int(near.y) - half; y <= int(near.y) + half; ++y)
        for (int x = int(near.x) - half; x <= int(near.x) + half; ++x) {
            const double v = f.clamped(x, y);
            sx += v * x;
            sy += v * y;
            s += v;
        }
    return {sx / s, sy / s};
}

SceneSpec single_particle(Vec2 at) {
    SceneSpec s;
    s.width = 64;
    s.height = 64;
    s.particles = {at};
    s.particle_radius = 2.0;
    s.particle_intensity = 0.8;
    s.out_of_plane_rate = 0.0;
    s.frames = 3;
    return s;
}

}  // namespace

TEST_CASE("generator engine is the standard mt19937_64") {
    std::mt19937_64 e(5489u);
    e.discard(9999);
    CHECK(e() == 9981545732273789042ull);
    CHECK(std::string(kSceneRngName) == "mt19937_64");
}

TEST_CASE("scene rng uniform and normal moments") {
    SceneRng rng(3);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        s += u;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    s = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("flow models") {
    CHECK(FlowModel::uniform(3, 2).velocity(10, 99) == Vec2{3, 2});
    CHECK(FlowModel::uniform(3, 2).kind() == FlowKind::uniform);

    FlowModel shear{{ShearFlow{2.0, 0.5, 10.0}}};
    CHECK(shear.velocity(0, 10) == Vec2{2.0, 0.0});
    CHECK(shear.velocity(7, 14) == Vec2{4.0, 0.0});
    CHECK(shear.kind() == FlowKind::shear);

    FlowModel vortex{{VortexFlow{0, 0, 3.0, 10.0}}};
    CHECK(norm(vortex.velocity(10, 0)) == doctest::Approx(3.0));
    CHECK(norm(vortex.velocity(5, 0)) == doctest::Approx(1.5));
    CHECK(norm(vortex.velocity(0, 20)) == doctest::Approx(1.5));
    CHECK(vortex.velocity(0, 0) == Vec2{0, 0});
    // Tangential: velocity is orthogonal to the radius.
    const Vec2 v = vortex.velocity(3, 4);
    CHECK(std::abs(v.x * 3 + v.y * 4) < 1e-12);
    CHECK(v.y > 0.0);

    FlowModel both{{UniformFlow{1, 0}, VortexFlow{0, 0, 3.0, 10.0}}};
    CHECK(both.kind() == FlowKind::composite);
    CHECK(norm(both.velocity(10, 0) - Vec2{1, 3}) < 1e-12);

    FlowModel bad{{VortexFlow{0, 0, 1.0, 0.0}}};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stream speeds convert at 32 px/cm and 60 frames/s") {
    CHECK(stream_speed_to_pixels(35.0) == doctest::Approx(18.6667).epsilon(1e-4));
    CHECK(stream_speed_to_pixels(25.0) == doctest::Approx(13.3333).epsilon(1e-4));
    CHECK(stream_speed_to_pixels(0.0) == 0.0);
}

TEST_CASE("a single particle moves by the flow") {
    const Vec2 start{20.3, 25.6};
    SceneSpec s = single_particle(start);
    const Sequence seq = generate_sequence(s, FlowModel::uniform(2.5, 1.25));
    REQUIRE(seq.frames.size() == 3);
    REQUIRE(seq.truth.size() == 2);
    const Vec2 c0 = centroid(seq.frames[0], start, 8);
    const Vec2 c1 = centroid(seq.frames[1], start + Vec2{2.5, 1.25}, 8);
    const Vec2 c2 = centroid(seq.frames[2], start + Vec2{5.0, 2.5}, 8);
    CHECK(norm(c0 - start) < 0.02);
    CHECK(norm(c1 - c0 - Vec2{2.5, 1.25}) < 0.02);
    CHECK(norm(c2 - c1 - Vec2{2.5, 1.25}) < 0.02);
    CHECK(seq.frames[0](20, 26) == doctest::Approx(0.8 * std::exp(-(0.09 + 0.16) / 8.0)));
    for (const FlowField& t : seq.truth) {
        CHECK(t.valid_count() == t.size());
        CHECK(t.at(5, 5) == Vec2{2.5, 1.25});
    }
    CHECK(seq.stats.particles == 1);
    CHECK(seq.stats.transitions == 2);
    CHECK(seq.stats.replacements == 0);
}

TEST_CASE("rendered frames stay in range and are deterministic") {
    ScenePreset p = scene_preset("medium");
    p.scene.width = 96;
    p.scene.height = 80;
    p.scene.seed = 17;
    const Sequence a = generate_sequence(p.scene, p.model);
    const Sequence b = generate_sequence(p.scene, p.model);
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        CHECK(std::equal(a.frames[i].values().begin(), a.frames[i].values().end(), b.frames[i].values().begin()));
        for (double v : a.frames[i].values()) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
    p.scene.seed = 18;
    const Sequence c = generate_sequence(p.scene, p.model);
    CHECK_FALSE(std::equal(a.frames[0].values().begin(), a.frames[0].values().end(), c.frames[0].values().begin()));
}

TEST_CASE("truth samples the analytic model at pixel centres") {
    const ScenePreset p = scene_preset("vortex");
    const FlowField f = sample_flow(p.model, 40, 30);
    for (int y = 0; y < 30; y += 7)
        for (int x = 0; x < 40; x += 9) {
            const Vec2 m = p.model.velocity(x, y);
            CHECK(f.u(x, y) == static_cast<float>(m.x));
            CHECK(f.v(x, y) == static_cast<float>(m.y));
        }
}

TEST_CASE("out-of-plane replacement rate") {
    SceneSpec s;
    s.width = 64;
    s.height = 64;
    s.frames = 11;
    s.out_of_plane_rate = 0.1;
    const Sequence seq = generate_sequence(s, FlowModel::uniform(1, 0));
    REQUIRE(seq.stats.transitions == seq.stats.particles * 10);
    const double rate = double(seq.stats.replacements) / double(seq.stats.transitions);
    CHECK(rate == doctest::Approx(0.1).epsilon(0.15));

    s.out_of_plane_rate = 0.0;
    CHECK(generate_sequence(s, FlowModel::uniform(1, 0)).stats.replacements == 0);
}

TEST_CASE("additive noise has the requested spread") {
    SceneSpec s;
    s.width = 128;
    s.height = 128;
    s.out_of_plane_rate = 0.0;
    s.noise_sigma = 0.0;
    // A dark background clamps half the noise; lift it with a wide particle.
    s.particle_radius = 400.0;
    s.particle_intensity = 0.5;
    s.particles = {{64.0, 64.0}};
    const Sequence clean = generate_sequence(s, FlowModel{});
    s.noise_sigma = 0.02;
    const Sequence noisy = generate_sequence(s, FlowModel{});
    double d = 0, d2 = 0;
    const auto c = clean.frames[0].values();
    const auto n = noisy.frames[0].values();
    for (std::size_t i = 0; i < c.size(); ++i) {
        d += n[i] - c[i];
        d2 += (n[i] - c[i]) * (n[i] - c[i]);
    }
    const double mean = d / c.size();
    CHECK(std::abs(mean) < 0.002);
    CHECK(std::sqrt(d2 / c.size() - mean * mean) == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("saturation fraction grows with density") {
    SceneSpec s;
    s.width = 160;
    s.height = 120;
    double last = -1.0;
    for (double d : {0.001, 0.004, 0.012}) {
        s.particle_density = d;
        const double f = density_to_saturation(s);
        CHECK(f > last);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        last = f;
    }
    s.particle_density = kSaturationDensity;
    s.width = 320;
    s.height = 240;
    CHECK(density_to_saturation(s) == doctest::Approx(0.29).epsilon(0.15));
}

TEST_CASE("presets") {
    for (const std::string& name : scene_preset_names()) {
        const ScenePreset p = scene_preset(name);
        CHECK(p.name == name);
        CHECK_NOTHROW(p.scene.validate());
        CHECK_NOTHROW(p.model.validate());
    }
    const ScenePreset fast = scene_preset("fast");
    CHECK(fast.model.velocity(0, 0).x == doctest::Approx(stream_speed_to_pixels(35.0)));
    CHECK(fast.scene.particle_density == kSaturationDensity);
    const ScenePreset medium = scene_preset("medium");
    CHECK(medium.model.kind() == FlowKind::composite);
    CHECK(norm(medium.model.velocity(0, 0)) > 12.0);
    CHECK(scene_preset("static").model.velocity(3, 3) == Vec2{0, 0});
    try {
        scene_preset("nope");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_config);
    }
}

TEST_CASE("scene validation") {
    SceneSpec s;
    s.frames = 1;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("frames"), Error);
    s = SceneSpec{};
    s.particle_radius = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = SceneSpec{};
    s.out_of_plane_rate = 1.5;
    CHECK_THROWS_AS(s.validate(), Error);
    s = SceneSpec{};
    s.noise_sigma = -1.0;
    CHECK_THROWS_AS(generate_sequence(s, FlowModel{}), Error);
}
