#include "support.hpp"

#include "upiv/error.hpp"
#include "upiv/lk_pyramidal.hpp"
#include "upiv/synth.hpp"

#include <doctest.h>

#include <random>

using namespace upiv;
using testing_support::frame_from;
using testing_support::shifted_pair;

namespace {

// Exhaustive integer-displacement SSD search over a window; the oracle for
// shifted-texture cases.
std::pair<int, int> ssd_search(const ImageFrame& a, const ImageFrame& b, int cx, int cy, int r, int range) {
    double best = 1e300;
    std::pair<int, int> arg{0, 0};
    for (int dy = -range; dy <= range; ++dy)
        for (int dx = -range; dx <= range; ++dx) {
            double s = 0.0;
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i) {
                    const double d = a.clamped(cx + i, cy + j) - b.clamped(cx + i + dx, cy + j + dy);
                    s += d * d;
                }
            if (s < best) {
                best = s;
                arg = {dx, dy};
            }
        }
    return arg;
}

double periodic(double x, double y) {
    const double k = 2.0 * 3.14159265358979323846 / 8.0;
    return 0.5 + 0.2 * std::sin(k * x) + 0.2 * std::cos(k * y + 0.4);
}

}  // namespace

TEST_CASE("params validation names the field") {
    LKParams p;
    CHECK_NOTHROW(p.validate());
    p.window_radius = 0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("window_radius"), Error);
    p = LKParams{};
    p.pyramid_depth = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = LKParams{};
    p.convergence_threshold = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = LKParams{};
    p.min_eigenvalue_threshold = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("structure tensor of constant frame and ramp") {
    LKParams p;
    p.window_radius = 1;
    const GradientField g0 = gradient(ImageFrame(10, 10, std::vector<double>(100, 0.3)));
    const StructureTensor t0 = structure_tensor(g0, {5, 5}, p);
    CHECK(t0.gxx == 0.0);
    CHECK(t0.gxy == 0.0);
    CHECK(t0.gyy == 0.0);
    CHECK(t0.min_eigenvalue == 0.0);

    const int w = 11;
    const GradientField g = gradient(frame_from(w, 8, [&](double x, double) { return x / (w - 1); }));
    const StructureTensor t = structure_tensor(g, {5, 4}, p);
    CHECK(t.gxx == doctest::Approx(9.0 / ((w - 1) * (w - 1))));
    CHECK(t.gxy == 0.0);
    CHECK(t.gyy == 0.0);
}

TEST_CASE("structure tensor matches a brute-force window sum") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> v(25);
    for (double& x : v) x = d(rng);
    const ImageFrame f(5, 5, v);
    const GradientField g = gradient(f);
    for (WeightMode mode : {WeightMode::uniform, WeightMode::gaussian}) {
        LKParams p;
        p.window_radius = 1;
        p.weight_mode = mode;
        const std::vector<double> w = window_weights(p);
        double xx = 0, xy = 0, yy = 0;
        for (int j = -1; j <= 1; ++j)
            for (int i = -1; i <= 1; ++i) {
                const double wt = w[(j + 1) * 3 + (i + 1)];
                xx += wt * g.ix(2 + i, 2 + j) * g.ix(2 + i, 2 + j);
                xy += wt * g.ix(2 + i, 2 + j) * g.iy(2 + i, 2 + j);
                yy += wt * g.iy(2 + i, 2 + j) * g.iy(2 + i, 2 + j);
            }
        const StructureTensor t = structure_tensor(g, {2, 2}, p);
        CHECK(t.gxx == doctest::Approx(xx).epsilon(1e-12));
        CHECK(t.gxy == doctest::Approx(xy).epsilon(1e-12));
        CHECK(t.gyy == doctest::Approx(yy).epsilon(1e-12));
        const double tr = xx + yy;
        const double det = xx * yy - xy * xy;
        CHECK(t.min_eigenvalue == doctest::Approx(tr / 2 - std::sqrt(tr * tr / 4 - det)).epsilon(1e-9));
    }
}

TEST_CASE("gaussian weights have unit mean and peak at the centre") {
    LKParams p;
    p.window_radius = 4;
    p.weight_mode = WeightMode::gaussian;
    const std::vector<double> w = window_weights(p);
    double s = 0.0;
    for (double x : w) s += x;
    CHECK(s / w.size() == doctest::Approx(1.0));
    CHECK(w[40] == *std::max_element(w.begin(), w.end()));
}

TEST_CASE("structure tensor is positive semidefinite everywhere") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> v(40 * 30);
        for (double& x : v) x = d(rng);
        const GradientField g = gradient(ImageFrame(40, 30, v));
        LKParams p;
        p.window_radius = 1 + trial;
        p.weight_mode = trial % 2 ? WeightMode::gaussian : WeightMode::uniform;
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x) {
                const StructureTensor t = structure_tensor(g, {double(x), double(y)}, p);
                CHECK(t.gxx >= 0.0);
                CHECK(t.gyy >= 0.0);
                CHECK(t.determinant() >= -1e-12);
                CHECK(t.min_eigenvalue >= -1e-9);
            }
    }
}

TEST_CASE("refine on identical frames converges in one iteration") {
    const auto [a, b] = shifted_pair(40, 40, 0.0, 0.0);
    const RefineResult r = lk_refine(a, a, {20, 20}, {0, 0}, LKParams{});
    CHECK(r.status == SolveStatus::ok);
    CHECK(r.residual.x == 0.0);
    CHECK(r.residual.y == 0.0);
    CHECK(r.trace.iterations == 1);
    CHECK(r.trace.converged);
}

TEST_CASE("refine recovers a one-pixel shift of a periodic texture") {
    const ImageFrame a = frame_from(48, 48, periodic);
    const ImageFrame b = frame_from(48, 48, [](double x, double y) { return periodic(x - 1.0, y); });
    LKParams p;
    p.window_radius = 3;
    const RefineResult r = lk_refine(a, b, {24, 24}, {0, 0}, p);
    REQUIRE(r.status == SolveStatus::ok);
    CHECK(std::abs(r.residual.x - 1.0) < 0.1);
    CHECK(std::abs(r.residual.y) < 0.1);
    const auto [dx, dy] = ssd_search(a, b, 24, 24, 3, 3);
    CHECK(dx == 1);
    CHECK(dy == 0);

    const RefineResult g = lk_refine(a, b, {24, 24}, {1, 0}, p);
    CHECK(norm(g.residual) < 0.02);
}

TEST_CASE("residual split does not change the answer") {
    const auto [a, b] = shifted_pair(64, 64, 1.3, -0.8);
    LKParams p;
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> gd(-2.0, 2.0);
    const RefineResult zero = lk_refine(a, b, {32, 32}, {0, 0}, p);
    for (int t = 0; t < 10; ++t) {
        const Vec2 g{gd(rng) * 0.5, gd(rng) * 0.5};
        const RefineResult r = lk_refine(a, b, {32, 32}, g, p);
        CHECK(norm((r.residual + g) - zero.residual) < 0.05);
    }
}

TEST_CASE("single iteration is exact on a bilinear intensity patch") {
    // I = c + a x + b y + e x y is linear along each axis, so a displacement
    // along x leaves every warped residual exactly linear in the unknown.
    for (double d : {0.25, 0.5, 0.75}) {
        auto intensity = [](double x, double y) {
            return 0.2 + 0.008 * x + 0.01 * y + 0.0003 * x * y;
        };
        const ImageFrame a = frame_from(30, 30, intensity);
        const ImageFrame b = frame_from(30, 30, [&](double x, double y) { return intensity(x - d, y); });
        LKParams p;
        p.window_radius = 3;
        p.max_iterations = 1;
        // Shift the guess by the integer part so the sample grid stays aligned.
        const RefineResult r = lk_refine(a, b, {14, 14}, {0, 0}, p);
        REQUIRE(r.status == SolveStatus::ok);
        CHECK(r.trace.iterations == 1);
        CHECK(r.residual.x == doctest::Approx(d).epsilon(1e-9));
        CHECK(std::abs(r.residual.y) < 1e-9);
    }
}

TEST_CASE("flat windows are refused by the eigenvalue gate") {
    const ImageFrame flat(20, 20, std::vector<double>(400, 0.5));
    const RefineResult r = lk_refine(flat, flat, {10, 10}, {0, 0}, LKParams{});
    CHECK(r.status == SolveStatus::ill_conditioned);
}

TEST_CASE("track_point total equals the weighted sum of level residuals") {
    const auto [a, b] = shifted_pair(128, 128, 5.3, -2.1, testing_support::coarse_texture);
    LKParams p;
    p.pyramid_depth = 3;
    const Pyramid pa = build_pyramid(a, 3);
    const Pyramid pb = build_pyramid(b, 3);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> c(10.0, 118.0);
    for (int t = 0; t < 50; ++t) {
        const Vec2 pt{c(rng), c(rng)};
        const TrackResult r = track_point(pa, pb, pt, p);
        REQUIRE(r.status == SolveStatus::ok);
        REQUIRE(r.trace.levels.size() == 3);
        CHECK(r.trace.levels.front().level == 2);
        const Vec2 s = r.trace.weighted_residual_sum();
        CHECK(std::abs(s.x - r.total.x) < 1e-9);
        CHECK(std::abs(s.y - r.total.y) < 1e-9);
        for (const LevelTrace& lt : r.trace.levels) CHECK(lt.iterations <= p.max_iterations);
    }
}

TEST_CASE("identical pyramids track to zero") {
    const auto [a, b] = shifted_pair(64, 64, 0.0, 0.0);
    const Pyramid pa = build_pyramid(a, 3);
    const TrackResult r = track_point(pa, pa, {30, 30}, LKParams{});
    CHECK(r.total == Vec2{0, 0});
    for (const LevelTrace& lt : r.trace.levels) CHECK(lt.residual == Vec2{0, 0});
}

TEST_CASE("depth rescues a 16 pixel translation") {
    SceneSpec scene;
    scene.width = 192;
    scene.height = 192;
    scene.out_of_plane_rate = 0.0;
    scene.seed = 4;
    const Sequence seq = generate_sequence(scene, FlowModel::uniform(16.0, 0.0));
    LKParams deep;
    deep.pyramid_depth = 4;
    deep.window_radius = 10;
    LKParams flat = deep;
    flat.pyramid_depth = 1;
    const Pyramid pa4 = build_pyramid(seq.frames[0], 4), pb4 = build_pyramid(seq.frames[1], 4);
    const Pyramid pa1 = build_pyramid(seq.frames[0], 1), pb1 = build_pyramid(seq.frames[1], 1);
    int deep_ok = 0, flat_ok = 0, n = 0;
    for (int y = 48; y <= 144; y += 24)
        for (int x = 48; x <= 144; x += 24) {
            ++n;
            const TrackResult d = track_point(pa4, pb4, {double(x), double(y)}, deep);
            const TrackResult f = track_point(pa1, pb1, {double(x), double(y)}, flat);
            if (d.status == SolveStatus::ok && norm(d.total - Vec2{16, 0}) < 0.5) ++deep_ok;
            if (f.status == SolveStatus::ok && norm(f.total - Vec2{16, 0}) < 0.5) ++flat_ok;
        }
    CHECK(deep_ok >= n - 1);
    CHECK(flat_ok <= n / 5);
}

TEST_CASE("period-8 texture is tracked at depth 2 and flat at depth 3") {
    const ImageFrame a = frame_from(96, 96, periodic);
    const ImageFrame b = frame_from(96, 96, [](double x, double y) { return periodic(x - 2.0, y); });
    LKParams p;
    p.pyramid_depth = 2;
    const auto two = testing_support::interior_error(dense_flow(a, b, p).flow, {2, 0}, 16);
    CHECK(two.valid_fraction == 1.0);
    CHECK(two.mean_epe < 0.01);
    p.pyramid_depth = 3;
    const DenseFlowResult three = dense_flow(a, b, p);
    CHECK(three.stats.ill_conditioned > three.stats.pixels / 2);
}

TEST_CASE("dense flow on identical frames") {
    std::vector<double> v(32 * 24, 0.5);
    for (int y = 8; y < 16; ++y)
        for (int x = 8; x < 16; ++x) v[y * 32 + x] = 0.5 + 0.02 * ((x * 7 + y * 3) % 5);
    const ImageFrame f(32, 24, v);
    LKParams p;
    p.window_radius = 2;
    p.pyramid_depth = 2;
    const DenseFlowResult r = dense_flow(f, f, p);
    CHECK(r.flow.valid_count() > 0);
    CHECK(r.flow.valid_count() < r.flow.size());
    CHECK_FALSE(r.flow.valid(0, 0));
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x)
            if (r.flow.valid(x, y)) CHECK(r.flow.at(x, y) == Vec2{0, 0});
    CHECK(r.stats.valid + r.stats.ill_conditioned == r.stats.pixels);
}

TEST_CASE("dense flow recovers a (3, 2) translation") {
    const auto [a, b] = shifted_pair(96, 96, 3.0, 2.0);
    LKParams p;
    const DenseFlowResult r = dense_flow(a, b, p);
    const auto err = testing_support::interior_error(r.flow, {3, 2}, 12);
    CHECK(err.valid_fraction >= 0.95);
    CHECK(err.mean_epe < 0.2);
    const auto [dx, dy] = ssd_search(a, b, 48, 48, 7, 5);
    CHECK(dx == 3);
    CHECK(dy == 2);
}

TEST_CASE("dense flow is bit-identical across worker counts") {
    const auto [a, b] = shifted_pair(64, 48, 2.4, -1.1);
    LKParams p;
    p.pyramid_depth = 2;
    const FlowField one = dense_flow(a, b, p, 1).flow;
    CHECK(dense_flow(a, b, p, 3).flow == one);
    CHECK(dense_flow(a, b, p, 8).flow == one);
}

TEST_CASE("dense flow rejects mismatched frames") {
    const ImageFrame a(10, 10, std::vector<double>(100, 0.1));
    const ImageFrame b(12, 10, std::vector<double>(120, 0.1));
    try {
        dense_flow(a, b, LKParams{});
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::dimension_mismatch);
    }
}

TEST_CASE("zoom halves the recovered displacement") {
    const auto [a, b] = shifted_pair(256, 256, 6.0, 2.0, testing_support::coarse_texture);
    LKParams p;
    p.pyramid_depth = 3;
    const FlowField full = dense_flow(a, b, p).flow;
    const FlowField half = dense_flow(downsample(a), downsample(b), p).flow;
    const auto ef = testing_support::interior_error(full, {6, 2}, 32);
    const auto eh = testing_support::interior_error(half, {3, 1}, 16);
    CHECK(ef.mean_epe / norm({6, 2}) < 0.1);
    CHECK(eh.mean_epe / norm({3, 1}) < 0.1);
}
