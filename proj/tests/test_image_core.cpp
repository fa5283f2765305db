#include "support.hpp"

#include "upiv/error.hpp"
#include "upiv/image.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace upiv;
using testing_support::frame_from;

namespace {

// Independent 3x3 convolution with explicit edge replication.
double brute_downsample(const Grid& g, int x, int y) {
    static const double k[3][3] = {{1 / 16.0, 1 / 8.0, 1 / 16.0},
                                   {1 / 8.0, 1 / 4.0, 1 / 8.0},
                                   {1 / 16.0, 1 / 8.0, 1 / 16.0}};
    double s = 0.0;
    for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
            const int sx = std::min(std::max(2 * x + i, 0), g.width() - 1);
            const int sy = std::min(std::max(2 * y + j, 0), g.height() - 1);
            s += k[j + 1][i + 1] * g(sx, sy);
        }
    return s;
}

ImageFrame random_frame(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (double& x : v) x = d(rng);
    return ImageFrame(w, h, std::move(v));
}

}  // namespace

TEST_CASE("frame invariants are enforced") {
    CHECK_THROWS_AS(ImageFrame(1, 5, std::vector<double>(5, 0.0)), Error);
    CHECK_THROWS_AS(ImageFrame(2, 2, std::vector<double>(3, 0.0)), Error);
    CHECK_THROWS_AS(ImageFrame(2, 2, {0.0, 0.5, 1.5, 0.0}), Error);
    CHECK_THROWS_AS(ImageFrame(2, 2, {0.0, 0.5, std::nan(""), 0.0}), Error);
    const ImageFrame ok(2, 2, {0.0, 0.25, 0.5, 1.0});
    CHECK(ok(1, 1) == 1.0);
}

TEST_CASE("downsample of constant and zero frames") {
    const ImageFrame half(4, 4, std::vector<double>(16, 0.5));
    const ImageFrame out = downsample(half);
    REQUIRE(out.width() == 2);
    REQUIRE(out.height() == 2);
    for (double v : out.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

    const ImageFrame zero = downsample(ImageFrame(4, 4, std::vector<double>(16, 0.0)));
    for (double v : zero.values()) CHECK(v == 0.0);
}

TEST_CASE("downsample corner impulse") {
    std::vector<double> v(16, 0.0);
    v[0] = 1.0;
    const ImageFrame out = downsample(ImageFrame(4, 4, v));
    CHECK(out(0, 0) == doctest::Approx(0.5625).epsilon(1e-15));
    CHECK(out(0, 0) == doctest::Approx(brute_downsample(ImageFrame(4, 4, v).grid(), 0, 0)));
}

TEST_CASE("downsample matches brute-force convolution on random frames") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 4 + static_cast<int>(rng() % 30);
        const int h = 4 + static_cast<int>(rng() % 30);
        const ImageFrame f = random_frame(rng, w, h);
        const ImageFrame out = downsample(f);
        REQUIRE(out.width() == (w + 1) / 2);
        REQUIRE(out.height() == (h + 1) / 2);
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                CHECK(out(x, y) == doctest::Approx(brute_downsample(f.grid(), x, y)).epsilon(1e-14));
    }
}

TEST_CASE("downsample preserves range") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ImageFrame f = random_frame(rng, 17, 9);
        const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
        const ImageFrame out = downsample(f);
        for (double v : out.values()) {
            CHECK(v >= *lo);
            CHECK(v <= *hi);
        }
    }
}

TEST_CASE("downsample rejects frames below 4x4") {
    CHECK_THROWS_AS(downsample(ImageFrame(3, 8, std::vector<double>(24, 0.1))), Error);
    try {
        downsample(ImageFrame(8, 3, std::vector<double>(24, 0.1)));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::dimension_too_small);
    }
}

TEST_CASE("pyramid sizes and clamping") {
    const ImageFrame f(640, 480, std::vector<double>(640 * 480, 0.3));
    const Pyramid p = build_pyramid(f, 3);
    REQUIRE(p.depth() == 3);
    CHECK(p.levels[1].width() == 320);
    CHECK(p.levels[1].height() == 240);
    CHECK(p.levels[2].width() == 160);
    CHECK(p.levels[2].height() == 120);
    CHECK_FALSE(p.clamped());

    CHECK(build_pyramid(f, 1).depth() == 1);

    const Pyramid small = build_pyramid(ImageFrame(8, 8, std::vector<double>(64, 0.2)), 6);
    CHECK(small.depth() == 3);
    CHECK(small.clamped());
    CHECK(small.levels.back().width() == 2);
}

TEST_CASE("pyramid size invariants over random sizes") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 2 + static_cast<int>(rng() % 1023);
        const int h = 2 + static_cast<int>(rng() % 1023);
        const int depth = 1 + static_cast<int>(rng() % 12);
        const Pyramid p = build_pyramid(ImageFrame(w, h, std::vector<double>(static_cast<std::size_t>(w) * h, 0.5)), depth);
        REQUIRE(p.depth() >= 1);
        CHECK(p.depth() <= depth);
        for (int l = 1; l < p.depth(); ++l) {
            CHECK(p.levels[l].width() == (p.levels[l - 1].width() + 1) / 2);
            CHECK(p.levels[l].height() == (p.levels[l - 1].height() + 1) / 2);
        }
        CHECK(p.levels.back().width() >= 2);
        CHECK(p.levels.back().height() >= 2);
        if (p.depth() < depth) {
            const ImageFrame& top = p.levels.back();
            CHECK((top.width() < 4 || top.height() < 4));
        }
    }
}

TEST_CASE("gradient of constant and ramp frames") {
    const GradientField g0 = gradient(ImageFrame(6, 5, std::vector<double>(30, 0.4)));
    for (double v : g0.ix.values()) CHECK(v == 0.0);
    for (double v : g0.iy.values()) CHECK(v == 0.0);

    const int w = 9;
    const ImageFrame ramp = frame_from(w, 4, [&](double x, double) { return x / (w - 1); });
    const GradientField g = gradient(ramp);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < w; ++x) {
            CHECK(g.ix(x, y) == doctest::Approx(1.0 / (w - 1)));
            CHECK(g.iy(x, y) == 0.0);
        }
}

TEST_CASE("gradient on a 3x3 grid by hand") {
    std::vector<double> v(9);
    for (int i = 0; i < 9; ++i) v[i] = i / 8.0;
    const GradientField g = gradient(ImageFrame(3, 3, v));
    CHECK(g.ix(1, 1) == doctest::Approx((5 / 8.0 - 3 / 8.0) / 2));
    CHECK(g.iy(1, 1) == doctest::Approx((7 / 8.0 - 1 / 8.0) / 2));
    CHECK(g.ix(0, 1) == doctest::Approx(4 / 8.0 - 3 / 8.0));
    CHECK(g.iy(2, 2) == doctest::Approx(8 / 8.0 - 5 / 8.0));
}

TEST_CASE("interior gradient telescopes along a row") {
    std::mt19937_64 rng(5);
    const ImageFrame f = random_frame(rng, 23, 7);
    const GradientField g = gradient(f);
    for (int y = 0; y < 7; ++y) {
        double s = 0.0;
        for (int x = 1; x < 22; ++x) s += g.ix(x, y);
        const double expect = (f(22, y) + f(21, y) - f(1, y) - f(0, y)) / 2.0;
        CHECK(s == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("bilinear sampling") {
    std::mt19937_64 rng(9);
    const ImageFrame f = random_frame(rng, 8, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) CHECK(sample_bilinear(f, x, y) == f(x, y));

    const ImageFrame row(2, 2, {0.0, 1.0, 0.0, 1.0});
    CHECK(sample_bilinear(row, 0.5, 0.0) == doctest::Approx(0.5));
    CHECK(sample_bilinear(f, -2.7, 0.0) == f(0, 0));
    CHECK(sample_bilinear(f, 100.0, 100.0) == f(7, 5));
    CHECK_THROWS_AS(sample_bilinear(f, std::nan(""), 0.0), Error);
    CHECK_THROWS_AS(sample_bilinear(f, 0.0, INFINITY), Error);
}

TEST_CASE("bilinear sampling is continuous and bounded") {
    std::mt19937_64 rng(13);
    const ImageFrame f = random_frame(rng, 7, 7);
    std::uniform_real_distribution<double> c(-1.0, 7.0);
    for (int t = 0; t < 500; ++t) {
        const double x = c(rng);
        const double y = c(rng);
        const double v = sample_bilinear(f, x, y);
        const double e = 1e-7;
        CHECK(std::abs(sample_bilinear(f, x + e, y) - v) < 1e-5);
        CHECK(std::abs(sample_bilinear(f, x, y + e) - v) < 1e-5);
        const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, 6);
        const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, 6);
        const int x1 = std::min(x0 + 1, 6);
        const int y1 = std::min(y0 + 1, 6);
        const double lo = std::min({f(x0, y0), f(x1, y0), f(x0, y1), f(x1, y1)});
        const double hi = std::max({f(x0, y0), f(x1, y0), f(x0, y1), f(x1, y1)});
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
    }
}

TEST_CASE("sample_window agrees with pointwise bilinear sampling") {
    std::mt19937_64 rng(17);
    const ImageFrame f = random_frame(rng, 12, 10);
    std::uniform_real_distribution<double> c(-3.0, 14.0);
    std::vector<double> out(25);
    for (int t = 0; t < 200; ++t) {
        const double cx = c(rng);
        const double cy = c(rng);
        sample_window(f.grid(), cx, cy, 2, out);
        for (int j = -2; j <= 2; ++j)
            for (int i = -2; i <= 2; ++i)
                CHECK(out[(j + 2) * 5 + (i + 2)] ==
                      doctest::Approx(sample_bilinear(f, cx + i, cy + j)).epsilon(1e-12));
    }
}
