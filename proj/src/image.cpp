#include "upiv/image.hpp"

#include "upiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace upiv {

Grid::Grid(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width < 0 || height < 0)
        throw Error(Errc::invalid_argument, "grid dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Grid::Grid(int width, int height, std::vector<double> values)
    : width_(width), height_(height), data_(std::move(values)) {
    if (width < 0 || height < 0)
        throw Error(Errc::invalid_argument, "grid dimensions must be non-negative");
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw Error(Errc::dimension_mismatch,
                    "grid payload has " + std::to_string(data_.size()) + " values, expected " +
                        std::to_string(static_cast<std::size_t>(width) * height));
}

double Grid::clamped(int x, int y) const noexcept {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return (*this)(x, y);
}

ImageFrame::ImageFrame(Grid intensities) : grid_(std::move(intensities)) {
    if (grid_.width() < 2 || grid_.height() < 2)
        throw Error(Errc::dimension_too_small, "frame must be at least 2x2, got " +
                                                   std::to_string(grid_.width()) + "x" +
                                                   std::to_string(grid_.height()));
    for (double v : grid_.values()) {
        if (!std::isfinite(v)) throw Error(Errc::non_finite, "frame contains a non-finite intensity");
        if (v < 0.0 || v > 1.0)
            throw Error(Errc::invalid_argument, "frame intensity outside [0, 1]");
    }
}

ImageFrame::ImageFrame(int width, int height, std::vector<double> intensities)
    : ImageFrame(Grid(width, height, std::move(intensities))) {}

ImageFrame ImageFrame::from_clamped(Grid values) {
    for (double& v : values.values()) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    return ImageFrame(std::move(values));
}

Grid downsample_grid(const Grid& src) {
    if (src.width() < 4 || src.height() < 4)
        throw Error(Errc::dimension_too_small, "downsample needs at least 4x4, got " +
                                                   std::to_string(src.width()) + "x" +
                                                   std::to_string(src.height()));
    const int w = (src.width() + 1) / 2;
    const int h = (src.height() + 1) / 2;
    Grid out(w, h);
    for (int y = 0; y < h; ++y) {
        const int sy = 2 * y;
        for (int x = 0; x < w; ++x) {
            const int sx = 2 * x;
            const double centre = src.clamped(sx, sy);
            const double edges = src.clamped(sx - 1, sy) + src.clamped(sx + 1, sy) +
                                 src.clamped(sx, sy - 1) + src.clamped(sx, sy + 1);
            const double corners = src.clamped(sx - 1, sy - 1) + src.clamped(sx + 1, sy + 1) +
                                   src.clamped(sx + 1, sy - 1) + src.clamped(sx - 1, sy + 1);
            out(x, y) = 0.25 * centre + 0.125 * edges + 0.0625 * corners;
        }
    }
    return out;
}

ImageFrame downsample(const ImageFrame& frame) {
    // A convex combination of values in [0, 1] can drift past 1 by an ulp.
    return ImageFrame::from_clamped(downsample_grid(frame.grid()));
}

Pyramid build_pyramid(const ImageFrame& frame, int requested_depth) {
    if (requested_depth < 1)
        throw Error(Errc::invalid_argument, "pyramid depth must be at least 1");
    Pyramid pyr;
    pyr.requested_depth = requested_depth;
    pyr.levels.push_back(frame);
    while (pyr.depth() < requested_depth) {
        const ImageFrame& top = pyr.levels.back();
        if (top.width() < 4 || top.height() < 4) break;
        pyr.levels.push_back(downsample(top));
    }
    return pyr;
}

GradientField gradient(const Grid& a) {
    const int w = a.width();
    const int h = a.height();
    GradientField g{Grid(w, h), Grid(w, h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double dx;
            if (x == 0) dx = a(1, y) - a(0, y);
            else if (x == w - 1) dx = a(w - 1, y) - a(w - 2, y);
            else dx = 0.5 * (a(x + 1, y) - a(x - 1, y));

            double dy;
            if (y == 0) dy = a(x, 1) - a(x, 0);
            else if (y == h - 1) dy = a(x, h - 1) - a(x, h - 2);
            else dy = 0.5 * (a(x, y + 1) - a(x, y - 1));

            g.ix(x, y) = dx;
            g.iy(x, y) = dy;
        }
    }
    return g;
}

GradientField gradient(const ImageFrame& frame) { return gradient(frame.grid()); }

namespace {

struct Tap {
    int i0, i1;
    double f;
};

Tap locate(double c, int n) {
    c = std::clamp(c, 0.0, static_cast<double>(n - 1));
    const int i0 = std::min(static_cast<int>(c), n - 1);
    return {i0, std::min(i0 + 1, n - 1), c - i0};
}

}  // namespace

double sample_bilinear(const Grid& g, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y))
        throw Error(Errc::non_finite, "sample_bilinear: non-finite coordinate");
    const Tap tx = locate(x, g.width());
    const Tap ty = locate(y, g.height());
    const double top = g(tx.i0, ty.i0) + tx.f * (g(tx.i1, ty.i0) - g(tx.i0, ty.i0));
    const double bot = g(tx.i0, ty.i1) + tx.f * (g(tx.i1, ty.i1) - g(tx.i0, ty.i1));
    return top + ty.f * (bot - top);
}

void sample_window(const Grid& g, double cx, double cy, int radius, std::span<double> out) {
    if (!std::isfinite(cx) || !std::isfinite(cy))
        throw Error(Errc::non_finite, "sample_window: non-finite centre");
    const int side = 2 * radius + 1;
    if (out.size() < static_cast<std::size_t>(side) * side)
        throw Error(Errc::invalid_argument, "sample_window: output buffer too small");

    const int w = g.width();
    const int h = g.height();
    const double bx = std::floor(cx);
    const double by = std::floor(cy);
    const double fx = cx - bx;
    const double fy = cy - by;
    // Far-off centres (diverged solves) still clamp correctly.
    const double lim = 4.0 * (static_cast<double>(w) + h) + radius;
    const int ix = static_cast<int>(std::clamp(bx, -lim, lim));
    const int iy = static_cast<int>(std::clamp(by, -lim, lim));

    // Index lists and weights per axis; clamping a coordinate onto the border
    // collapses its fractional weight onto the border pixel.
    thread_local std::vector<int> xs0, xs1, ys0, ys1;
    thread_local std::vector<double> wx, wy;
    for (auto* v : {&xs0, &xs1, &ys0, &ys1}) v->resize(side);
    wx.resize(side);
    wy.resize(side);
    for (int k = 0; k < side; ++k) {
        const int px = ix - radius + k;
        if (px < 0) { xs0[k] = xs1[k] = 0; wx[k] = 0.0; }
        else if (px >= w - 1) { xs0[k] = xs1[k] = w - 1; wx[k] = 0.0; }
        else { xs0[k] = px; xs1[k] = px + 1; wx[k] = fx; }

        const int py = iy - radius + k;
        if (py < 0) { ys0[k] = ys1[k] = 0; wy[k] = 0.0; }
        else if (py >= h - 1) { ys0[k] = ys1[k] = h - 1; wy[k] = 0.0; }
        else { ys0[k] = py; ys1[k] = py + 1; wy[k] = fy; }
    }
    std::size_t o = 0;
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i, ++o) {
            const double a = g(xs0[i], ys0[j]);
            const double b = g(xs1[i], ys0[j]);
            const double c = g(xs0[i], ys1[j]);
            const double d = g(xs1[i], ys1[j]);
            const double top = a + wx[i] * (b - a);
            const double bot = c + wx[i] * (d - c);
            out[o] = top + wy[j] * (bot - top);
        }
    }
}

}  // namespace upiv
