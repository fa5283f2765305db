#pragma once

#include "upiv/flow_field.hpp"
#include "upiv/image.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using upiv::FlowField;
using upiv::Grid;
using upiv::ImageFrame;

inline ImageFrame frame_from(int w, int h, const std::function<double(double, double)>& f) {
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) v[static_cast<std::size_t>(y) * w + x] = f(x, y);
    return ImageFrame(w, h, std::move(v));
}

// Smooth band-limited texture in [0, 1]: a fixed sum of oblique sinusoids.
inline double smooth_texture(double x, double y) {
    static constexpr double k[6][3] = {{0.21, 0.07, 0.3}, {-0.05, 0.19, 1.1}, {0.13, -0.16, 2.0},
                                       {0.31, 0.11, 0.7}, {0.09, 0.27, 2.6}, {-0.23, 0.17, 4.1}};
    double s = 0.0;
    for (const auto& t : k) s += std::sin(t[0] * x + t[1] * y + t[2]);
    return 0.5 + s / 12.0;
}

// Same texture with longer wavelengths, for large pyramid-depth displacements.
inline double coarse_texture(double x, double y) { return smooth_texture(0.35 * x, 0.35 * y); }

// Frame pair with frame B(x) = A(x - d).
inline std::pair<ImageFrame, ImageFrame> shifted_pair(int w, int h, double dx, double dy,
                                                      double (*tex)(double, double) = smooth_texture) {
    return {frame_from(w, h, [&](double x, double y) { return tex(x, y); }),
            frame_from(w, h, [&](double x, double y) { return tex(x - dx, y - dy); })};
}

inline FlowField random_field(std::mt19937_64& rng, int w, int h, double invalid_fraction) {
    std::uniform_real_distribution<float> val(-50.0f, 50.0f);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    FlowField f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (coin(rng) < invalid_fraction) f.set_invalid(x, y);
            else f.set(x, y, {val(rng), val(rng)});
        }
    return f;
}

// Mean endpoint error against a constant vector over pixels at least `margin`
// from the border; also reports the valid fraction of that interior.
struct InteriorError {
    double mean_epe = 0.0;
    double valid_fraction = 0.0;
    std::size_t count = 0;
};

inline InteriorError interior_error(const FlowField& f, upiv::Vec2 truth, int margin) {
    InteriorError out;
    std::size_t total = 0;
    double sum = 0.0;
    for (int y = margin; y < f.height() - margin; ++y)
        for (int x = margin; x < f.width() - margin; ++x) {
            ++total;
            if (!f.valid(x, y)) continue;
            sum += upiv::norm(f.at(x, y) - truth);
            ++out.count;
        }
    out.mean_epe = out.count ? sum / static_cast<double>(out.count) : 0.0;
    out.valid_fraction = total ? static_cast<double>(out.count) / static_cast<double>(total) : 0.0;
    return out;
}

}  // namespace testing_support
