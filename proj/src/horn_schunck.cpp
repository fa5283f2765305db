#include "upiv/baselines.hpp"

#include "upiv/error.hpp"
#include "upiv/parallel.hpp"

#include <string>
#include <utility>

namespace upiv {

void HSParams::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, "hs." + what); };
    if (!(alpha > 0.0)) fail("alpha must be > 0");
    if (iterations < 1) fail("iterations must be >= 1");
    if (pyramid_depth < 1) fail("pyramid_depth must be >= 1");
}

HSLinearization hs_linearize(const ImageFrame& frame_a, const ImageFrame& frame_b,
                             const Grid& u0, const Grid& v0) {
    const int w = frame_a.width();
    const int h = frame_a.height();
    Grid warped(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            warped(x, y) = sample_bilinear(frame_b.grid(), x + u0(x, y), y + v0(x, y));

    const GradientField ga = gradient(frame_a.grid());
    const GradientField gb = gradient(warped);
    HSLinearization lin{Grid(w, h), Grid(w, h), Grid(w, h), u0, v0};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            lin.ix(x, y) = 0.5 * (ga.ix(x, y) + gb.ix(x, y));
            lin.iy(x, y) = 0.5 * (ga.iy(x, y) + gb.iy(x, y));
            lin.it(x, y) = warped(x, y) - frame_a(x, y);
        }
    }
    return lin;
}

double hs_energy(const HSLinearization& lin, const Grid& u, const Grid& v, double alpha) {
    const int w = u.width();
    const int h = u.height();
    const double beta = 0.25 * alpha * alpha;
    double data = 0.0;
    double smooth = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double r = lin.ix(x, y) * (u(x, y) - lin.u0(x, y)) +
                             lin.iy(x, y) * (v(x, y) - lin.v0(x, y)) + lin.it(x, y);
            data += r * r;
            if (x + 1 < w) {
                const double du = u(x + 1, y) - u(x, y);
                const double dv = v(x + 1, y) - v(x, y);
                smooth += du * du + dv * dv;
            }
            if (y + 1 < h) {
                const double du = u(x, y + 1) - u(x, y);
                const double dv = v(x, y + 1) - v(x, y);
                smooth += du * du + dv * dv;
            }
        }
    }
    return data + beta * smooth;
}

namespace {

// One Jacobi sweep. Out-of-frame neighbours are dropped (reflecting boundary),
// so border pixels average over fewer neighbours.
void jacobi_sweep(const HSLinearization& lin, double alpha, const Grid& u, const Grid& v,
                  Grid& u_next, Grid& v_next, unsigned workers) {
    const int w = u.width();
    const int h = u.height();
    const double beta = 0.25 * alpha * alpha;
    parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t y0, std::size_t y1) {
        for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
            for (int x = 0; x < w; ++x) {
                double su = 0.0, sv = 0.0;
                int n = 0;
                if (x > 0) { su += u(x - 1, y); sv += v(x - 1, y); ++n; }
                if (x + 1 < w) { su += u(x + 1, y); sv += v(x + 1, y); ++n; }
                if (y > 0) { su += u(x, y - 1); sv += v(x, y - 1); ++n; }
                if (y + 1 < h) { su += u(x, y + 1); sv += v(x, y + 1); ++n; }
                const double ubar = su / n;
                const double vbar = sv / n;
                const double ix = lin.ix(x, y);
                const double iy = lin.iy(x, y);
                const double r = ix * (ubar - lin.u0(x, y)) + iy * (vbar - lin.v0(x, y)) + lin.it(x, y);
                const double k = r / (beta * n + ix * ix + iy * iy);
                u_next(x, y) = ubar - ix * k;
                v_next(x, y) = vbar - iy * k;
            }
        }
    });
}

Grid upsample_flow(const Grid& coarse, int w, int h) {
    Grid fine(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) fine(x, y) = 2.0 * sample_bilinear(coarse, 0.5 * x, 0.5 * y);
    return fine;
}

}  // namespace

HSResult horn_schunck(const ImageFrame& frame_a, const ImageFrame& frame_b,
                      const HSParams& params, unsigned workers) {
    params.validate();
    if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height())
        throw Error(Errc::dimension_mismatch, "horn_schunck: frame sizes differ");

    const Pyramid pyr_a = build_pyramid(frame_a, params.pyramid_depth);
    const Pyramid pyr_b = build_pyramid(frame_b, params.pyramid_depth);

    HSResult result;
    Grid u, v;
    for (int level = pyr_a.depth() - 1; level >= 0; --level) {
        const ImageFrame& a = pyr_a.levels[level];
        const ImageFrame& b = pyr_b.levels[level];
        if (u.empty()) {
            u = Grid(a.width(), a.height());
            v = Grid(a.width(), a.height());
        } else {
            u = upsample_flow(u, a.width(), a.height());
            v = upsample_flow(v, a.width(), a.height());
        }
        const HSLinearization lin = hs_linearize(a, b, u, v);
        const bool record = params.record_energy && level == 0;
        if (record) result.energies.push_back(hs_energy(lin, u, v, params.alpha));
        Grid u_next(a.width(), a.height());
        Grid v_next(a.width(), a.height());
        for (int it = 0; it < params.iterations; ++it) {
            jacobi_sweep(lin, params.alpha, u, v, u_next, v_next, workers);
            std::swap(u, u_next);
            std::swap(v, v_next);
            if (record) result.energies.push_back(hs_energy(lin, u, v, params.alpha));
        }
    }

    result.flow = FlowField(frame_a.width(), frame_a.height());
    for (int y = 0; y < frame_a.height(); ++y)
        for (int x = 0; x < frame_a.width(); ++x) result.flow.set(x, y, {u(x, y), v(x, y)});
    return result;
}

}  // namespace upiv
