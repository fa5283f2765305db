#include "upiv/lk_pyramidal.hpp"

#include "upiv/error.hpp"
#include "upiv/parallel.hpp"

#include <cmath>
#include <string>

namespace upiv {

void LKParams::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, "lk." + what); };
    if (window_radius < 1) fail("window_radius must be >= 1");
    if (pyramid_depth < 1) fail("pyramid_depth must be >= 1");
    if (max_iterations < 1) fail("max_iterations must be >= 1");
    if (!(convergence_threshold > 0.0)) fail("convergence_threshold must be > 0");
    if (!(min_eigenvalue_threshold >= 0.0)) fail("min_eigenvalue_threshold must be >= 0");
}

std::vector<double> window_weights(const LKParams& params) {
    const int r = params.window_radius;
    const int side = 2 * r + 1;
    std::vector<double> w(static_cast<std::size_t>(side) * side, 1.0);
    if (params.weight_mode == WeightMode::uniform) return w;

    const double sigma = 0.5 * (r + 1);
    double sum = 0.0;
    for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(j + r) * side + (i + r)] = v;
            sum += v;
        }
    }
    const double scale = static_cast<double>(w.size()) / sum;
    for (double& v : w) v *= scale;
    return w;
}

double min_eigenvalue(double gxx, double gxy, double gyy) noexcept {
    const double mean = 0.5 * (gxx + gyy);
    const double half_diff = 0.5 * (gxx - gyy);
    return mean - std::sqrt(half_diff * half_diff + gxy * gxy);
}

Vec2 IterationTrace::weighted_residual_sum() const {
    Vec2 sum;
    for (const LevelTrace& t : levels) sum += std::ldexp(1.0, t.level) * t.residual;
    return sum;
}

namespace {

struct Scratch {
    std::vector<double> a, ix, iy, b, w;

    void resize(std::size_t n) {
        a.resize(n);
        ix.resize(n);
        iy.resize(n);
        b.resize(n);
        w.resize(n);
    }
};

// Copies the window weights, zeroing taps whose position lies outside the frame.
void mask_weights(std::span<const double> weights, int radius, Vec2 center, int width, int height,
                  std::span<double> out) {
    const int side = 2 * radius + 1;
    for (int j = 0; j < side; ++j) {
        const double y = center.y + (j - radius);
        const bool row_in = y >= 0.0 && y <= height - 1.0;
        for (int i = 0; i < side; ++i) {
            const double x = center.x + (i - radius);
            const std::size_t k = static_cast<std::size_t>(j) * side + i;
            out[k] = row_in && x >= 0.0 && x <= width - 1.0 ? weights[k] : 0.0;
        }
    }
}

StructureTensor accumulate_tensor(std::span<const double> ix, std::span<const double> iy,
                                  std::span<const double> w) {
    StructureTensor g;
    for (std::size_t k = 0; k < w.size(); ++k) {
        g.gxx += w[k] * ix[k] * ix[k];
        g.gxy += w[k] * ix[k] * iy[k];
        g.gyy += w[k] * iy[k] * iy[k];
    }
    g.min_eigenvalue = min_eigenvalue(g.gxx, g.gxy, g.gyy);
    return g;
}

RefineResult refine_impl(const ImageFrame& frame_a, const GradientField& grad,
                         const ImageFrame& frame_b, Vec2 point, Vec2 guess,
                         const LKParams& params, std::span<const double> weights, Scratch& s) {
    const int r = params.window_radius;
    s.resize(weights.size());
    sample_window(frame_a.grid(), point.x, point.y, r, s.a);
    sample_window(grad.ix, point.x, point.y, r, s.ix);
    sample_window(grad.iy, point.x, point.y, r, s.iy);

    mask_weights(weights, r, point, frame_a.width(), frame_a.height(), s.w);
    const std::span<const double> wt(s.w);
    const StructureTensor g = accumulate_tensor(s.ix, s.iy, wt);

    RefineResult out;
    out.trace.guess = guess;
    out.trace.min_eigenvalue = g.min_eigenvalue;
    const double det = g.determinant();
    if (!(g.min_eigenvalue >= params.min_eigenvalue_threshold) || !(det > 0.0)) {
        out.status = SolveStatus::ill_conditioned;
        return out;
    }
    const double inv_xx = g.gyy / det;
    const double inv_xy = -g.gxy / det;
    const double inv_yy = g.gxx / det;

    Vec2 zeta;
    for (int k = 1; k <= params.max_iterations; ++k) {
        sample_window(frame_b.grid(), point.x + guess.x + zeta.x, point.y + guess.y + zeta.y, r,
                      s.b);
        double bx = 0.0;
        double by = 0.0;
        for (std::size_t t = 0; t < wt.size(); ++t) {
            const double di = wt[t] * (s.a[t] - s.b[t]);
            bx += di * s.ix[t];
            by += di * s.iy[t];
        }
        const Vec2 step{inv_xx * bx + inv_xy * by, inv_xy * bx + inv_yy * by};
        zeta += step;
        out.trace.iterations = k;
        out.trace.final_step = norm(step);
        if (!std::isfinite(zeta.x) || !std::isfinite(zeta.y)) {
            out.status = SolveStatus::ill_conditioned;
            return out;
        }
        if (out.trace.final_step < params.convergence_threshold) {
            out.trace.converged = true;
            break;
        }
    }
    out.residual = zeta;
    out.trace.residual = zeta;
    return out;
}

}  // namespace

StructureTensor structure_tensor(const GradientField& grad, Vec2 center, const LKParams& params) {
    const std::vector<double> w = window_weights(params);
    std::vector<double> ix(w.size()), iy(w.size()), wt(w.size());
    sample_window(grad.ix, center.x, center.y, params.window_radius, ix);
    sample_window(grad.iy, center.x, center.y, params.window_radius, iy);
    mask_weights(w, params.window_radius, center, grad.ix.width(), grad.ix.height(), wt);
    return accumulate_tensor(ix, iy, wt);
}

RefineResult lk_refine(const ImageFrame& frame_a, const ImageFrame& frame_b, Vec2 point,
                       Vec2 guess, const LKParams& params) {
    params.validate();
    if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height())
        throw Error(Errc::dimension_mismatch, "lk_refine: frames differ in size");
    const GradientField grad = gradient(frame_a);
    const std::vector<double> w = window_weights(params);
    Scratch s;
    return refine_impl(frame_a, grad, frame_b, point, guess, params, w, s);
}

PyramidTracker::PyramidTracker(const Pyramid& pyr_a, const Pyramid& pyr_b,
                               const LKParams& params)
    : pyr_a_(pyr_a), pyr_b_(pyr_b), params_(params), weights_(window_weights(params)) {
    params_.validate();
    if (pyr_a.depth() != pyr_b.depth() || pyr_a.depth() < 1)
        throw Error(Errc::dimension_mismatch, "pyramids differ in depth");
    for (int l = 0; l < pyr_a.depth(); ++l) {
        const ImageFrame& a = pyr_a.levels[l];
        const ImageFrame& b = pyr_b.levels[l];
        if (a.width() != b.width() || a.height() != b.height())
            throw Error(Errc::dimension_mismatch,
                        "pyramid level " + std::to_string(l) + " differs in size");
        grads_.push_back(gradient(a));
    }
}

RefineResult PyramidTracker::refine(int level, Vec2 point_at_level, Vec2 guess) const {
    thread_local Scratch s;
    return refine_impl(pyr_a_.levels[level], grads_[level], pyr_b_.levels[level], point_at_level,
                       guess, params_, weights_, s);
}

TrackResult PyramidTracker::track(Vec2 point) const {
    TrackResult out;
    out.trace.levels.reserve(depth());
    Vec2 guess;  // zero prediction at the coarsest level
    for (int level = depth() - 1; level >= 0; --level) {
        const double scale = std::ldexp(1.0, -level);
        RefineResult r = refine(level, scale * point, guess);
        r.trace.level = level;
        out.trace.levels.push_back(r.trace);
        if (r.status != SolveStatus::ok) {
            out.status = r.status;
            out.failed_level = level;
            return out;
        }
        if (level == 0) {
            out.total = guess + r.residual;
        } else {
            guess = 2.0 * (guess + r.residual);
        }
    }
    return out;
}

TrackResult track_point(const Pyramid& pyr_a, const Pyramid& pyr_b, Vec2 point,
                        const LKParams& params) {
    const PyramidTracker tracker(pyr_a, pyr_b, params);
    return tracker.track(point);
}

DenseFlowResult dense_flow(const ImageFrame& frame_a, const ImageFrame& frame_b,
                           const LKParams& params, unsigned workers) {
    params.validate();
    if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height())
        throw Error(Errc::dimension_mismatch,
                    "dense_flow: frame sizes differ (" + std::to_string(frame_a.width()) + "x" +
                        std::to_string(frame_a.height()) + " vs " +
                        std::to_string(frame_b.width()) + "x" +
                        std::to_string(frame_b.height()) + ")");

    const Pyramid pyr_a = build_pyramid(frame_a, params.pyramid_depth);
    const Pyramid pyr_b = build_pyramid(frame_b, params.pyramid_depth);
    const PyramidTracker tracker(pyr_a, pyr_b, params);

    const int w = frame_a.width();
    const int h = frame_a.height();
    DenseFlowResult result{FlowField(w, h), {}};
    std::vector<int> iterations(static_cast<std::size_t>(w) * h, 0);
    std::vector<std::uint8_t> status(static_cast<std::size_t>(w) * h, 0);  // 1 ill, 2 non-conv

    parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t y0, std::size_t y1) {
        for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y) {
            for (int x = 0; x < w; ++x) {
                const TrackResult t = tracker.track({static_cast<double>(x), static_cast<double>(y)});
                const std::size_t i = result.flow.index(x, y);
                int iters = 0;
                bool non_converged = false;
                for (const LevelTrace& lt : t.trace.levels) {
                    iters += lt.iterations;
                    if (lt.iterations > 0 && !lt.converged) non_converged = true;
                }
                iterations[i] = iters;
                if (t.status == SolveStatus::ok) {
                    result.flow.set(x, y, t.total);
                    status[i] = non_converged ? 2 : 0;
                } else {
                    result.flow.set_invalid(x, y);
                    status[i] = 1;
                }
            }
        }
    });

    DenseFlowStats& st = result.stats;
    st.pixels = iterations.size();
    st.depth_used = pyr_a.depth();
    st.depth_clamped = pyr_a.clamped();
    double total_iters = 0.0;
    for (std::size_t i = 0; i < iterations.size(); ++i) {
        total_iters += iterations[i];
        if (status[i] == 1) ++st.ill_conditioned;
        if (status[i] == 2) ++st.non_converged;
    }
    st.valid = st.pixels - st.ill_conditioned;
    st.mean_iterations = st.pixels ? total_iters / static_cast<double>(st.pixels) : 0.0;
    return result;
}

}  // namespace upiv
