#include "upiv/baselines.hpp"

#include "upiv/error.hpp"
#include "upiv/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace upiv {

void CCParams::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, "cc." + what); };
    if (template_size < 8) fail("template_size must be >= 8");
    if (search_radius < 1) fail("search_radius must be >= 1");
    if (grid_step < 1) fail("grid_step must be >= 1");
    if (!(ambiguity_ratio > 0.0)) fail("ambiguity_ratio must be > 0");
}

double CorrelationSurface::peak_ratio() const {
    if (!(peak_value > 0.0)) return 1.0;
    return secondary_peak_value / peak_value;
}

double CCFlowResult::ambiguous_fraction() const {
    std::size_t n = 0;
    std::size_t amb = 0;
    for (const CCWindow& w : windows) {
        if (!w.valid) continue;
        ++n;
        if (w.ambiguous) ++amb;
    }
    return n ? static_cast<double>(amb) / static_cast<double>(n) : 0.0;
}

namespace {

// Windows whose variance per pixel is below this are treated as flat.
constexpr double kFlatVariance = 1e-12;

struct Placement {
    int tx0, ty0;  // template top-left in frame A
    int n;         // template side
    int r;
};

Placement place(const ImageFrame& a, const ImageFrame& b, int cx, int cy, const CCParams& p) {
    p.validate();
    if (a.width() != b.width() || a.height() != b.height())
        throw Error(Errc::dimension_mismatch, "ncc_displacement: frames differ in size");
    const Placement pl{cx - p.template_size / 2, cy - p.template_size / 2, p.template_size,
                       p.search_radius};
    if (pl.tx0 - pl.r < 0 || pl.ty0 - pl.r < 0 || pl.tx0 + pl.n + pl.r > a.width() ||
        pl.ty0 + pl.n + pl.r > a.height())
        throw Error(Errc::window_out_of_bounds,
                    "interrogation window at (" + std::to_string(cx) + ", " + std::to_string(cy) +
                        ") with search radius " + std::to_string(pl.r) + " leaves the frame");
    return pl;
}

// Zero-mean template values and their sum of squares.
std::vector<double> centred_template(const ImageFrame& a, const Placement& pl, double& energy) {
    std::vector<double> t(static_cast<std::size_t>(pl.n) * pl.n);
    double sum = 0.0;
    for (int j = 0; j < pl.n; ++j)
        for (int i = 0; i < pl.n; ++i) {
            const double v = a(pl.tx0 + i, pl.ty0 + j);
            t[static_cast<std::size_t>(j) * pl.n + i] = v;
            sum += v;
        }
    const double mean = sum / static_cast<double>(t.size());
    energy = 0.0;
    for (double& v : t) {
        v -= mean;
        energy += v * v;
    }
    if (energy <= kFlatVariance * static_cast<double>(t.size()))
        throw Error(Errc::zero_variance, "template at (" + std::to_string(pl.tx0 + pl.n / 2) +
                                             ", " + std::to_string(pl.ty0 + pl.n / 2) +
                                             ") has zero variance");
    return t;
}

void direct_scores(const ImageFrame& b, const Placement& pl, const std::vector<double>& t,
                   double t_energy, std::vector<double>& scores) {
    const int side = 2 * pl.r + 1;
    const double count = static_cast<double>(pl.n) * pl.n;
    for (int dy = -pl.r; dy <= pl.r; ++dy) {
        for (int dx = -pl.r; dx <= pl.r; ++dx) {
            const int bx0 = pl.tx0 + dx;
            const int by0 = pl.ty0 + dy;
            double sum = 0.0;
            for (int j = 0; j < pl.n; ++j)
                for (int i = 0; i < pl.n; ++i) sum += b(bx0 + i, by0 + j);
            const double mean = sum / count;
            double cross = 0.0;
            double energy = 0.0;
            for (int j = 0; j < pl.n; ++j) {
                for (int i = 0; i < pl.n; ++i) {
                    const double v = b(bx0 + i, by0 + j) - mean;
                    cross += t[static_cast<std::size_t>(j) * pl.n + i] * v;
                    energy += v * v;
                }
            }
            double s = 0.0;
            if (energy > kFlatVariance * count) s = cross / std::sqrt(t_energy * energy);
            scores[static_cast<std::size_t>(dy + pl.r) * side + (dx + pl.r)] = s;
        }
    }
}

// FFTW plans are created under a lock and executed on per-call buffers; all
// buffers come from fftw_alloc so they share the plan's alignment.
struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

FftPlans plans_for(int n) {
    static std::mutex mutex;
    static std::map<int, FftPlans> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const std::size_t real_size = static_cast<std::size_t>(n) * n;
    const std::size_t cplx_size = static_cast<std::size_t>(n) * (n / 2 + 1);
    double* in = fftw_alloc_real(real_size);
    fftw_complex* out = fftw_alloc_complex(cplx_size);
    FftPlans p;
    p.forward = fftw_plan_dft_r2c_2d(n, n, in, out, FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_2d(n, n, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    cache.emplace(n, p);
    return p;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

void fft_scores(const ImageFrame& b, const Placement& pl, const std::vector<double>& t,
                double t_energy, std::vector<double>& scores) {
    const int m = pl.n + 2 * pl.r;  // search region side
    const std::size_t real_size = static_cast<std::size_t>(m) * m;
    const std::size_t cplx_size = static_cast<std::size_t>(m) * (m / 2 + 1);
    const FftPlans plans = plans_for(m);

    std::unique_ptr<double, FftwDeleter> region(fftw_alloc_real(real_size));
    std::unique_ptr<double, FftwDeleter> templ(fftw_alloc_real(real_size));
    std::unique_ptr<fftw_complex, FftwDeleter> f_region(fftw_alloc_complex(cplx_size));
    std::unique_ptr<fftw_complex, FftwDeleter> f_templ(fftw_alloc_complex(cplx_size));

    const int sx0 = pl.tx0 - pl.r;
    const int sy0 = pl.ty0 - pl.r;
    // Integral images over the search region for window sums of B and B^2.
    std::vector<double> sat((m + 1) * static_cast<std::size_t>(m + 1), 0.0);
    std::vector<double> sat2(sat.size(), 0.0);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const double v = b(sx0 + i, sy0 + j);
            region.get()[static_cast<std::size_t>(j) * m + i] = v;
            const std::size_t k = static_cast<std::size_t>(j + 1) * (m + 1) + (i + 1);
            sat[k] = v + sat[k - 1] + sat[k - (m + 1)] - sat[k - (m + 1) - 1];
            sat2[k] = v * v + sat2[k - 1] + sat2[k - (m + 1)] - sat2[k - (m + 1) - 1];
        }
    }
    std::fill(templ.get(), templ.get() + real_size, 0.0);
    for (int j = 0; j < pl.n; ++j)
        for (int i = 0; i < pl.n; ++i)
            templ.get()[static_cast<std::size_t>(j) * m + i] = t[static_cast<std::size_t>(j) * pl.n + i];

    fftw_execute_dft_r2c(plans.forward, region.get(), f_region.get());
    fftw_execute_dft_r2c(plans.forward, templ.get(), f_templ.get());
    for (std::size_t k = 0; k < cplx_size; ++k) {
        const double ar = f_region.get()[k][0], ai = f_region.get()[k][1];
        const double br = f_templ.get()[k][0], bi = -f_templ.get()[k][1];
        f_region.get()[k][0] = ar * br - ai * bi;
        f_region.get()[k][1] = ar * bi + ai * br;
    }
    fftw_execute_dft_c2r(plans.inverse, f_region.get(), region.get());
    const double norm = 1.0 / static_cast<double>(real_size);

    const int side = 2 * pl.r + 1;
    const double count = static_cast<double>(pl.n) * pl.n;
    auto box = [&](const std::vector<double>& s, int x0, int y0) {
        const std::size_t stride = static_cast<std::size_t>(m + 1);
        return s[(y0 + pl.n) * stride + (x0 + pl.n)] - s[y0 * stride + (x0 + pl.n)] -
               s[(y0 + pl.n) * stride + x0] + s[y0 * stride + x0];
    };
    for (int oy = 0; oy < side; ++oy) {
        for (int ox = 0; ox < side; ++ox) {
            const double cross = region.get()[static_cast<std::size_t>(oy) * m + ox] * norm;
            const double sum = box(sat, ox, oy);
            const double energy = std::max(0.0, box(sat2, ox, oy) - sum * sum / count);
            double s = 0.0;
            if (energy > kFlatVariance * count) s = cross / std::sqrt(t_energy * energy);
            scores[static_cast<std::size_t>(oy) * side + ox] = s;
        }
    }
}

double parabolic_offset(double left, double centre, double right) {
    const double denom = left - 2.0 * centre + right;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

void locate_peaks(CorrelationSurface& s, SubpixelMode mode) {
    const int r = s.radius;
    s.peak_value = -2.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (s.score(dx, dy) > s.peak_value) {
                s.peak_value = s.score(dx, dy);
                s.peak_dx = dx;
                s.peak_dy = dy;
            }

    s.secondary_peak_value = -1.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (std::max(std::abs(dx - s.peak_dx), std::abs(dy - s.peak_dy)) <= 1) continue;
            const double v = s.score(dx, dy);
            if (v <= s.secondary_peak_value) continue;
            bool local_max = true;
            for (int j = -1; j <= 1 && local_max; ++j)
                for (int i = -1; i <= 1; ++i) {
                    const int nx = dx + i, ny = dy + j;
                    if ((i == 0 && j == 0) || nx < -r || nx > r || ny < -r || ny > r) continue;
                    if (s.score(nx, ny) > v) { local_max = false; break; }
                }
            if (local_max) s.secondary_peak_value = v;
        }
    }

    s.peak = {static_cast<double>(s.peak_dx), static_cast<double>(s.peak_dy)};
    if (mode == SubpixelMode::parabolic) {
        if (std::abs(s.peak_dx) < r)
            s.peak.x += parabolic_offset(s.score(s.peak_dx - 1, s.peak_dy), s.peak_value,
                                         s.score(s.peak_dx + 1, s.peak_dy));
        if (std::abs(s.peak_dy) < r)
            s.peak.y += parabolic_offset(s.score(s.peak_dx, s.peak_dy - 1), s.peak_value,
                                         s.score(s.peak_dx, s.peak_dy + 1));
    }
}

}  // namespace

CorrelationSurface ncc_displacement(const ImageFrame& frame_a, const ImageFrame& frame_b,
                                    int center_x, int center_y, const CCParams& params) {
    const Placement pl = place(frame_a, frame_b, center_x, center_y, params);
    double t_energy = 0.0;
    const std::vector<double> t = centred_template(frame_a, pl, t_energy);

    CorrelationSurface s;
    s.radius = pl.r;
    s.scores.assign(static_cast<std::size_t>(2 * pl.r + 1) * (2 * pl.r + 1), 0.0);
    if (params.method == CorrelationMethod::fft)
        fft_scores(frame_b, pl, t, t_energy, s.scores);
    else
        direct_scores(frame_b, pl, t, t_energy, s.scores);
    locate_peaks(s, params.subpixel_mode);
    return s;
}

CCFlowResult cc_dense_flow(const ImageFrame& frame_a, const ImageFrame& frame_b,
                           const CCParams& params, unsigned workers) {
    params.validate();
    if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height())
        throw Error(Errc::dimension_mismatch, "cc_dense_flow: frame sizes differ");
    const int w = frame_a.width();
    const int h = frame_a.height();
    const int lo = params.template_size / 2 + params.search_radius;
    const int hi_x = w - (params.template_size - params.template_size / 2) - params.search_radius;
    const int hi_y = h - (params.template_size - params.template_size / 2) - params.search_radius;
    if (hi_x < lo || hi_y < lo)
        throw Error(Errc::dimension_too_small,
                    "frame " + std::to_string(w) + "x" + std::to_string(h) +
                        " is smaller than template + search margins");

    CCFlowResult out;
    out.grid_cols = (hi_x - lo) / params.grid_step + 1;
    out.grid_rows = (hi_y - lo) / params.grid_step + 1;
    out.windows.resize(static_cast<std::size_t>(out.grid_cols) * out.grid_rows);
    parallel_for(out.windows.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            CCWindow& win = out.windows[k];
            win.center_x = lo + static_cast<int>(k % out.grid_cols) * params.grid_step;
            win.center_y = lo + static_cast<int>(k / out.grid_cols) * params.grid_step;
            try {
                const CorrelationSurface s =
                    ncc_displacement(frame_a, frame_b, win.center_x, win.center_y, params);
                win.displacement = s.peak;
                win.peak_value = s.peak_value;
                win.secondary_peak_value = s.secondary_peak_value;
                win.valid = true;
                win.ambiguous = s.ambiguous(params.ambiguity_ratio);
            } catch (const Error& err) {
                if (err.code() != Errc::zero_variance) throw;
                win.valid = false;
            }
        }
    });

    // Bilinear densification on the node lattice; invalid nodes drop out and
    // the remaining weights are renormalized.
    out.flow = FlowField(w, h);
    const int cols = out.grid_cols;
    const int rows = out.grid_rows;
    auto axis = [&](int p, int count, int& i0, int& i1, double& f) {
        double g = static_cast<double>(p - lo) / params.grid_step;
        g = std::clamp(g, 0.0, static_cast<double>(count - 1));
        i0 = std::min(static_cast<int>(g), count - 1);
        i1 = std::min(i0 + 1, count - 1);
        f = g - i0;
    };
    for (int y = 0; y < h; ++y) {
        int j0, j1;
        double fy;
        axis(y, rows, j0, j1, fy);
        for (int x = 0; x < w; ++x) {
            int i0, i1;
            double fx;
            axis(x, cols, i0, i1, fx);
            const int ni[4] = {i0, i1, i0, i1};
            const int nj[4] = {j0, j0, j1, j1};
            const double wt[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            double sw = 0.0;
            Vec2 acc;
            for (int q = 0; q < 4; ++q) {
                const CCWindow& win = out.windows[static_cast<std::size_t>(nj[q]) * cols + ni[q]];
                if (!win.valid || wt[q] == 0.0) continue;
                sw += wt[q];
                acc += wt[q] * win.displacement;
            }
            if (sw > 0.0) out.flow.set(x, y, (1.0 / sw) * acc);
            else out.flow.set_invalid(x, y);
        }
    }
    return out;
}

}  // namespace upiv
