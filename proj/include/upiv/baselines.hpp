#pragma once

#include "upiv/flow_field.hpp"
#include "upiv/image.hpp"

#include <vector>

namespace upiv {

// ---------------------------------------------------------------------------
// Template-matching cross-correlation
// ---------------------------------------------------------------------------

enum class SubpixelMode { none, parabolic };
enum class CorrelationMethod { direct, fft };

struct CCParams {
    int template_size = 32;    // square interrogation window, pixels
    int search_radius = 8;     // candidate displacements in [-R, R]^2
    int grid_step = 16;        // spacing between window centres
    SubpixelMode subpixel_mode = SubpixelMode::parabolic;
    CorrelationMethod method = CorrelationMethod::fft;
    double ambiguity_ratio = 0.8;  // secondary / primary above this => ambiguous

    void validate() const;
};

/// Zero-normalized cross-correlation scores over all integer displacements of
/// one interrogation window.
struct CorrelationSurface {
    int radius = 0;
    std::vector<double> scores;  // (2R+1)^2, row-major in (dy, dx)
    int peak_dx = 0;
    int peak_dy = 0;
    Vec2 peak;                   // integer peak plus optional subpixel offset
    double peak_value = -1.0;
    // Highest local maximum at Chebyshev distance > 1 from the peak; -1 when
    // the surface has none.
    double secondary_peak_value = -1.0;

    double score(int dx, int dy) const {
        const int side = 2 * radius + 1;
        return scores[static_cast<std::size_t>(dy + radius) * side + (dx + radius)];
    }
    double peak_ratio() const;
    bool ambiguous(double ratio_threshold) const { return peak_ratio() > ratio_threshold; }
};

// Template of frame A centred on `center` (top-left at center - size/2) against
// frame B. Throws window_out_of_bounds if the template or any displaced window
// leaves its frame, zero_variance if the template is flat.
CorrelationSurface ncc_displacement(const ImageFrame& frame_a, const ImageFrame& frame_b,
                                    int center_x, int center_y, const CCParams& params);

struct CCWindow {
    int center_x = 0;
    int center_y = 0;
    Vec2 displacement;
    double peak_value = 0.0;
    double secondary_peak_value = -1.0;
    bool valid = false;
    bool ambiguous = false;
};

struct CCFlowResult {
    FlowField flow;               // densified to every pixel
    std::vector<CCWindow> windows;  // row-major over the interrogation grid
    int grid_cols = 0;
    int grid_rows = 0;

    double ambiguous_fraction() const;
};

// Interrogation grid at grid_step spacing, one ncc_displacement per window,
// bilinear densification between window centres (constant extrapolation past
// the outermost centres).
CCFlowResult cc_dense_flow(const ImageFrame& frame_a, const ImageFrame& frame_b,
                           const CCParams& params, unsigned workers = 1);

// ---------------------------------------------------------------------------
// Horn-Schunck
// ---------------------------------------------------------------------------

struct HSParams {
    double alpha = 0.5;
    int iterations = 200;   // Jacobi sweeps per pyramid level
    int pyramid_depth = 1;  // 1 = classic single-scale solve
    bool record_energy = false;

    void validate() const;
};

struct HSResult {
    FlowField flow;  // all pixels valid
    // Energy after each sweep of the finest level (only with record_energy);
    // energies[0] is the energy of the initial field.
    std::vector<double> energies;
};

// Linearized data term plus smoothness, evaluated about a base field w0:
//   sum (Ix (u-u0) + Iy (v-v0) + It)^2 + alpha^2/4 * sum_edges |w_p - w_q|^2
// The Jacobi update in horn_schunck is a descent method for this energy.
struct HSLinearization {
    Grid ix, iy, it;
    Grid u0, v0;
};

HSLinearization hs_linearize(const ImageFrame& frame_a, const ImageFrame& frame_b,
                             const Grid& u0, const Grid& v0);
double hs_energy(const HSLinearization& lin, const Grid& u, const Grid& v, double alpha);

HSResult horn_schunck(const ImageFrame& frame_a, const ImageFrame& frame_b,
                      const HSParams& params, unsigned workers = 1);

}  // namespace upiv
