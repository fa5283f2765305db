#pragma once

#include "upiv/flow_field.hpp"
#include "upiv/image.hpp"

#include <cstddef>
#include <vector>

namespace upiv {

enum class WeightMode { uniform, gaussian };

struct LKParams {
    int window_radius = 7;           // window is (2r+1) x (2r+1)
    WeightMode weight_mode = WeightMode::uniform;
    int pyramid_depth = 3;           // number of levels, including full resolution
    int max_iterations = 20;
    double convergence_threshold = 0.01;  // px; stop once |step| falls below
    double min_eigenvalue_threshold = 1e-6;

    // Throws Errc::invalid_config naming the first offending field.
    void validate() const;
};

// Per-tap weights, row-major over the window. Uniform weights are all 1;
// gaussian weights follow exp(-r^2 / 2 sigma^2) with sigma = (radius + 1) / 2,
// rescaled to a mean of 1 so eigenvalue thresholds mean the same in both modes.
std::vector<double> window_weights(const LKParams& params);

struct StructureTensor {
    double gxx = 0.0;
    double gxy = 0.0;
    double gyy = 0.0;
    double min_eigenvalue = 0.0;

    double determinant() const noexcept { return gxx * gyy - gxy * gxy; }
};

double min_eigenvalue(double gxx, double gxy, double gyy) noexcept;

// Weighted window sums of gradient products around a (possibly subpixel)
// centre. Taps that fall outside the frame carry zero weight.
StructureTensor structure_tensor(const GradientField& grad, Vec2 center, const LKParams& params);

enum class SolveStatus { ok, ill_conditioned };

struct LevelTrace {
    int level = 0;
    Vec2 guess;           // prediction carried in from the coarser level
    Vec2 residual;        // accumulated Newton-Raphson steps at this level
    int iterations = 0;
    double final_step = 0.0;  // |step| of the last iteration
    bool converged = false;
    double min_eigenvalue = 0.0;
};

struct IterationTrace {
    std::vector<LevelTrace> levels;  // coarsest first

    // Sum over levels of 2^L * residual_L.
    Vec2 weighted_residual_sum() const;
};

struct RefineResult {
    SolveStatus status = SolveStatus::ok;
    Vec2 residual;
    LevelTrace trace;
};

// Iterative refinement of the residual displacement at one level. The
// structure tensor is built once from frameA's gradients and held fixed.
RefineResult lk_refine(const ImageFrame& frame_a, const ImageFrame& frame_b, Vec2 point,
                       Vec2 guess, const LKParams& params);

struct TrackResult {
    SolveStatus status = SolveStatus::ok;
    int failed_level = -1;
    Vec2 total;
    IterationTrace trace;
};

// Coarse-to-fine tracker over a pair of pyramids. Holds the per-level
// gradients so repeated point queries share them. Immutable after
// construction; safe to query from several threads.
class PyramidTracker {
public:
    PyramidTracker(const Pyramid& pyr_a, const Pyramid& pyr_b, const LKParams& params);

    int depth() const noexcept { return static_cast<int>(grads_.size()); }
    const LKParams& params() const noexcept { return params_; }

    TrackResult track(Vec2 point) const;
    RefineResult refine(int level, Vec2 point_at_level, Vec2 guess) const;

private:
    const Pyramid& pyr_a_;
    const Pyramid& pyr_b_;
    LKParams params_;
    std::vector<GradientField> grads_;
    std::vector<double> weights_;
};

TrackResult track_point(const Pyramid& pyr_a, const Pyramid& pyr_b, Vec2 point,
                        const LKParams& params);

struct DenseFlowStats {
    std::size_t pixels = 0;
    std::size_t valid = 0;
    std::size_t ill_conditioned = 0;
    std::size_t non_converged = 0;  // pixels where some level hit max_iterations
    double mean_iterations = 0.0;   // per pixel, summed over levels
    int depth_used = 0;
    bool depth_clamped = false;
};

struct DenseFlowResult {
    FlowField flow;
    DenseFlowStats stats;
};

// Tracks every pixel of frame A. `workers` = 0 uses all hardware threads; the
// output is bit-identical for any worker count.
DenseFlowResult dense_flow(const ImageFrame& frame_a, const ImageFrame& frame_b,
                           const LKParams& params, unsigned workers = 1);

}  // namespace upiv
