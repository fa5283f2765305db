#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace upiv {

/// Dense row-major scalar grid. Used for intensities, gradients and other
/// per-pixel quantities.
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, double fill = 0.0);
    Grid(int width, int height, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(int x, int y) const noexcept {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }
    double& operator()(int x, int y) noexcept {
        return data_[static_cast<std::size_t>(y) * width_ + x];
    }
    // Edge-replicated access: coordinates are clamped into the grid.
    double clamped(int x, int y) const noexcept;

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Grayscale frame with intensities normalized to [0, 1]. Immutable once built;
/// the constructor enforces size and range invariants.
class ImageFrame {
public:
    ImageFrame() = default;
    explicit ImageFrame(Grid intensities);
    ImageFrame(int width, int height, std::vector<double> intensities);

    int width() const noexcept { return grid_.width(); }
    int height() const noexcept { return grid_.height(); }
    double operator()(int x, int y) const noexcept { return grid_(x, y); }
    double clamped(int x, int y) const noexcept { return grid_.clamped(x, y); }
    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return grid_.values(); }

    // Builds a frame from arbitrary values by clamping each into [0, 1].
    static ImageFrame from_clamped(Grid values);

private:
    Grid grid_;
};

struct GradientField {
    Grid ix;
    Grid iy;
};

struct Pyramid {
    std::vector<ImageFrame> levels;  // levels[0] is full resolution
    int requested_depth = 0;

    int depth() const noexcept { return static_cast<int>(levels.size()); }
    bool clamped() const noexcept { return depth() < requested_depth; }
};

// 2:1 reduction with the normalized 3x3 kernel (1/4 centre, 1/8 edge,
// 1/16 corner) centred on (2x, 2y); edge replication outside the frame.
ImageFrame downsample(const ImageFrame& frame);

// Same as downsample but for an unconstrained grid (used for flow fields and
// other non-intensity data).
Grid downsample_grid(const Grid& grid);

Pyramid build_pyramid(const ImageFrame& frame, int requested_depth);

// Central differences in the interior, one-sided at the border.
GradientField gradient(const ImageFrame& frame);
GradientField gradient(const Grid& grid);

// Bilinear interpolation with clamp-to-border. Throws Errc::non_finite for
// NaN/inf coordinates.
double sample_bilinear(const Grid& grid, double x, double y);
inline double sample_bilinear(const ImageFrame& frame, double x, double y) {
    return sample_bilinear(frame.grid(), x, y);
}

// Samples the (2r+1)^2 window centred on (cx, cy) into out (row-major). All
// taps share one fractional offset, so weights are computed once.
void sample_window(const Grid& grid, double cx, double cy, int radius, std::span<double> out);

}  // namespace upiv
