#pragma once

#include "upiv/flow_field.hpp"
#include "upiv/image.hpp"
#include "upiv/io.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace upiv {

enum class PlotStyle { quiver, magnitude, combined };

PlotStyle parse_plot_style(const std::string& name);

struct PlotOptions {
    int quiver_step = 16;       // grid spacing between arrows, px
    double arrow_scale = 4.0;   // drawn px per px/frame of displacement
    double max_speed = 0.0;     // colormap upper bound; 0 = field maximum
    int legend = -1;            // -1 = style default (on for quiver/combined), 0 off, 1 on

    void validate() const;
};

using Rgb = std::array<std::uint8_t, 3>;

// Jet-style colormap, piecewise linear through
//   t=0     (0, 0, 143)     t=0.125 (0, 0, 255)    t=0.375 (0, 255, 255)
//   t=0.625 (255, 255, 0)   t=0.875 (255, 0, 0)    t=1     (128, 0, 0)
// with t clamped to [0, 1]. None of its colours is magenta or white.
Rgb colormap(double t);

inline constexpr Rgb kInvalidColor{255, 0, 255};
inline constexpr Rgb kQuiverBackground{255, 255, 255};

// Per-pixel speed |(u, v)|; invalid pixels hold 0.
Grid speed_map(const FlowField& flow);

// Upper bound used to normalize speeds for a given field and options.
double speed_scale(const FlowField& flow, const PlotOptions& options);

// Output has the flow's dimensions.
RgbImage render_plot(const FlowField& flow, PlotStyle style, const PlotOptions& options);

// Draws upper-case text with a built-in 5x7 font; unsupported glyphs render
// as blanks. Returns the drawn width in pixels.
int draw_text(RgbImage& image, int x, int y, const std::string& text, Rgb color);

}  // namespace upiv
