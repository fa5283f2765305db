#include "upiv/plot.hpp"

#include "upiv/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace upiv {

PlotStyle parse_plot_style(const std::string& name) {
    if (name == "quiver") return PlotStyle::quiver;
    if (name == "magnitude") return PlotStyle::magnitude;
    if (name == "combined") return PlotStyle::combined;
    throw Error(Errc::invalid_config, "plot.style must be quiver, magnitude or combined (got '" + name + "')");
}

void PlotOptions::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, "plot." + what); };
    if (quiver_step < 1) fail("quiver_step must be >= 1");
    if (!(arrow_scale > 0.0) || !std::isfinite(arrow_scale)) fail("arrow_scale must be > 0");
    if (!(max_speed >= 0.0) || !std::isfinite(max_speed)) fail("max_speed must be >= 0");
    if (legend < -1 || legend > 1) fail("legend must be -1, 0 or 1");
}

Rgb colormap(double t) {
    struct Stop {
        double t;
        double r, g, b;
    };
    static constexpr Stop stops[] = {{0.0, 0, 0, 143},     {0.125, 0, 0, 255}, {0.375, 0, 255, 255},
                                     {0.625, 255, 255, 0}, {0.875, 255, 0, 0}, {1.0, 128, 0, 0}};
    if (!std::isfinite(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0);
    std::size_t k = 1;
    while (k + 1 < std::size(stops) && t > stops[k].t) ++k;
    const Stop& a = stops[k - 1];
    const Stop& b = stops[k];
    const double f = (t - a.t) / (b.t - a.t);
    auto mix = [f](double x, double y) { return static_cast<std::uint8_t>(std::lround(x + f * (y - x))); };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

Grid speed_map(const FlowField& flow) {
    Grid s(flow.width(), flow.height());
    for (int y = 0; y < flow.height(); ++y)
        for (int x = 0; x < flow.width(); ++x)
            if (flow.valid(x, y)) s(x, y) = norm(flow.at(x, y));
    return s;
}

double speed_scale(const FlowField& flow, const PlotOptions& options) {
    if (options.max_speed > 0.0) return options.max_speed;
    double m = 0.0;
    for (double v : speed_map(flow).values()) m = std::max(m, v);
    return m > 0.0 ? m : 1.0;
}

namespace {

void put(RgbImage& img, int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    std::uint8_t* p = img.px(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
}

void line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        put(img, x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x0 += sx; }
        if (e2 <= dx) { err += dx; y0 += sy; }
    }
}

void arrow(RgbImage& img, double x, double y, double dx, double dy, Rgb c) {
    const int x0 = static_cast<int>(std::lround(x));
    const int y0 = static_cast<int>(std::lround(y));
    const int x1 = static_cast<int>(std::lround(x + dx));
    const int y1 = static_cast<int>(std::lround(y + dy));
    line(img, x0, y0, x1, y1, c);
    const double len = std::hypot(dx, dy);
    if (len < 3.0) return;
    const double head = std::min(4.0, 0.35 * len);
    const double ux = dx / len, uy = dy / len;
    for (double side : {-1.0, 1.0}) {
        // 30 degree barbs
        const double bx = -ux * 0.866 - side * uy * 0.5;
        const double by = -uy * 0.866 + side * ux * 0.5;
        line(img, x1, y1, static_cast<int>(std::lround(x1 + head * bx)),
             static_cast<int>(std::lround(y1 + head * by)), c);
    }
}

// 5x7 glyphs, one byte per row, low 5 bits used (bit 4 = leftmost column).
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
};

const Glyph* find_glyph(char c) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const Glyph& g : kFont)
        if (g.ch == c) return &g;
    return nullptr;
}

void legend_box(RgbImage& img, const std::string& text) {
    const int w = 6 * static_cast<int>(text.size()) + 4;
    const int h = 11;
    const int y0 = std::max(0, img.height - h);
    for (int y = y0; y < img.height; ++y)
        for (int x = 0; x < std::min(w, img.width); ++x) put(img, x, y, {0, 0, 0});
    draw_text(img, 2, y0 + 2, text, {255, 255, 255});
}

std::string format_legend(double arrow_scale, double vmax, bool with_arrows) {
    char buf[96];
    if (with_arrows)
        std::snprintf(buf, sizeof buf, "SCALE %.3g PX/UNIT MAX %.3g", arrow_scale, vmax);
    else
        std::snprintf(buf, sizeof buf, "MAX %.3g PX/FRAME", vmax);
    return buf;
}

}  // namespace

int draw_text(RgbImage& image, int x, int y, const std::string& text, Rgb color) {
    int cx = x;
    for (char c : text) {
        if (const Glyph* g = find_glyph(c)) {
            for (int r = 0; r < 7; ++r)
                for (int b = 0; b < 5; ++b)
                    if (g->rows[r] & (0x10 >> b)) put(image, cx + b, y + r, color);
        }
        cx += 6;
    }
    return cx - x;
}

RgbImage render_plot(const FlowField& flow, PlotStyle style, const PlotOptions& options) {
    options.validate();
    if (flow.width() < 1 || flow.height() < 1)
        throw Error(Errc::invalid_argument, "render_plot: empty flow field");
    RgbImage img(flow.width(), flow.height());
    const double vmax = speed_scale(flow, options);

    if (style == PlotStyle::quiver) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) put(img, x, y, kQuiverBackground);
    } else {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                put(img, x, y, flow.valid(x, y) ? colormap(norm(flow.at(x, y)) / vmax) : kInvalidColor);
    }

    if (style != PlotStyle::magnitude) {
        const Rgb ink = style == PlotStyle::quiver ? Rgb{0, 0, 0} : Rgb{255, 255, 255};
        const int off = options.quiver_step / 2;
        for (int y = off; y < img.height; y += options.quiver_step) {
            for (int x = off; x < img.width; x += options.quiver_step) {
                if (!flow.valid(x, y)) {
                    put(img, x, y, kInvalidColor);
                    continue;
                }
                arrow(img, x, y, options.arrow_scale * flow.u(x, y), options.arrow_scale * flow.v(x, y), ink);
            }
        }
    }

    const bool legend = options.legend == 1 || (options.legend == -1 && style != PlotStyle::magnitude);
    if (legend) legend_box(img, format_legend(options.arrow_scale, vmax, style != PlotStyle::magnitude));
    return img;
}

}  // namespace upiv
