#pragma once

#include "upiv/flow_field.hpp"
#include "upiv/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace upiv {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Flow files
//
// Little-endian layout:
//   bytes 0-3   magic "PIEH"
//   bytes 4-7   width, int32
//   bytes 8-11  height, int32
//   then height * width interleaved (u, v) float32 pairs, row-major.
// Invalid pixels are written as u = v = quiet NaN and read back as invalid.
// ---------------------------------------------------------------------------

inline constexpr char kFlowMagic[4] = {'P', 'I', 'E', 'H'};

std::vector<std::uint8_t> encode_flow(const FlowField& flow);
FlowField decode_flow(const std::vector<std::uint8_t>& bytes);

void write_flow(const FlowField& flow, const fs::path& path);
FlowField read_flow(const fs::path& path);

// ---------------------------------------------------------------------------
// Raster images. Accepted inputs: single-channel PNG or binary PGM (P5),
// 8- or 16-bit. Anything else is rejected with Errc::unsupported_format.
// ---------------------------------------------------------------------------

ImageFrame read_image(const fs::path& path);

// Writes an intensity frame as a grayscale PNG with the given bit depth (8 or 16).
void write_image(const ImageFrame& frame, const fs::path& path, int bit_depth = 8);

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* px(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* px(int x, int y) const {
        return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
    }
};

void write_png_rgb(const RgbImage& image, const fs::path& path,
                   const std::vector<std::pair<std::string, std::string>>& text = {});
RgbImage read_png_rgb(const fs::path& path);

// Directory of image files (lexicographic order) or a text file listing one
// image path per line (relative paths resolve against the list's directory).
std::vector<fs::path> list_sequence(const fs::path& locator);
std::vector<ImageFrame> read_sequence(const fs::path& locator);

}  // namespace upiv
