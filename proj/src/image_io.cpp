#include "upiv/io.hpp"

#include "upiv/error.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace upiv {

namespace {

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng errors longjmp back to the setjmp in the calling function, which
// then throws. Every non-trivial local lives above that setjmp.
struct PngErrorSlot {
    char message[256] = {};
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
    auto* slot = static_cast<PngErrorSlot*>(png_get_error_ptr(png));
    std::snprintf(slot->message, sizeof slot->message, "%s", msg);
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct DecodedPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;  // rows, big-endian samples for 16-bit
    std::size_t rowbytes = 0;
};

DecodedPng decode_png(const fs::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw Error(Errc::io, "cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error(Errc::unsupported_format, path.string() + ": not a PNG file");

    PngErrorSlot slot;
    PngRead r;
    DecodedPng out;
    std::vector<png_bytep> rows;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, png_fail, png_warn);
    if (!r.png) throw Error(Errc::io, "png_create_read_struct failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw Error(Errc::io, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(r.png)))
        throw Error(Errc::io, path.string() + ": libpng: " + slot.message);

    png_init_io(r.png, f.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    out.width = static_cast<int>(png_get_image_width(r.png, r.info));
    out.height = static_cast<int>(png_get_image_height(r.png, r.info));
    out.bit_depth = png_get_bit_depth(r.png, r.info);
    out.color_type = png_get_color_type(r.png, r.info);
    if (out.color_type == PNG_COLOR_TYPE_GRAY && out.bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(r.png);
        out.bit_depth = 8;
    }
    if (png_get_interlace_type(r.png, r.info) != PNG_INTERLACE_NONE) png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);
    out.channels = png_get_channels(r.png, r.info);
    out.rowbytes = png_get_rowbytes(r.png, r.info);
    out.data.resize(out.rowbytes * static_cast<std::size_t>(out.height));
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) rows[y] = out.data.data() + out.rowbytes * y;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return out;
}

ImageFrame read_png_gray(const fs::path& path) {
    const DecodedPng d = decode_png(path);
    if (d.color_type != PNG_COLOR_TYPE_GRAY)
        throw Error(Errc::unsupported_format, path.string() + ": not a single-channel grayscale image");
    const double scale = d.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    Grid g(d.width, d.height);
    for (int y = 0; y < d.height; ++y) {
        const std::uint8_t* row = d.data.data() + d.rowbytes * y;
        for (int x = 0; x < d.width; ++x) {
            const unsigned v = d.bit_depth == 16 ? (unsigned(row[2 * x]) << 8 | row[2 * x + 1]) : row[x];
            g(x, y) = v * scale;
        }
    }
    return ImageFrame(std::move(g));
}

std::string next_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

ImageFrame read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    const std::string magic = next_token(in);
    if (magic != "P5") {
        if (magic == "P6" || magic == "P3")
            throw Error(Errc::unsupported_format, path.string() + ": not a single-channel grayscale image");
        throw Error(Errc::unsupported_format, path.string() + ": only binary PGM (P5) is supported");
    }
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw Error(Errc::io, path.string() + ": malformed PGM header");
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw Error(Errc::io, path.string() + ": malformed PGM header");
    const int bytes_per = maxval > 255 ? 2 : 1;
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw Error(Errc::truncated, path.string() + ": PGM payload truncated");
    Grid g(w, h);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const unsigned v = bytes_per == 2 ? (unsigned(raw[2 * i]) << 8 | raw[2 * i + 1]) : raw[i];
        g.values()[i] = std::min(1.0, static_cast<double>(v) / maxval);
    }
    return ImageFrame(std::move(g));
}

void encode_png(const fs::path& path, int width, int height, int bit_depth, int color_type,
                const std::vector<std::uint8_t>& data,
                const std::vector<std::pair<std::string, std::string>>& text) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    PngErrorSlot slot;
    PngWrite w;
    std::vector<png_text> chunks;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, png_fail, png_warn);
    if (!w.png) throw Error(Errc::io, "png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw Error(Errc::io, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(w.png)))
        throw Error(Errc::io, path.string() + ": libpng: " + slot.message);
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    for (const auto& [k, v] : text) {
        png_text t{};
        t.compression = PNG_TEXT_COMPRESSION_NONE;
        t.key = const_cast<char*>(k.c_str());
        t.text = const_cast<char*>(v.c_str());
        chunks.push_back(t);
    }
    if (!chunks.empty()) png_set_text(w.png, w.info, chunks.data(), static_cast<int>(chunks.size()));
    png_write_info(w.png, w.info);
    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    for (int y = 0; y < height; ++y)
        png_write_row(w.png, const_cast<png_bytep>(data.data() + rowbytes * y));
    png_write_end(w.png, nullptr);
}

bool is_image_file(const fs::path& p) {
    const std::string e = lower_ext(p);
    return e == ".png" || e == ".pgm";
}

}  // namespace

ImageFrame read_image(const fs::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".png") return read_png_gray(path);
    if (ext == ".pgm") return read_pgm(path);
    throw Error(Errc::unsupported_format,
                path.string() + ": unsupported image format (expected lossless .png or .pgm)");
}

void write_image(const ImageFrame& frame, const fs::path& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw Error(Errc::invalid_argument, "write_image: bit depth must be 8 or 16");
    const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint8_t> data;
    data.reserve(frame.values().size() * (bit_depth / 8));
    for (double v : frame.values()) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxv));
        if (bit_depth == 16) data.push_back(static_cast<std::uint8_t>(q >> 8));
        data.push_back(static_cast<std::uint8_t>(q & 0xff));
    }
    encode_png(path, frame.width(), frame.height(), bit_depth, PNG_COLOR_TYPE_GRAY, data, {});
}

void write_png_rgb(const RgbImage& image, const fs::path& path,
                   const std::vector<std::pair<std::string, std::string>>& text) {
    encode_png(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, image.rgb, text);
}

RgbImage read_png_rgb(const fs::path& path) {
    const DecodedPng d = decode_png(path);
    if (d.color_type != PNG_COLOR_TYPE_RGB || d.bit_depth != 8)
        throw Error(Errc::unsupported_format, path.string() + ": expected 8-bit RGB PNG");
    RgbImage img(d.width, d.height);
    for (int y = 0; y < d.height; ++y)
        std::copy_n(d.data.data() + d.rowbytes * y, static_cast<std::size_t>(d.width) * 3, img.px(0, y));
    return img;
}

std::vector<fs::path> list_sequence(const fs::path& locator) {
    std::vector<fs::path> files;
    if (fs::is_directory(locator)) {
        for (const auto& entry : fs::directory_iterator(locator))
            if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    } else if (fs::is_regular_file(locator)) {
        std::ifstream in(locator);
        if (!in) throw Error(Errc::io, "cannot open " + locator.string());
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            fs::path p(line);
            if (p.is_relative()) p = locator.parent_path() / p;
            files.push_back(p);
        }
    } else {
        throw Error(Errc::io, "sequence locator " + locator.string() + " does not exist");
    }
    return files;
}

std::vector<ImageFrame> read_sequence(const fs::path& locator) {
    const std::vector<fs::path> files = list_sequence(locator);
    if (files.size() < 2)
        throw Error(Errc::invalid_argument, "sequence " + locator.string() + " has " +
                                                std::to_string(files.size()) +
                                                " frame(s); at least two frames required");
    std::vector<ImageFrame> frames;
    frames.reserve(files.size());
    for (const fs::path& f : files) {
        frames.push_back(read_image(f));
        if (frames.back().width() != frames.front().width() ||
            frames.back().height() != frames.front().height())
            throw Error(Errc::dimension_mismatch,
                        f.string() + " is " + std::to_string(frames.back().width()) + "x" +
                            std::to_string(frames.back().height()) + ", expected " +
                            std::to_string(frames.front().width()) + "x" +
                            std::to_string(frames.front().height()));
    }
    return frames;
}

}  // namespace upiv
