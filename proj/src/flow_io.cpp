#include "upiv/io.hpp"

#include "upiv/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace upiv {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

constexpr std::size_t kHeader = 12;

}  // namespace

std::vector<std::uint8_t> encode_flow(const FlowField& flow) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeader + flow.size() * 8);
    out.insert(out.end(), std::begin(kFlowMagic), std::end(kFlowMagic));
    put_u32(out, static_cast<std::uint32_t>(flow.width()));
    put_u32(out, static_cast<std::uint32_t>(flow.height()));
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::size_t i = 0; i < flow.size(); ++i) {
        if (flow.valid()[i]) {
            if (!std::isfinite(flow.u()[i]) || !std::isfinite(flow.v()[i]))
                throw Error(Errc::non_finite, "write_flow: valid pixel with non-finite vector");
            put_f32(out, flow.u()[i]);
            put_f32(out, flow.v()[i]);
        } else {
            put_f32(out, nan);
            put_f32(out, nan);
        }
    }
    return out;
}

FlowField decode_flow(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeader)
        throw Error(Errc::truncated, "flow file shorter than its 12-byte header");
    if (std::memcmp(bytes.data(), kFlowMagic, 4) != 0)
        throw Error(Errc::bad_magic, "flow file does not start with \"PIEH\"");
    const auto w = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
    const auto h = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
    if (w < 0 || h < 0)
        throw Error(Errc::dimension_overflow, "flow file has negative dimensions");
    const std::uint64_t pixels = static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h);
    if (pixels > (std::numeric_limits<std::uint64_t>::max() - kHeader) / 8 ||
        pixels * 8 > std::numeric_limits<std::size_t>::max() - kHeader)
        throw Error(Errc::dimension_overflow, "flow file dimensions overflow");
    const std::uint64_t expected = kHeader + pixels * 8;
    if (bytes.size() < expected)
        throw Error(Errc::truncated, "flow payload truncated: " + std::to_string(bytes.size()) +
                                         " bytes, expected " + std::to_string(expected));
    if (bytes.size() > expected)
        throw Error(Errc::dimension_mismatch, "flow payload longer than its dimensions");

    FlowField flow(w, h);
    const std::uint8_t* p = bytes.data() + kHeader;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x, p += 8) {
            const float u = get_f32(p);
            const float v = get_f32(p + 4);
            if (std::isnan(u) || std::isnan(v)) flow.set_invalid(x, y);
            else flow.set(x, y, {u, v});
        }
    }
    return flow;
}

void write_flow(const FlowField& flow, const fs::path& path) {
    const std::vector<std::uint8_t> bytes = encode_flow(flow);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

FlowField read_flow(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_flow(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

}  // namespace upiv
