#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace upiv {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    friend bool operator==(Vec2, Vec2) = default;
};

double norm(Vec2 v);

/// Per-pixel displacement field in pixels/frame. Components are stored as
/// 32-bit floats, the precision of the on-disk format, so that a field written
/// and read back is bit-identical. Invalid pixels are flagged in the mask;
/// their u/v entries are unspecified.
class FlowField {
public:
    FlowField() = default;
    FlowField(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return valid_.size(); }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    float u(int x, int y) const noexcept { return u_[index(x, y)]; }
    float v(int x, int y) const noexcept { return v_[index(x, y)]; }
    bool valid(int x, int y) const noexcept { return valid_[index(x, y)] != 0; }
    Vec2 at(int x, int y) const noexcept { return {u(x, y), v(x, y)}; }

    void set(int x, int y, Vec2 d);  // stores d and marks the pixel valid
    void set_invalid(int x, int y);

    const std::vector<float>& u() const noexcept { return u_; }
    const std::vector<float>& v() const noexcept { return v_; }
    const std::vector<std::uint8_t>& valid() const noexcept { return valid_; }

    std::size_t valid_count() const noexcept;
    bool same_shape(const FlowField& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    // Bitwise equality on valid pixels and exact mask equality.
    friend bool operator==(const FlowField& a, const FlowField& b);

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> u_;
    std::vector<float> v_;
    std::vector<std::uint8_t> valid_;
};

}  // namespace upiv
