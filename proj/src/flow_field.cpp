#include "upiv/flow_field.hpp"

#include "upiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace upiv {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

FlowField::FlowField(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0)
        throw Error(Errc::invalid_argument, "flow field dimensions must be non-negative");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    u_.assign(n, 0.0f);
    v_.assign(n, 0.0f);
    valid_.assign(n, 0);
}

void FlowField::set(int x, int y, Vec2 d) {
    const std::size_t i = index(x, y);
    u_[i] = static_cast<float>(d.x);
    v_[i] = static_cast<float>(d.y);
    valid_[i] = 1;
}

void FlowField::set_invalid(int x, int y) {
    const std::size_t i = index(x, y);
    u_[i] = 0.0f;
    v_[i] = 0.0f;
    valid_[i] = 0;
}

std::size_t FlowField::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

bool operator==(const FlowField& a, const FlowField& b) {
    if (!a.same_shape(b) || a.valid_ != b.valid_) return false;
    for (std::size_t i = 0; i < a.valid_.size(); ++i) {
        if (!a.valid_[i]) continue;
        if (std::memcmp(&a.u_[i], &b.u_[i], sizeof(float)) != 0) return false;
        if (std::memcmp(&a.v_[i], &b.v_[i], sizeof(float)) != 0) return false;
    }
    return true;
}

}  // namespace upiv
