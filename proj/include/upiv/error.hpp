#pragma once

#include <stdexcept>
#include <string>

namespace upiv {

enum class Errc {
    invalid_argument,
    dimension_too_small,
    dimension_mismatch,
    non_finite,
    window_out_of_bounds,
    zero_variance,
    empty_mask,
    bad_magic,
    truncated,
    dimension_overflow,
    io,
    unsupported_format,
    invalid_config,
};

const char* to_string(Errc code) noexcept;

// Single exception type for the library; the code distinguishes failure classes.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace upiv
