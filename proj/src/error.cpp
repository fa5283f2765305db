#include "upiv/error.hpp"

namespace upiv {

const char* to_string(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::dimension_too_small: return "dimension too small";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::non_finite: return "non-finite value";
    case Errc::window_out_of_bounds: return "window out of bounds";
    case Errc::zero_variance: return "zero-variance template";
    case Errc::empty_mask: return "empty mask";
    case Errc::bad_magic: return "bad magic";
    case Errc::truncated: return "truncated payload";
    case Errc::dimension_overflow: return "dimension overflow";
    case Errc::io: return "i/o error";
    case Errc::unsupported_format: return "unsupported format";
    case Errc::invalid_config: return "invalid configuration";
    }
    return "unknown error";
}

}  // namespace upiv
