#include "upiv/metrics.hpp"

#include "upiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace upiv {

void AngularErrorField::apply_margin(int margin) {
    if (margin <= 0) return;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (x < margin || y < margin || x >= width - margin || y >= height - margin) {
                const std::size_t i = static_cast<std::size_t>(y) * width + x;
                mask[i] = 0;
                phi[i] = 0.0;
            }
        }
    }
}

std::size_t AngularErrorField::included() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

double angular_error_deg(Vec2 truth, Vec2 estimate, double k) {
    const double k2 = k * k;
    const double num = truth.x * estimate.x + truth.y * estimate.y + k2;
    const double den = std::sqrt(truth.x * truth.x + truth.y * truth.y + k2) *
                       std::sqrt(estimate.x * estimate.x + estimate.y * estimate.y + k2);
    const double c = std::clamp(num / den, -1.0, 1.0);
    return std::acos(c) * (180.0 / std::numbers::pi);
}

AngularErrorField angular_error(const FlowField& estimate, const FlowField& truth, double k) {
    if (!estimate.same_shape(truth))
        throw Error(Errc::dimension_mismatch, "angular_error: estimate and truth differ in size");
    if (!(k >= 1.0)) throw Error(Errc::invalid_argument, "angular_error: frame interval must be >= 1");
    AngularErrorField out;
    out.width = truth.width();
    out.height = truth.height();
    out.phi.assign(truth.size(), 0.0);
    out.mask.assign(truth.size(), 0);
    for (int y = 0; y < truth.height(); ++y) {
        for (int x = 0; x < truth.width(); ++x) {
            if (!estimate.valid(x, y) || !truth.valid(x, y)) continue;
            const std::size_t i = truth.index(x, y);
            out.phi[i] = angular_error_deg(truth.at(x, y), estimate.at(x, y), k);
            out.mask[i] = 1;
        }
    }
    return out;
}

MetricsReport summarize(const std::vector<AngularErrorField>& errs,
                        const std::vector<FlowField>& estimates,
                        const std::vector<FlowField>& truths, double runtime_s) {
    if (errs.size() != estimates.size() || errs.size() != truths.size())
        throw Error(Errc::invalid_argument, "summarize: mismatched input counts");
    MetricsReport r;
    r.runtime = runtime_s;
    double sum_phi = 0.0;
    double sum_epe = 0.0;
    std::size_t outliers = 0;
    for (std::size_t f = 0; f < errs.size(); ++f) {
        const AngularErrorField& e = errs[f];
        if (e.phi.size() != estimates[f].size() || e.phi.size() != truths[f].size())
            throw Error(Errc::dimension_mismatch, "summarize: error field and flows differ in size");
        for (std::size_t i = 0; i < e.mask.size(); ++i) {
            if (!e.mask[i]) continue;
            if (!estimates[f].valid()[i] || !truths[f].valid()[i])
                throw Error(Errc::invalid_argument, "summarize: mask includes an invalid pixel");
            ++r.pixel_count;
            sum_phi += e.phi[i];
            const double du = static_cast<double>(estimates[f].u()[i]) - truths[f].u()[i];
            const double dv = static_cast<double>(estimates[f].v()[i]) - truths[f].v()[i];
            const double epe = std::hypot(du, dv);
            sum_epe += epe;
            if (epe > kOutlierThresholdPx) ++outliers;
        }
    }
    if (r.pixel_count == 0) throw Error(Errc::empty_mask, "summarize: no pixels included");
    const double n = static_cast<double>(r.pixel_count);
    r.aae = sum_phi / n;
    double sq = 0.0;
    for (const AngularErrorField& e : errs)
        for (std::size_t i = 0; i < e.mask.size(); ++i)
            if (e.mask[i]) sq += (e.phi[i] - r.aae) * (e.phi[i] - r.aae);
    r.sad = std::sqrt(sq / n);
    r.epe = sum_epe / n;
    r.outlier_fraction = static_cast<double>(outliers) / n;
    return r;
}

MetricsReport summarize(const AngularErrorField& err, const FlowField& estimate,
                        const FlowField& truth, double runtime_s) {
    return summarize(std::vector<AngularErrorField>{err}, std::vector<FlowField>{estimate},
                     std::vector<FlowField>{truth}, runtime_s);
}

}  // namespace upiv
