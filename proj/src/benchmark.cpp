#include "upiv/metrics.hpp"

#include "upiv/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

namespace upiv {

namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

}  // namespace

AlgorithmSpec AlgorithmSpec::lk(const LKParams& p) {
    return {"lk", "depth=" + std::to_string(p.pyramid_depth) + " r=" + std::to_string(p.window_radius), p};
}

AlgorithmSpec AlgorithmSpec::cc(const CCParams& p) {
    return {"cc", std::to_string(p.template_size) + "x" + std::to_string(p.template_size), p};
}

AlgorithmSpec AlgorithmSpec::hs(const HSParams& p) {
    return {"hs", format("alpha=%g", p.alpha) + " depth=" + std::to_string(p.pyramid_depth), p};
}

AlgorithmSpec AlgorithmSpec::zero() { return {"zero", "-", ZeroFlowParams{}}; }

AlgorithmOutput run_algorithm(const AlgorithmSpec& algo, const ImageFrame& a, const ImageFrame& b,
                              unsigned workers) {
    AlgorithmOutput out;
    if (const auto* p = std::get_if<LKParams>(&algo.params)) {
        out.flow = dense_flow(a, b, *p, workers).flow;
    } else if (const auto* p = std::get_if<CCParams>(&algo.params)) {
        CCFlowResult r = cc_dense_flow(a, b, *p, workers);
        out.ambiguous_fraction = r.ambiguous_fraction();
        out.flow = std::move(r.flow);
    } else if (const auto* p = std::get_if<HSParams>(&algo.params)) {
        out.flow = horn_schunck(a, b, *p, workers).flow;
    } else {
        if (a.width() != b.width() || a.height() != b.height())
            throw Error(Errc::dimension_mismatch, "zero flow: frame sizes differ");
        out.flow = FlowField(a.width(), a.height());
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x) out.flow.set(x, y, {});
    }
    return out;
}

std::vector<BenchmarkRow> benchmark(const std::vector<AlgorithmSpec>& algorithms,
                                    const Dataset& dataset, const BenchmarkConfig& config) {
    if (config.repeats < 1) throw Error(Errc::invalid_config, "bench.repeats must be >= 1");
    if (config.margin < 0) throw Error(Errc::invalid_config, "bench.margin must be >= 0");
    if (dataset.frames.size() < 2 || dataset.truth.size() + 1 < dataset.frames.size())
        throw Error(Errc::invalid_argument, "benchmark: need at least two frames with truth per pair");

    std::vector<int> pairs = config.pairs;
    if (pairs.empty())
        for (int i = 0; i + 1 < static_cast<int>(dataset.frames.size()); ++i) pairs.push_back(i);
    for (int p : pairs)
        if (p < 0 || p + 1 >= static_cast<int>(dataset.frames.size()))
            throw Error(Errc::invalid_config, "bench.pairs index " + std::to_string(p) + " out of range");

    std::vector<BenchmarkRow> rows;
    for (const AlgorithmSpec& algo : algorithms) {
        BenchmarkRow row;
        row.algorithm = algo.name;
        row.parameter = algo.label;
        try {
            std::vector<double> times;
            std::vector<FlowField> estimates;
            double ambiguous_sum = 0.0;
            bool has_ambiguity = false;
            for (int rep = 0; rep < config.repeats; ++rep) {
                double elapsed = 0.0;
                std::vector<FlowField> est;
                for (int p : pairs) {
                    const auto t0 = std::chrono::steady_clock::now();
                    AlgorithmOutput out = run_algorithm(algo, dataset.frames[p], dataset.frames[p + 1],
                                                        config.workers);
                    const auto t1 = std::chrono::steady_clock::now();
                    elapsed += std::chrono::duration<double>(t1 - t0).count();
                    if (rep == 0 && out.ambiguous_fraction >= 0.0) {
                        has_ambiguity = true;
                        ambiguous_sum += out.ambiguous_fraction;
                    }
                    est.push_back(std::move(out.flow));
                }
                times.push_back(elapsed);
                if (rep == 0) estimates = std::move(est);
            }
            std::sort(times.begin(), times.end());
            const double runtime = times[times.size() / 2];

            std::vector<AngularErrorField> errs;
            std::vector<FlowField> truths;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const FlowField& truth = dataset.truth[pairs[i]];
                AngularErrorField e = angular_error(estimates[i], truth, config.frame_interval);
                e.apply_margin(config.margin);
                errs.push_back(std::move(e));
                truths.push_back(truth);
            }
            row.report = summarize(errs, estimates, truths, runtime);
            row.report.frame_interval = config.frame_interval;
            if (has_ambiguity) row.ambiguous_fraction = ambiguous_sum / static_cast<double>(pairs.size());
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    if (config.sort_by_aae) {
        std::stable_sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
            if (a.ok != b.ok) return a.ok;
            return a.report.aae < b.report.aae;
        });
    }
    return rows;
}

}  // namespace upiv
