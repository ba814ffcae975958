#include "droplock/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace droplock {

const ContrastSeries& PipelineResult::series(EstimatorId id) const {
    if (id == EstimatorId::ConventionalLockin) {
        if (!conventional) throw std::invalid_argument("no conventional series in this result");
        return *conventional;
    }
    for (const auto& s : dual)
        if (s.estimator_id == id) return s;
    throw std::invalid_argument("estimator " + to_string(id) + " was not run");
}

namespace {

using ChunkSource = std::function<TimeSeries(Eigen::Index first, Eigen::Index count)>;

PipelineResult run_chunks(const ChunkSource& source, Eigen::Index total, double dt, const PipelineOptions& options) {
    const auto start = static_cast<Eigen::Index>(std::llround(options.start_time / dt));
    if (start < 0 || start >= total) throw std::invalid_argument("start_time outside the trace");
    const bool want_dual = !options.estimators.empty();
    const auto window = static_cast<Eigen::Index>(std::llround(options.dual.delta_t / dt));
    if (want_dual && window < 2) throw std::invalid_argument("delta_t shorter than two samples");
    const Eigen::Index unit = std::max<Eigen::Index>(window, 1);
    const auto chunk_windows = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(options.chunk_seconds / (unit * dt)));
    const Eigen::Index chunk = chunk_windows * unit;

    PipelineResult result;
    result.dual.resize(options.estimators.size());
    std::optional<RatiometricContrast> conventional;
    if (options.conventional)
        conventional.emplace(*options.conventional, 1.0 / dt, static_cast<double>(start) * dt);

    for (Eigen::Index first = start; first < total; first += chunk) {
        const Eigen::Index count = std::min(chunk, total - first);
        const TimeSeries piece = source(first, count);
        if (conventional) conventional->process(piece.samples);
        if (count < unit) continue;
        if (want_dual) {
            EstimatorConfig cfg = options.dual;
            const WindowAmplitudes amps = measure_windows(piece, cfg);
            for (std::size_t e = 0; e < options.estimators.size(); ++e) {
                cfg.estimator_id = options.estimators[e];
                append(result.dual[e], contrast_from(amps, cfg));
            }
        }
        if (!options.spectrogram_bands.empty()) {
            const Spectrogram sg = compute_spectrogram(piece, options.dual.delta_t, options.spectrogram_bands,
                                                       options.dual.taper);
            if (!result.spectrogram)
                result.spectrogram = sg;
            else
                append(*result.spectrogram, sg);
        }
    }
    for (std::size_t e = 0; e < options.estimators.size(); ++e) {
        result.dual[e].estimator_id = options.estimators[e];
        result.dual[e].calibrated = options.estimators[e] != EstimatorId::PaperMain;
        result.dual[e].update_summary();
    }
    if (conventional) result.conventional = conventional->result();
    return result;
}

}  // namespace

PipelineResult run_pipeline(const Synthesizer& synth, const PipelineOptions& options) {
    return run_chunks([&](Eigen::Index first, Eigen::Index count) { return synth.render(first, count); },
                      synth.sample_count(), synth.dt(), options);
}

PipelineResult run_pipeline(const TimeSeries& ts, const PipelineOptions& options) {
    return run_chunks(
        [&](Eigen::Index first, Eigen::Index count) {
            return TimeSeries(ts.time(first), ts.dt, ts.samples.segment(first, count));
        },
        ts.size(), ts.dt, options);
}

}  // namespace droplock
