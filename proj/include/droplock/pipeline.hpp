#pragma once

#include <optional>
#include <vector>

#include "droplock/duallock.hpp"
#include "droplock/lockin.hpp"
#include "droplock/synth.hpp"

namespace droplock {

// One pass over a trace feeding the windowed dual lock-in estimators, the
// conventional demodulator and optionally a band spectrogram. Synthesized
// traces are rendered chunk by chunk so hour-long runs never sit in memory.
struct PipelineOptions {
    EstimatorConfig dual;
    std::vector<EstimatorId> estimators{EstimatorId::PaperMain};
    std::optional<ConventionalConfig> conventional;
    std::vector<BandSpec> spectrogram_bands;  // empty: no spectrogram
    double start_time = 0.0;                  // s of leading trace discarded (settling)
    double chunk_seconds = 60.0;
};

struct PipelineResult {
    std::vector<ContrastSeries> dual;  // one per requested estimator, same order
    std::optional<ContrastSeries> conventional;
    std::optional<Spectrogram> spectrogram;

    const ContrastSeries& series(EstimatorId id) const;
};

PipelineResult run_pipeline(const Synthesizer& synth, const PipelineOptions& options);
PipelineResult run_pipeline(const TimeSeries& ts, const PipelineOptions& options);

}  // namespace droplock
