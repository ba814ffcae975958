#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "droplock/pipeline.hpp"
#include "support.hpp"

using namespace droplock;

namespace {

PipelineOptions options(double chunk_seconds) {
    PipelineOptions opt;
    opt.dual = reference::dual();
    opt.estimators = {EstimatorId::PaperMain, EstimatorId::SIVariant};
    opt.conventional = reference::conventional();
    opt.spectrogram_bands = {{34.0, 2.0}, {1000.0, 2.0}};
    opt.chunk_seconds = chunk_seconds;
    return opt;
}

}  // namespace

TEST_CASE("chunked rendering gives the same series as one batch pass") {
    const Synthesizer synth(reference::matched_config(14.0, 1));
    const TimeSeries ts = synth.render_all();
    const PipelineResult chunked = run_pipeline(synth, options(2.3));
    const PipelineResult batch = run_pipeline(ts, options(1e6));

    // Direct calls on the whole trace are the oracle.
    EstimatorConfig cfg = reference::dual();
    const ContrastSeries paper = estimate_contrast(ts, cfg);
    cfg.estimator_id = EstimatorId::SIVariant;
    const ContrastSeries si = estimate_contrast(ts, cfg);
    const ConventionalConfig cc = reference::conventional();
    const ContrastSeries conv = ratiometric_contrast(ts, cc.demod, cc.pl_smooth_tau, cc.decimation);

    for (const PipelineResult* r : {&chunked, &batch}) {
        REQUIRE(r->dual.size() == 2);
        CHECK(r->series(EstimatorId::PaperMain).values == paper.values);
        CHECK(r->series(EstimatorId::SIVariant).values == si.values);
        CHECK((r->series(EstimatorId::SIVariant).valid == si.valid).all());
        CHECK(r->series(EstimatorId::PaperMain).times.isApprox(paper.times, 1e-12));
        CHECK_FALSE(r->series(EstimatorId::PaperMain).calibrated);
        CHECK(r->series(EstimatorId::ConventionalLockin).values == conv.values);
        CHECK(r->series(EstimatorId::PaperMain).percent_error == doctest::Approx(paper.percent_error));
        REQUIRE(r->spectrogram.has_value());
        CHECK(r->spectrogram->n_windows() == 20);
        CHECK(r->spectrogram->band_magnitudes[1] == batch.spectrogram->band_magnitudes[1]);
    }
    CHECK_THROWS_AS(chunked.series(EstimatorId::ExactRecovery), std::invalid_argument);
}

TEST_CASE("leading settling time is discarded") {
    const TimeSeries ts = testing::noiseless_trace(34.0, 0.056, 7.0);
    PipelineOptions opt = options(60.0);
    opt.start_time = 1.4;
    opt.conventional.reset();
    const PipelineResult r = run_pipeline(ts, opt);
    CHECK(r.dual[0].size() == 8);
    CHECK(r.dual[0].times(0) == doctest::Approx(1.75));
    CHECK_THROWS_AS(r.series(EstimatorId::ConventionalLockin), std::invalid_argument);
    opt.start_time = 8.0;
    CHECK_THROWS_AS(run_pipeline(ts, opt), std::invalid_argument);
}
