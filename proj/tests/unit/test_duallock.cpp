#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "droplock/duallock.hpp"
#include "support.hpp"

using namespace droplock;
using testing::rel_err;

namespace {

// One-second windows hold whole cycles of every line at 29 Hz and 1 kHz, so
// the noiseless oracles hold to rounding.
EstimatorConfig estimator(EstimatorId id, double f_D = 29.0) {
    EstimatorConfig e;
    e.estimator_id = id;
    e.f_D = f_D;
    e.delta_t = 1.0;
    return e;
}

constexpr EstimatorId kAll[] = {EstimatorId::PaperMain, EstimatorId::SIVariant, EstimatorId::ExactRecovery};

double max_rel_dev(const ContrastSeries& s, double want) {
    return ((s.values.array() - want).abs() / want).maxCoeff();
}

}  // namespace

TEST_CASE("noiseless three-line trace is recovered exactly by every variant") {
    // m0 = g0 = 1: F(f_D) = 1, F(f_MW) = C, F(f_MW +- f_D) = C / 2.
    const double C = 0.056;
    const TimeSeries ts = testing::noiseless_trace(29.0, C, 10.0);
    const ContrastSeries exact = estimate_contrast(ts, estimator(EstimatorId::ExactRecovery));
    const ContrastSeries si = estimate_contrast(ts, estimator(EstimatorId::SIVariant));
    const ContrastSeries paper = estimate_contrast(ts, estimator(EstimatorId::PaperMain));
    REQUIRE(exact.size() == 10);
    CHECK(exact.valid.all());
    CHECK(max_rel_dev(exact, C) < 1e-6);
    CHECK(max_rel_dev(si, C / 2.0) < 1e-6);
    CHECK(max_rel_dev(paper, 2.0 * C / 29.0) < 1e-6);
    CHECK_FALSE(paper.calibrated);
    CHECK(exact.calibrated);

    const WindowAmplitudes a = measure_windows(ts, estimator(EstimatorId::SIVariant));
    CHECK(((a.F_plus - a.F_minus).array().abs()).maxCoeff() < 1e-9);
    CHECK((a.F_D.array() - 1.0).abs().maxCoeff() < 1e-6);
    CHECK((a.mean.array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("every variant is strictly increasing in contrast") {
    for (const EstimatorId id : kAll) {
        double prev = 0.0;
        for (const double C : {0.01, 0.02, 0.04, 0.08}) {
            const ContrastSeries s = estimate_contrast(testing::noiseless_trace(29.0, C, 1.0), estimator(id));
            CHECK(s.mean > prev);
            prev = s.mean;
        }
    }
}

TEST_CASE("a uniform gain leaves every variant unchanged") {
    const TimeSeries ts = Synthesizer(reference::matched_config(7.0, 2)).render_all();
    for (const EstimatorId id : kAll) {
        const EstimatorConfig cfg = reference::dual(id);
        const ContrastSeries base = estimate_contrast(ts, cfg);
        for (const double alpha : {0.1, 3.7, 10.0}) {
            TimeSeries scaled = ts;
            scaled.samples *= alpha;
            const ContrastSeries s = estimate_contrast(scaled, cfg);
            CHECK((s.valid == base.valid).all());
            CHECK(((s.values - base.values).array().abs() / base.values.array().abs().max(1e-300)).maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("windows are independent: concatenated traces give concatenated series") {
    EstimatorConfig cfg = estimator(EstimatorId::SIVariant, 34.0);
    cfg.delta_t = 0.7;
    cfg.taper = Taper::Rectangular;
    const TimeSeries ts = Synthesizer(reference::matched_config(5.6, 4)).render_all();
    const Eigen::Index half = 4 * 35'000;
    const TimeSeries a(ts.t_start, ts.dt, ts.samples.head(half));
    const TimeSeries b(ts.time(half), ts.dt, ts.samples.segment(half, half));
    ContrastSeries joined = estimate_contrast(a, cfg);
    append(joined, estimate_contrast(b, cfg));
    const ContrastSeries whole = estimate_contrast(ts, cfg);
    REQUIRE(whole.size() == joined.size());
    CHECK(whole.values == joined.values);
    CHECK((whole.valid == joined.valid).all());
    CHECK(whole.times.isApprox(joined.times, 1e-14));
}

TEST_CASE("calibration maps the uncalibrated output to absolute contrast") {
    const TimeSeries ts = testing::noiseless_trace(29.0, 0.056, 2.0);
    const ContrastSeries paper = estimate_contrast(ts, estimator(EstimatorId::PaperMain));
    const double k = calibrate(paper, 0.056);
    CHECK(k == doctest::Approx(14.5).epsilon(1e-6));
    const ContrastSeries cal = apply_calibration(paper, k);
    CHECK(cal.calibrated);
    CHECK(rel_err(cal.mean, 0.056) < 1e-9);
    const ContrastSeries exact = estimate_contrast(ts, estimator(EstimatorId::ExactRecovery));
    CHECK(std::abs(calibrate(exact, 0.056) - 1.0) < 1e-4);

    ContrastSeries dead = paper;
    dead.valid.setConstant(false);
    CHECK_THROWS_AS(calibrate(dead, 0.056), std::invalid_argument);
}

TEST_CASE("zero contrast stays at the noise floor and noise-only windows are invalid") {
    const TimeSeries ts = testing::noiseless_trace(29.0, 0.0, 2.0);
    for (const EstimatorId id : kAll) {
        const ContrastSeries s = estimate_contrast(ts, estimator(id));
        CHECK(s.valid.all());
        CHECK(s.values.cwiseAbs().maxCoeff() < 1e-9);
    }
    const TimeSeries noise(0.0, 1.0 / 50'000.0, testing::gaussian_vector(70'000, 12, 1.0, 0.1));
    const ContrastSeries none = estimate_contrast(noise, estimator(EstimatorId::SIVariant));
    CHECK(none.n_valid() == 0);
    CHECK(none.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a wandering droplet rate is followed by the tracked source") {
    ExperimentConfig c = reference::noiseless_config(29.0, 0.056, 14.0);
    c.droplets.rate_jitter_sigma = 1.0;
    const Synthesizer synth(c);
    const TimeSeries ts = synth.render_all();
    EstimatorConfig cfg = estimator(EstimatorId::SIVariant);
    cfg.delta_t = 0.7;
    cfg.f_D_source = FdSource::Tracked;
    const WindowAmplitudes a = measure_windows(ts, cfg);
    for (Eigen::Index w = 0; w < a.size(); ++w) {
        const double lo = a.times(w) - 0.35;
        const double hi = a.times(w) + 0.35;
        CHECK(std::abs(a.f_D(w) - (synth.droplet_cycles(hi) - synth.droplet_cycles(lo)) / 0.7) < 0.5);
    }
    const ContrastSeries tracked = contrast_from(a, cfg);
    CHECK(tracked.valid.all());
    CHECK(std::abs(tracked.mean - 0.028) < 0.002);
}

TEST_CASE("band layout is validated") {
    EstimatorConfig cfg = estimator(EstimatorId::PaperMain, 29.0);
    CHECK(validate(cfg, 50'000.0).ok());
    cfg.f_MW = 40.0;
    CHECK_FALSE(validate(cfg, 50'000.0).ok());
    CHECK_THROWS_AS(measure_windows(testing::noiseless_trace(29.0, 0.056, 1.0), cfg), std::invalid_argument);
    cfg = estimator(EstimatorId::PaperMain, 29.0);
    cfg.mw_half_width = 20.0;
    CHECK_FALSE(validate(cfg, 50'000.0).ok());
    cfg = estimator(EstimatorId::PaperMain, 29.0);
    cfg.f_MW = 24'990.0;
    CHECK_FALSE(validate(cfg, 50'000.0).ok());
    cfg = estimator(EstimatorId::PaperMain, 29.0);
    cfg.delta_t = 0.2;
    const ValidationReport r = validate(cfg, 50'000.0);
    CHECK(r.ok());
    CHECK_FALSE(r.empty());
}

TEST_CASE("a trace shorter than one window is rejected") {
    const TimeSeries ts = testing::noiseless_trace(29.0, 0.056, 0.9);
    CHECK_THROWS_AS(estimate_contrast(ts, estimator(EstimatorId::SIVariant)), std::invalid_argument);
}
