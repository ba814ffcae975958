#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>
#include <numbers>

#include "droplock/brownian.hpp"
#include "droplock/dsp.hpp"
#include "droplock/pipeline.hpp"
#include "support.hpp"

using namespace droplock;
using testing::rel_err;

namespace {

// Single-sided amplitude of the tone at freq from a plain DFT sum over an
// integer number of its cycles (independent of the library's FFT path).
double dft_amplitude(const Eigen::VectorXd& x, double dt, double freq) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
        acc += x(k) * std::polar(1.0, -2.0 * std::numbers::pi * freq * static_cast<double>(k) * dt);
    return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

ExperimentConfig noisy_config(double duration) {
    ExperimentConfig c = reference::matched_config(duration, 5);
    c.noise.laser_drift_fraction = 0.05;
    c.noise.laser_drift_period = 3.0;
    c.droplets.profile = Profile::RaisedCosine;
    c.mw.waveform = MwWaveform::SquareAM;
    return c;
}

}  // namespace

TEST_CASE("noiseless trace carries the three-line sideband structure") {
    for (const double C : {0.005, 0.024, 0.056}) {
        CAPTURE(C);
        const TimeSeries ts = testing::noiseless_trace(29.0, C, 2.0);
        const Eigen::VectorXd seg = ts.samples.head(50'000);
        // Direct DFT oracle against the product-to-sum expansion.
        CHECK(rel_err(dft_amplitude(seg, ts.dt, 29.0), 1.0) < 1e-6);
        CHECK(rel_err(dft_amplitude(seg, ts.dt, 1000.0), C) < 1e-6);
        CHECK(rel_err(dft_amplitude(seg, ts.dt, 1029.0), C / 2.0) < 1e-6);
        CHECK(rel_err(dft_amplitude(seg, ts.dt, 971.0), C / 2.0) < 1e-6);
        // Same through the windowed Hann spectrum.
        const SpectrumWindow w = window_spectrum(ts, 2.0, 1.0);
        CHECK(rel_err(w.magnitudes(29), 1.0) < 1e-6);
        CHECK(rel_err(w.magnitudes(1000), C) < 1e-6);
        CHECK(rel_err(w.magnitudes(971), C / 2.0) < 1e-6);
        CHECK(rel_err(w.magnitudes(1029), C / 2.0) < 1e-6);
    }
}

TEST_CASE("zero contrast leaves only DC and the droplet line") {
    const TimeSeries ts = testing::noiseless_trace(29.0, 0.0, 1.0);
    const SpectrumWindow w = spectrum_of(ts.samples, ts.dt, Taper::Rectangular);
    CHECK(std::abs(ts.samples.mean() - 1.0) < 1e-12);
    CHECK(rel_err(w.magnitudes(29), 1.0) < 1e-9);
    for (const Eigen::Index bin : {971, 1000, 1029}) CHECK(w.magnitudes(bin) < 1e-10);
    Eigen::VectorXd rest = w.magnitudes;
    rest(29) = 0.0;
    CHECK(rest.maxCoeff() < 1e-10);
}

TEST_CASE("square profile adds odd harmonics below the band limit only") {
    ExperimentConfig c = reference::noiseless_config(100.0, 0.0, 1.0);
    c.acquisition.sample_rate = 20'000.0;
    c.droplets.profile = Profile::Square;
    const TimeSeries ts = Synthesizer(c).render_all();
    const SpectrumWindow w = spectrum_of(ts.samples, ts.dt, Taper::Rectangular);
    CHECK(rel_err(w.magnitudes(100), 4.0 / std::numbers::pi) < 1e-3);
    CHECK(rel_err(w.magnitudes(300), 4.0 / (3.0 * std::numbers::pi)) < 1e-3);
    CHECK(w.magnitudes(200) < 1e-6);
    // Harmonics at or above sample_rate / 4 are not synthesized.
    CHECK(w.magnitudes.tail(w.magnitudes.size() - 5000).maxCoeff() < 1e-6);
}

TEST_CASE("rendering is deterministic and independent of chunking") {
    const Synthesizer synth(noisy_config(4.0));
    const TimeSeries all = synth.render_all();
    const Synthesizer again(noisy_config(4.0));
    CHECK(again.render_all().samples == all.samples);
    for (const Eigen::Index first : {Eigen::Index{0}, Eigen::Index{12'345}, Eigen::Index{150'000}}) {
        const TimeSeries part = synth.render(first, 7'777);
        CHECK(part.samples == all.samples.segment(first, 7'777));
        CHECK(part.t_start == doctest::Approx(all.time(first)));
    }
    ExperimentConfig other = noisy_config(4.0);
    other.acquisition.rng_seed = 6;
    CHECK(Synthesizer(other).render_all().samples != all.samples);
}

TEST_CASE("noise-free synthesis is linear in the PL scale") {
    ExperimentConfig c = reference::noiseless_config(34.0, 0.056, 2.0);
    c.droplets.rate_jitter_sigma = 0.2;
    c.droplets.per_droplet_sigma = 0.01;
    c.noise.background_b0 = 0.7;
    c.noise.background_decay_tau = 1.5;
    const TimeSeries base = Synthesizer(c).render_all();
    const double alpha = 3.7;
    c.droplets.m0 *= alpha;
    c.droplets.g0 *= alpha;
    c.noise.background_b0 *= alpha;
    const TimeSeries scaled = Synthesizer(c).render_all();
    CHECK(((scaled.samples - alpha * base.samples).array().abs() / (alpha * base.samples.array().abs())).maxCoeff() <
          1e-12);
}

TEST_CASE("droplet count follows the integrated rate") {
    ExperimentConfig c = reference::noiseless_config(346.5, 0.056, 3600.0);
    c.droplets.rate_jitter_sigma = reference::kRateJitter;
    c.droplets.per_droplet_sigma = 0.0023;
    c.mw.f_MW = 3500.0;
    c.acquisition.sample_rate = 50'000.0;
    const Synthesizer synth(c);
    const GroundTruth& truth = synth.ground_truth();
    const double T = static_cast<double>(synth.sample_count() - 1) * synth.dt();
    const double integral = synth.droplet_cycles(T);
    CHECK(std::abs(static_cast<double>(truth.droplet_count()) - std::round(integral)) <= 1.0);
    // More than a million droplets per hour at the highest demonstrated rate.
    CHECK(rel_err(static_cast<double>(truth.droplet_count()), 346.5 * 3600.0) < 1e-3);
    CHECK(truth.droplet_count() > 1'000'000);
    const double N = static_cast<double>(truth.droplet_count());
    CHECK(std::abs(truth.per_droplet_loading.mean() - 1.0) < 3.0 * 0.0023 / std::sqrt(N));
    CHECK(truth.f_D_values.maxCoeff() <= 346.5 + 3.0 * reference::kRateJitter);
    CHECK(truth.f_D_values.minCoeff() >= 346.5 - 3.0 * reference::kRateJitter);
}

TEST_CASE("background level decays exponentially") {
    ExperimentConfig c = reference::noiseless_config(29.0, 0.0, 2.0);
    c.noise.background_b0 = 2.0;
    c.noise.background_decay_tau = 0.5;
    const Synthesizer synth(c);
    CHECK(synth.background_level(0.0) == doctest::Approx(2.0));
    CHECK(synth.background_level(1.0) == doctest::Approx(2.0 * std::exp(-2.0)));
}

TEST_CASE("inject_brownian_noise identities") {
    const TimeSeries ts = testing::noiseless_trace(29.0, 0.056, 0.5);
    const TimeSeries flat(0.0, ts.dt, Eigen::VectorXd::Ones(ts.size()));
    CHECK(inject_brownian_noise(ts, flat, 0.0).samples == ts.samples);
    CHECK(inject_brownian_noise(ts, flat, 1.0).samples == ts.samples);
    const TimeSeries wrong_rate(0.0, ts.dt * 2.0, Eigen::VectorXd::Ones(ts.size()));
    CHECK_THROWS_AS(inject_brownian_noise(ts, wrong_rate, 0.3), std::invalid_argument);
    const TimeSeries short_trace(0.0, ts.dt, Eigen::VectorXd::Ones(10));
    CHECK_THROWS_AS(inject_brownian_noise(ts, short_trace, 0.3), std::invalid_argument);

    // Background is left untouched.
    NoiseBudget nb;
    nb.background_b0 = 0.5;
    nb.background_decay_tau = 10.0;
    TimeSeries with_bg = ts;
    for (Eigen::Index k = 0; k < ts.size(); ++k) with_bg.samples(k) += 0.5 * std::exp(-ts.time(k) / 10.0);
    const TimeSeries half(0.0, ts.dt, Eigen::VectorXd::Constant(ts.size(), 0.5));
    const TimeSeries out = inject_brownian_noise(with_bg, half, 1.0, &nb);
    for (Eigen::Index k = 0; k < ts.size(); k += 997)
        CHECK(out.samples(k) == doctest::Approx(0.5 * ts.samples(k) + 0.5 * std::exp(-ts.time(k) / 10.0)));
}

TEST_CASE("Brownian PL fluctuation hurts the conventional lock-in more than the dual lock-in") {
    PipelineOptions opt;
    opt.dual = reference::dual();
    opt.conventional = reference::conventional();
    ExperimentConfig quiet = reference::matched_config(60.0, 3);
    quiet.brownian.depth = 0.0;
    ExperimentConfig brown = quiet;
    brown.brownian.depth = 0.3;
    const PipelineResult a = run_pipeline(Synthesizer(quiet), opt);
    const PipelineResult b = run_pipeline(Synthesizer(brown), opt);
    const double conv_growth = b.conventional->percent_error / a.conventional->percent_error;
    const double dual_growth = b.dual[0].percent_error / a.dual[0].percent_error;
    CAPTURE(conv_growth);
    CAPTURE(dual_growth);
    CHECK(conv_growth > 1.0);
    CHECK(dual_growth < conv_growth);
}

TEST_CASE("invalid configurations are rejected with the report") {
    ExperimentConfig c;
    c.mw.f_MW = 100.0;
    try {
        Synthesizer s(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK_FALSE(e.report().ok());
    }
}
