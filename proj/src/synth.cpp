#include "droplock/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "droplock/brownian.hpp"
#include "droplock/parallel.hpp"
#include "droplock/random.hpp"

namespace droplock {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kTableBits = 16;
constexpr Eigen::Index kTableSize = Eigen::Index{1} << kTableBits;
constexpr double kJitterStep = 0.01;  // s, node spacing of the droplet-rate path
constexpr Eigen::Index kRenderChunk = 1 << 16;

double frac(double x) { return x - std::floor(x); }

// Smooth square: +1 plateau, raised-cosine transitions of width edge/2 cycles
// centred on |u| = 1/4, -1 elsewhere. edge = 1 reproduces cos(2 pi u).
double raised_cosine_profile(double u, double edge) {
    const double a = std::abs(u);
    const double w = 0.5 * edge;
    const double lo = 0.25 - 0.5 * w;
    if (a <= lo) return 1.0;
    if (a >= 0.25 + 0.5 * w) return -1.0;
    return std::cos(std::numbers::pi * (a - lo) / w);
}

Eigen::VectorXd square_coefficients(double duty, Eigen::Index harmonics) {
    Eigen::VectorXd c(harmonics + 1);
    c(0) = 2.0 * duty - 1.0;
    for (Eigen::Index k = 1; k <= harmonics; ++k) {
        const double kk = static_cast<double>(k);
        c(k) = 4.0 / (std::numbers::pi * kk) * std::sin(std::numbers::pi * kk * duty);
    }
    return c;
}

}  // namespace

PeriodicTable::PeriodicTable(const Eigen::VectorXd& cos_coeffs) : table_(kTableSize) {
    // cos(2 pi k j / N) == base[(k j) mod N], exact index arithmetic.
    Eigen::VectorXd base(kTableSize);
    for (Eigen::Index j = 0; j < kTableSize; ++j)
        base(j) = std::cos(kTwoPi * static_cast<double>(j) / static_cast<double>(kTableSize));
    table_.setConstant(cos_coeffs.size() > 0 ? cos_coeffs(0) : 0.0);
    for (Eigen::Index k = 1; k < cos_coeffs.size(); ++k) {
        const double ck = cos_coeffs(k);
        if (ck == 0.0) continue;
        for (Eigen::Index j = 0; j < kTableSize; ++j) table_(j) += ck * base((k * j) & (kTableSize - 1));
    }
}

double PeriodicTable::at_cycles(double cycles) const {
    const double pos = frac(cycles) * static_cast<double>(kTableSize);
    const auto i = static_cast<Eigen::Index>(pos);
    const double w = pos - static_cast<double>(i);
    const Eigen::Index i0 = i & (kTableSize - 1);
    const Eigen::Index i1 = (i + 1) & (kTableSize - 1);
    return table_(i0) * (1.0 - w) + table_(i1) * w;
}

Eigen::VectorXd profile_coefficients(const DropletTrain& droplets, double max_freq) {
    const auto harmonics = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::ceil(max_freq / droplets.f_D)) - 1);
    switch (droplets.profile) {
        case Profile::Sinusoid: {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
            c(1) = 1.0;
            return c;
        }
        case Profile::Square:
            return square_coefficients(droplets.duty, harmonics);
        case Profile::RaisedCosine: {
            // Midpoint-rule projection; the profile is C1 so this converges fast.
            const Eigen::Index M = kTableSize;
            Eigen::VectorXd samples(M);
            for (Eigen::Index j = 0; j < M; ++j) {
                const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(M) - 0.5;
                samples(j) = raised_cosine_profile(u, droplets.edge_fraction);
            }
            Eigen::VectorXd c(harmonics + 1);
            c(0) = samples.mean();
            for (Eigen::Index k = 1; k <= harmonics; ++k) {
                double acc = 0.0;
                for (Eigen::Index j = 0; j < M; ++j) {
                    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(M) - 0.5;
                    acc += samples(j) * std::cos(kTwoPi * static_cast<double>(k) * u);
                }
                c(k) = 2.0 * acc / static_cast<double>(M);
            }
            return c;
        }
    }
    throw std::logic_error("unhandled profile");
}

struct Synthesizer::Impl {
    ExperimentConfig cfg;
    Eigen::Index n_samples = 0;
    double dt = 0.0;
    GroundTruth truth;

    bool jitter = false;
    Eigen::VectorXd node_f;       // Hz at node j
    Eigen::VectorXd node_cycles;  // accumulated cycles at node j

    std::optional<PeriodicTable> profile_table;
    std::optional<PeriodicTable> mw_table;
    std::optional<TimeSeries> brown_profile;  // mean-1 particle fluorescence at step rate

    double cycles(double t) const {
        if (!jitter) return cfg.droplets.f_D * t;
        const auto last = node_f.size() - 1;
        auto j = static_cast<Eigen::Index>(t / kJitterStep);
        j = std::clamp<Eigen::Index>(j, 0, last - 1);
        const double tau = t - static_cast<double>(j) * kJitterStep;
        const double f0 = node_f(j);
        const double f1 = node_f(j + 1);
        return node_cycles(j) + f0 * tau + (f1 - f0) * tau * tau / (2.0 * kJitterStep);
    }

    double background(double t) const {
        const auto& n = cfg.noise;
        return n.background_b0 > 0.0 ? n.background_b0 * std::exp(-t / n.background_decay_tau) : 0.0;
    }

    double brownian_factor(double t) const {
        if (!brown_profile) return 1.0;
        const auto& bp = *brown_profile;
        const double pos = t / bp.dt;
        const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), bp.size() - 2);
        const double w = pos - static_cast<double>(i);
        const double trace = bp.samples(i) * (1.0 - w) + bp.samples(i + 1) * w;
        const double d = cfg.brownian.depth;
        return 1.0 - d + d * trace;
    }

    void build_rate_path(const CounterRng& rng) {
        const auto& drop = cfg.droplets;
        const double t_last = static_cast<double>(n_samples) * dt;
        const auto nodes = static_cast<Eigen::Index>(std::ceil(t_last / kJitterStep)) + 2;
        node_f.resize(nodes);
        node_cycles.resize(nodes);
        const double lo = drop.f_D - 3.0 * drop.rate_jitter_sigma;
        const double hi = drop.f_D + 3.0 * drop.rate_jitter_sigma;
        const double step = drop.rate_jitter_sigma * std::sqrt(kJitterStep);
        node_f(0) = drop.f_D;
        node_cycles(0) = 0.0;
        for (Eigen::Index j = 1; j < nodes; ++j) {
            double f = node_f(j - 1) + step * rng.normal(static_cast<std::uint64_t>(j));
            if (f > hi) f = 2.0 * hi - f;
            if (f < lo) f = 2.0 * lo - f;
            node_f(j) = std::clamp(f, lo, hi);
            node_cycles(j) = node_cycles(j - 1) + 0.5 * (node_f(j - 1) + node_f(j)) * kJitterStep;
        }
        truth.f_D_times = Eigen::VectorXd::LinSpaced(nodes, 0.0, static_cast<double>(nodes - 1) * kJitterStep);
        truth.f_D_values = node_f;
    }

    void render(Eigen::Index first, Eigen::Ref<Eigen::VectorXd> out) const {
        const auto& drop = cfg.droplets;
        const auto& mw = cfg.mw;
        const auto& noise = cfg.noise;
        const CounterRng noise_rng(cfg.acquisition.rng_seed, Stream::SampleNoise);
        const bool noisy = noise.shot_scale > 0.0 || noise.background_white_sigma > 0.0;
        const bool drift = noise.laser_drift_fraction > 0.0;
        const Eigen::Index loads = truth.per_droplet_loading.size();
        const double mw_phase_cycles = mw.phase / kTwoPi;

        for (Eigen::Index i = 0; i < out.size(); ++i) {
            const Eigen::Index k = first + i;
            const double t = static_cast<double>(k) * dt;

            const double cyc = cycles(t);
            const double profile = profile_table ? profile_table->at_cycles(cyc) : std::cos(kTwoPi * frac(cyc));
            const auto droplet = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(cyc + 0.5)), 0,
                                                          loads - 1);
            double nd = (drop.m0 + drop.g0 * profile) * truth.per_droplet_loading(droplet);
            if (drift) nd *= 1.0 + 0.5 * noise.laser_drift_fraction * std::sin(kTwoPi * t / noise.laser_drift_period);
            nd *= brownian_factor(t);

            const double mw_cycles = mw.f_MW * t;
            const double w = mw_table ? mw_table->at_cycles(mw_cycles + mw_phase_cycles)
                                      : std::cos(kTwoPi * frac(mw_cycles) + mw.phase);
            double s = nd * (1.0 - mw.contrast * w) + background(t);

            if (noisy) {
                const auto [n1, n2] = noise_rng.normal_pair(static_cast<std::uint64_t>(k));
                const double shot = noise.shot_scale > 0.0 ? std::sqrt(noise.shot_scale * std::max(s, 0.0)) * n1 : 0.0;
                s += shot + noise.background_white_sigma * n2;
            }
            out(i) = s;
        }
    }
};

Synthesizer::Synthesizer(ExperimentConfig config) : impl_(std::make_unique<Impl>()) {
    if (auto report = validate(config); !report.ok()) throw ConfigError(std::move(report));
    Impl& s = *impl_;
    s.cfg = std::move(config);
    const auto& acq = s.cfg.acquisition;
    const auto& drop = s.cfg.droplets;
    s.dt = 1.0 / acq.sample_rate;
    s.n_samples = static_cast<Eigen::Index>(std::llround(acq.duration * acq.sample_rate));
    if (s.n_samples < 1) throw ConfigError(ValidationReport{{{ValidationIssue::Severity::Violation, "duration",
                                                              "duration yields no samples"}}});
    s.truth.true_contrast = s.cfg.mw.contrast;

    s.jitter = drop.rate_jitter_sigma > 0.0;
    if (s.jitter) {
        s.build_rate_path(CounterRng(acq.rng_seed, Stream::RateJitter));
    } else {
        s.truth.f_D_times = Eigen::VectorXd::LinSpaced(2, 0.0, static_cast<double>(s.n_samples) * s.dt);
        s.truth.f_D_values = Eigen::VectorXd::Constant(2, drop.f_D);
    }

    // Band limit for harmonic waveforms: Nyquist / 2.
    const double band_limit = acq.sample_rate / 4.0;
    if (drop.profile != Profile::Sinusoid) s.profile_table.emplace(profile_coefficients(drop, band_limit));
    if (s.cfg.mw.waveform == MwWaveform::SquareAM) {
        DropletTrain square;
        square.f_D = s.cfg.mw.f_MW;
        square.profile = Profile::Square;
        square.duty = 0.5;
        s.mw_table.emplace(profile_coefficients(square, band_limit));
    }

    const double t_last = static_cast<double>(s.n_samples - 1) * s.dt;
    const auto droplets = static_cast<Eigen::Index>(std::floor(s.cycles(t_last) + 0.5)) + 1;
    s.truth.per_droplet_loading = Eigen::VectorXd::Ones(droplets);
    if (drop.per_droplet_sigma > 0.0) {
        const CounterRng rng(acq.rng_seed, Stream::DropletLoading);
        for (Eigen::Index k = 0; k < droplets; ++k) {
            const double z = std::clamp(rng.normal(static_cast<std::uint64_t>(k)), -4.0, 4.0);
            s.truth.per_droplet_loading(k) = 1.0 + drop.per_droplet_sigma * z;
        }
    }

    if (s.cfg.brownian.depth > 0.0) {
        KineticsParams kin = s.cfg.brownian.kinetics;
        kin.duration = std::max(t_last + 2.0 * kin.dt_step, 2.0 * kin.dt_step);
        const auto ensemble = brownian::simulate(kin, derive_seed(acq.rng_seed, static_cast<std::uint64_t>(Stream::Particles)));
        s.brown_profile = brownian::fluorescence_profile(ensemble, s.cfg.brownian.beam_radius);
    }
}

Synthesizer::~Synthesizer() = default;
Synthesizer::Synthesizer(Synthesizer&&) noexcept = default;
Synthesizer& Synthesizer::operator=(Synthesizer&&) noexcept = default;

const ExperimentConfig& Synthesizer::config() const { return impl_->cfg; }
Eigen::Index Synthesizer::sample_count() const { return impl_->n_samples; }
double Synthesizer::dt() const { return impl_->dt; }
const GroundTruth& Synthesizer::ground_truth() const { return impl_->truth; }
double Synthesizer::droplet_cycles(double t) const { return impl_->cycles(t); }
double Synthesizer::background_level(double t) const { return impl_->background(t); }

void Synthesizer::render(Eigen::Index first, Eigen::Ref<Eigen::VectorXd> out) const {
    if (first < 0 || first + out.size() > impl_->n_samples) throw std::out_of_range("render range outside trace");
    const Eigen::Index n = out.size();
    const auto chunks = static_cast<std::size_t>((n + kRenderChunk - 1) / kRenderChunk);
    parallel_for(chunks, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * kRenderChunk;
        const Eigen::Index len = std::min(kRenderChunk, n - begin);
        impl_->render(first + begin, out.segment(begin, len));
    });
}

TimeSeries Synthesizer::render(Eigen::Index first, Eigen::Index count) const {
    Eigen::VectorXd samples(count);
    render(first, samples);
    return TimeSeries(static_cast<double>(first) * impl_->dt, impl_->dt, std::move(samples));
}

TimeSeries Synthesizer::render_all() const { return render(0, impl_->n_samples); }

std::pair<TimeSeries, GroundTruth> synthesize(const ExperimentConfig& config) {
    Synthesizer synth(config);
    TimeSeries ts = synth.render_all();
    return {std::move(ts), synth.ground_truth()};
}

TimeSeries inject_brownian_noise(const TimeSeries& ts, const TimeSeries& trace, double depth,
                                 const NoiseBudget* background) {
    if (std::abs(ts.dt - trace.dt) > 1e-9 * ts.dt) throw std::invalid_argument("sample-rate mismatch");
    if (depth < 0.0 || depth > 1.0) throw std::invalid_argument("depth must lie in [0, 1]");
    if (depth == 0.0) return ts;
    TimeSeries out = ts;
    for (Eigen::Index k = 0; k < ts.size(); ++k) {
        const double t = ts.time(k);
        const auto idx = static_cast<Eigen::Index>(std::llround((t - trace.t_start) / trace.dt));
        if (idx < 0 || idx >= trace.size()) throw std::invalid_argument("trace does not cover the time series");
        const double b = (background && background->background_b0 > 0.0)
                             ? background->background_b0 * std::exp(-t / background->background_decay_tau)
                             : 0.0;
        out.samples(k) = b + (ts.samples(k) - b) * (1.0 - depth + depth * trace.samples(idx));
    }
    return out;
}

}  // namespace droplock
