#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "droplock/types.hpp"

namespace droplock {

struct GroundTruth {
    double true_contrast = 0.0;
    Eigen::VectorXd f_D_times;   // s
    Eigen::VectorXd f_D_values;  // Hz, realized droplet rate at f_D_times
    Eigen::VectorXd per_droplet_loading;

    Eigen::Index droplet_count() const { return per_droplet_loading.size(); }
};

// Periodic band-limited waveform stored as a dense one-period table.
class PeriodicTable {
public:
    // cos_coeffs[k] multiplies cos(k theta); entry 0 is the DC term.
    explicit PeriodicTable(const Eigen::VectorXd& cos_coeffs);
    // theta expressed in cycles (any real; only the fractional part matters).
    double at_cycles(double cycles) const;

private:
    Eigen::VectorXd table_;
};

// Cosine-series coefficients of the droplet profile truncated to harmonics
// below max_freq.
Eigen::VectorXd profile_coefficients(const DropletTrain& droplets, double max_freq);

// Renders the double-modulated PL model
//   S(t) = (m0 + g0 P(theta_D)) L_k drift(t) brown(t) [1 - C W(2 pi f_MW t + phi)] + b(t) + noise
// Every random draw is addressed by (seed, stream, counter), so any sample range
// can be rendered independently and in any order with identical results.
class Synthesizer {
public:
    // Throws ConfigError when validate(config) reports violations.
    explicit Synthesizer(ExperimentConfig config);
    ~Synthesizer();
    Synthesizer(Synthesizer&&) noexcept;
    Synthesizer& operator=(Synthesizer&&) noexcept;

    const ExperimentConfig& config() const;
    Eigen::Index sample_count() const;
    double dt() const;
    const GroundTruth& ground_truth() const;

    // Writes samples [first, first + out.size()).
    void render(Eigen::Index first, Eigen::Ref<Eigen::VectorXd> out) const;
    TimeSeries render(Eigen::Index first, Eigen::Index count) const;
    TimeSeries render_all() const;

    // Accumulated droplet cycles at time t.
    double droplet_cycles(double t) const;
    // Deterministic background b0 exp(-t / tau) without the white part.
    double background_level(double t) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::pair<TimeSeries, GroundTruth> synthesize(const ExperimentConfig& config);

// Multiplies the ND-dependent part of ts by (1 - depth + depth * trace).
// Without a background the whole trace is treated as ND-dependent; with one,
// background_level(t) of that budget is excluded. Throws on sample-rate
// mismatch or if trace is shorter than ts.
TimeSeries inject_brownian_noise(const TimeSeries& ts, const TimeSeries& trace, double depth,
                                 const NoiseBudget* background = nullptr);

}  // namespace droplock
