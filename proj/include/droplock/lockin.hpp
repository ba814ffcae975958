#pragma once

#include <vector>

#include <Eigen/Core>

#include "droplock/types.hpp"

namespace droplock {

struct DemodConfig {
    double reference_freq = 1000.0;  // Hz
    double time_constant = 0.03;     // s, per one-pole stage
    int filter_order = 2;            // cascaded stages, 1..4
};

void validate(const DemodConfig& cfg, double sample_rate);

// Magnitude response of the cascaded one-pole chain at offset_hz from DC
// (exact discrete-time form for the given sample interval).
double filter_gain(const DemodConfig& cfg, double offset_hz, double dt);

// Output samples excluded as settling: the first 5 time constants.
Eigen::Index settling_samples(double time_constant, double dt);

struct Quadratures {
    TimeSeries in_phase;
    TimeSeries quadrature;
    Eigen::Index settling = 0;

    // sqrt(I^2 + Q^2); a tone A cos(2 pi f_ref t + phi) settles at A / 2.
    TimeSeries magnitude() const;
};

// Streaming dual-phase demodulator. Mixes against unit cos/sin at the
// reference, low-passes each arm with the cascaded one-pole chain, and
// optionally low-passes the raw input (total PL) with its own time constant.
// Chunks must be fed in time order; an instance is not thread safe.
class Demodulator {
public:
    Demodulator(DemodConfig cfg, double sample_rate, double pl_smooth_tau = 0.0);

    // Processes x as the next samples of the stream. Output refs must have x.size().
    void process(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> i_out,
                 Eigen::Ref<Eigen::VectorXd> q_out, Eigen::Ref<Eigen::VectorXd> pl_out);

    Eigen::Index samples_seen() const { return counter_; }
    double running_mean() const { return counter_ > 0 ? sum_ / static_cast<double>(counter_) : 0.0; }

private:
    DemodConfig cfg_;
    double dt_;
    double alpha_;
    double pl_alpha_;
    std::vector<double> i_state_;
    std::vector<double> q_state_;
    std::vector<double> pl_state_;
    Eigen::Index counter_ = 0;
    double sum_ = 0.0;
};

Quadratures demodulate_iq(const TimeSeries& ts, const DemodConfig& cfg);
// R = sqrt(I^2 + Q^2) including the settling samples; see settling_samples().
TimeSeries demodulate(const TimeSeries& ts, const DemodConfig& cfg);

struct ConventionalConfig {
    DemodConfig demod;
    double pl_smooth_tau = 0.03;  // s
    double decimation = 0.1;      // s between reported estimates
};

// Streaming ratiometric contrast 2R / LP(PL). The factor 2 undoes the mixer
// gain so a fully modulated tone reads its true fractional depth. Estimates
// are emitted every `decimation` seconds once both filters have settled;
// an estimate is invalid when the smoothed PL is below 1e-9 x the running
// mean of the input.
class RatiometricContrast {
public:
    RatiometricContrast(ConventionalConfig cfg, double sample_rate, double t_start = 0.0);

    void process(const Eigen::Ref<const Eigen::VectorXd>& x);
    // Series of everything emitted so far, with summary statistics filled in.
    ContrastSeries result() const;

private:
    ConventionalConfig cfg_;
    double dt_;
    double t_start_;
    Demodulator demod_;
    Eigen::Index settle_ = 0;
    Eigen::Index next_emit_ = 1;  // decimation tick index
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<bool> valid_;
    Eigen::VectorXd i_buf_, q_buf_, pl_buf_;
};

ContrastSeries ratiometric_contrast(const TimeSeries& ts, const DemodConfig& cfg, double pl_smooth_tau,
                                    double decimation = 0.1);

}  // namespace droplock
