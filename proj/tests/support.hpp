#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "droplock/random.hpp"
#include "droplock/reference.hpp"
#include "droplock/synth.hpp"

namespace droplock::testing {

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Noise-free double-modulated trace with cosine profile and cosine MW.
inline TimeSeries noiseless_trace(double f_D, double contrast, double duration, double sample_rate = 50'000.0) {
    ExperimentConfig c = reference::noiseless_config(f_D, contrast, duration);
    c.acquisition.sample_rate = sample_rate;
    return Synthesizer(c).render_all();
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
    const CounterRng rng(seed, Stream::Test);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = mean + sd * rng.normal(static_cast<std::uint64_t>(i));
    return v;
}

inline TimeSeries tone(double amplitude, double freq, double phase, double duration, double rate) {
    const auto n = static_cast<Eigen::Index>(std::llround(duration * rate));
    Eigen::VectorXd x(n);
    for (Eigen::Index k = 0; k < n; ++k)
        x(k) = amplitude * std::cos(2.0 * 3.141592653589793238 * freq * static_cast<double>(k) / rate + phase);
    return TimeSeries(0.0, 1.0 / rate, std::move(x));
}

}  // namespace droplock::testing
