#pragma once

#include <cstdint>

#include "droplock/duallock.hpp"
#include "droplock/lockin.hpp"
#include "droplock/titration.hpp"
#include "droplock/types.hpp"

// Frozen reference configurations. The matched noise budget below was tuned
// once on the 34 Hz / 5.6 % reference run so the conventional ratiometric
// lock-in and the dual lock-in land at their observed spreads; every other
// run that asks for "matched noise" reuses it unchanged.
namespace droplock::reference {

inline constexpr double kDropletRate = 34.0;   // Hz
inline constexpr double kContrast = 0.056;
inline constexpr double kRateJitter = 0.5;     // Hz/sqrt(s)
inline constexpr double kLoadingSigma = 0.0023;

NoiseBudget matched_noise();

// 34 Hz sinusoidal droplet train, cosine MW at 1 kHz, matched noise,
// Brownian PL fluctuation on the ND term.
ExperimentConfig matched_config(double duration, std::uint64_t seed = 0);

// Noise-free trace with the given rate and contrast (m0 = g0 = 1).
ExperimentConfig noiseless_config(double f_D, double contrast, double duration, std::uint64_t seed = 0);

// 29 Hz, 15 s, rate jitter on: the narrow-line droplet spectrum.
ExperimentConfig line_config(std::uint64_t seed = 0);

ConventionalConfig conventional();
EstimatorConfig dual(EstimatorId id = EstimatorId::PaperMain, double f_D = kDropletRate, double delta_t = 0.7);

TitrationOptions titration(double per_point_duration, std::uint64_t seed = 0);

}  // namespace droplock::reference
