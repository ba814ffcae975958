#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "droplock/types.hpp"

namespace droplock::brownian {

// Positions in um; row p holds particle p, column k is time k * dt_step.
struct TrajectoryEnsemble {
    double dt_step = 0.0;
    double droplet_radius = 0.0;
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;

    Eigen::Index n_particles() const { return x.rows(); }
    Eigen::Index n_steps() const { return x.cols(); }
};

struct Histogram {
    Eigen::VectorXd edges;   // n_bins + 1
    Eigen::VectorXi counts;  // n_bins
};

// Reflective 2D disc random walk. Gaussian steps unless heavy_tail_alpha is set,
// in which case each axis takes symmetric alpha-stable steps (scale sqrt(D dt))
// and the step vector is truncated at the droplet diameter. Particle p draws from
// its own counter substream, so results do not depend on thread scheduling.
// Throws std::invalid_argument if params are invalid or the rms step
// sqrt(4 D dt) exceeds the droplet radius ("time step too coarse").
TrajectoryEnsemble simulate(const KineticsParams& params, std::uint64_t seed);

// |r(t + lag) - r(t)| pooled over particles and every start index.
Eigen::VectorXd displacements(const TrajectoryEnsemble& ensemble, double lag);

// Histogram of displacements on [0, max]. A stationary ensemble yields a single
// occupied bin at zero.
Histogram displacement_histogram(const TrajectoryEnsemble& ensemble, double lag, int n_bins);

// Ensemble-mean squared displacement for lags 1..max_lag_steps (in steps).
Eigen::VectorXd mean_squared_displacement(const TrajectoryEnsemble& ensemble, Eigen::Index max_lag_steps);

// Sum of Gaussian beam weights exp(-|r|^2 / (2 w^2)) at the native step rate,
// normalized to mean 1. Requires beam_radius <= droplet radius.
TimeSeries fluorescence_profile(const TrajectoryEnsemble& ensemble, double beam_radius);

// fluorescence_profile linearly resampled to sample_rate and re-normalized to mean 1.
TimeSeries fluorescence_trace(const TrajectoryEnsemble& ensemble, double beam_radius, double sample_rate);

// CSV: particle_id,t,x_um,y_um
void write_trajectories_csv(std::ostream& os, const TrajectoryEnsemble& ensemble);
void write_histogram_csv(std::ostream& os, const Histogram& histogram);

}  // namespace droplock::brownian
