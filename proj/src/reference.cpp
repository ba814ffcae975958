#include "droplock/reference.hpp"

namespace droplock::reference {

NoiseBudget matched_noise() {
    NoiseBudget n;
    n.shot_scale = 1.2e-3;
    n.background_b0 = 1.4;
    n.background_decay_tau = 600.0;
    n.background_white_sigma = 0.04;
    n.laser_drift_fraction = 0.0;
    n.laser_drift_period = 600.0;
    return n;
}

ExperimentConfig matched_config(double duration, std::uint64_t seed) {
    ExperimentConfig c;
    c.acquisition.duration = duration;
    c.acquisition.rng_seed = seed;
    c.droplets.f_D = kDropletRate;
    c.droplets.rate_jitter_sigma = kRateJitter;
    c.droplets.per_droplet_sigma = kLoadingSigma;
    c.mw.contrast = kContrast;
    c.noise = matched_noise();
    c.brownian.depth = 0.3;
    return c;
}

ExperimentConfig noiseless_config(double f_D, double contrast, double duration, std::uint64_t seed) {
    ExperimentConfig c;
    c.acquisition.duration = duration;
    c.acquisition.rng_seed = seed;
    c.droplets.f_D = f_D;
    c.mw.contrast = contrast;
    return c;
}

ExperimentConfig line_config(std::uint64_t seed) {
    ExperimentConfig c = noiseless_config(29.0, kContrast, 15.0, seed);
    c.droplets.rate_jitter_sigma = kRateJitter;
    return c;
}

ConventionalConfig conventional() {
    ConventionalConfig c;
    c.demod.reference_freq = 1000.0;
    c.demod.time_constant = 0.03;
    c.demod.filter_order = 2;
    c.pl_smooth_tau = 0.03;
    c.decimation = 0.1;
    return c;
}

EstimatorConfig dual(EstimatorId id, double f_D, double delta_t) {
    EstimatorConfig e;
    e.estimator_id = id;
    e.f_D = f_D;
    e.f_MW = 1000.0;
    e.delta_t = delta_t;
    return e;
}

TitrationOptions titration(double per_point_duration, std::uint64_t seed) {
    TitrationOptions t;
    t.config_template = matched_config(per_point_duration, seed);
    t.per_point_duration = per_point_duration;
    t.settling_gap = 5.0;
    t.estimator = dual(EstimatorId::PaperMain);
    return t;
}

}  // namespace droplock::reference
