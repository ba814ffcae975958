#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace droplock {

// Shape of the droplet passage modulation P(theta).
enum class Profile { Sinusoid, Square, RaisedCosine };

// MW amplitude modulation waveform W(phi).
enum class MwWaveform { Cosine, SquareAM };

enum class EstimatorId { PaperMain, SIVariant, ExactRecovery, ConventionalLockin };

std::string to_string(Profile p);
std::string to_string(MwWaveform w);
std::string to_string(EstimatorId id);
Profile parse_profile(const std::string& s);
MwWaveform parse_waveform(const std::string& s);

struct AcquisitionConfig {
    double sample_rate = 50'000.0;  // Hz
    double duration = 15.0;         // s
    std::uint64_t rng_seed = 0;
};

struct DropletTrain {
    double f_D = 29.0;  // Hz
    Profile profile = Profile::Sinusoid;
    double duty = 0.5;           // Square only
    double edge_fraction = 0.5;  // RaisedCosine only; 1 == sinusoid, ->0 == square
    double g0 = 1.0;
    double m0 = 1.0;
    double rate_jitter_sigma = 0.0;  // Hz/sqrt(s)
    double per_droplet_sigma = 0.0;  // relative
};

struct MwModulation {
    double f_MW = 1000.0;  // Hz
    double phase = 0.0;    // rad
    double contrast = 0.056;
    MwWaveform waveform = MwWaveform::Cosine;
};

struct NoiseBudget {
    double shot_scale = 0.0;  // variance = shot_scale * instantaneous PL
    double background_b0 = 0.0;
    double background_decay_tau = 60.0;  // s
    double background_white_sigma = 0.0;
    double laser_drift_fraction = 0.0;  // peak-to-peak
    double laser_drift_period = 600.0;  // s
};

// Intra-droplet particle kinetics (2D disc, reflective wall). Lengths in um.
struct KineticsParams {
    double diffusion_coeff = 4.0;  // um^2/s
    double droplet_radius = 25.0;
    std::size_t n_particles = 100;
    double dt_step = 0.05;  // s
    double duration = 30.0; // s
    std::optional<double> heavy_tail_alpha;  // (1, 2]
};

// Optional multiplicative Brownian PL fluctuation on the ND term.
struct BrownianCoupling {
    double depth = 0.0;
    double beam_radius = 15.0;  // um
    KineticsParams kinetics;
};

struct ExperimentConfig {
    AcquisitionConfig acquisition;
    DropletTrain droplets;
    MwModulation mw;
    NoiseBudget noise;
    BrownianCoupling brownian;
};

struct ValidationIssue {
    enum class Severity { Warning, Violation };
    Severity severity;
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool empty() const { return issues.empty(); }
    // Warnings do not block synthesis; violations do.
    bool ok() const;
    std::string describe() const;
};

ValidationReport validate(const ExperimentConfig& config);
ValidationReport validate(const KineticsParams& params);

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

// Uniformly sampled trace.
template <typename Scalar>
struct BasicTimeSeries {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    double t_start = 0.0;
    double dt = 1.0;
    Vector samples;

    BasicTimeSeries() = default;
    BasicTimeSeries(double t0, double step, Vector values)
        : t_start(t0), dt(step), samples(std::move(values)) {}

    Eigen::Index size() const { return samples.size(); }
    // 1 / dt, snapped to the nearest integer rate when within rounding of it.
    double sample_rate() const {
        const double r = 1.0 / dt;
        const double whole = std::round(r);
        return std::abs(r - whole) <= 1e-9 * r ? whole : r;
    }
    double time(Eigen::Index k) const { return t_start + static_cast<double>(k) * dt; }
    double duration() const { return static_cast<double>(samples.size()) * dt; }
    double t_end() const { return t_start + duration(); }

    // dt > 0, non-empty, all finite.
    bool well_formed() const {
        return dt > 0.0 && samples.size() > 0 && samples.allFinite();
    }
};

using TimeSeries = BasicTimeSeries<double>;

// Single-sided magnitude spectrum of one analysis window.
struct SpectrumWindow {
    Eigen::Index window_index = 0;
    double t_center = 0.0;
    double delta_t = 0.0;
    double df = 0.0;                // = 1 / delta_t
    Eigen::VectorXd magnitudes;     // bins 0 .. n/2
    double mean = 0.0;              // window mean before subtraction
    Eigen::Index n_samples = 0;
    double taper_sum = 0.0;         // sum w
    double taper_sq_sum = 0.0;      // sum w^2

    double frequency(Eigen::Index bin) const { return static_cast<double>(bin) * df; }
    // Equivalent noise bandwidth of the taper, in bins.
    double enbw_bins() const {
        return static_cast<double>(n_samples) * taper_sq_sum / (taper_sum * taper_sum);
    }
};

struct ContrastSeries {
    Eigen::VectorXd times;
    Eigen::VectorXd values;
    Eigen::Array<bool, Eigen::Dynamic, 1> valid;
    EstimatorId estimator_id = EstimatorId::PaperMain;
    bool calibrated = true;
    double mean = 0.0;
    double percent_error = 0.0;  // 100 * stddev / mean over valid entries

    Eigen::Index size() const { return values.size(); }
    Eigen::Index n_valid() const { return valid.count(); }
    // Recomputes mean and percent_error from values/valid.
    void update_summary();
};

}  // namespace droplock
