#include "droplock/types.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "droplock/stats.hpp"

namespace droplock {

std::string to_string(Profile p) {
    switch (p) {
        case Profile::Sinusoid: return "sinusoid";
        case Profile::Square: return "square";
        case Profile::RaisedCosine: return "raised_cosine";
    }
    return "?";
}

std::string to_string(MwWaveform w) {
    return w == MwWaveform::Cosine ? "cosine" : "square_am";
}

std::string to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::PaperMain: return "paper";
        case EstimatorId::SIVariant: return "si";
        case EstimatorId::ExactRecovery: return "exact";
        case EstimatorId::ConventionalLockin: return "conventional";
    }
    return "?";
}

Profile parse_profile(const std::string& s) {
    if (s == "sinusoid") return Profile::Sinusoid;
    if (s == "square") return Profile::Square;
    if (s == "raised_cosine") return Profile::RaisedCosine;
    throw std::invalid_argument("unknown droplet profile '" + s + "'");
}

MwWaveform parse_waveform(const std::string& s) {
    if (s == "cosine") return MwWaveform::Cosine;
    if (s == "square_am") return MwWaveform::SquareAM;
    throw std::invalid_argument("unknown MW waveform '" + s + "'");
}

bool ValidationReport::ok() const {
    for (const auto& issue : issues)
        if (issue.severity == ValidationIssue::Severity::Violation) return false;
    return true;
}

std::string ValidationReport::describe() const {
    std::ostringstream os;
    for (const auto& issue : issues) {
        os << (issue.severity == ValidationIssue::Severity::Violation ? "violation" : "warning")
           << ": " << issue.field << ": " << issue.message << '\n';
    }
    return os.str();
}

ConfigError::ConfigError(ValidationReport report)
    : std::runtime_error("invalid configuration:\n" + report.describe()), report_(std::move(report)) {}

namespace {

struct ReportBuilder {
    ValidationReport report;

    void violation(std::string field, std::string msg) {
        report.issues.push_back({ValidationIssue::Severity::Violation, std::move(field), std::move(msg)});
    }
    void warning(std::string field, std::string msg) {
        report.issues.push_back({ValidationIssue::Severity::Warning, std::move(field), std::move(msg)});
    }
    void require(bool cond, const char* field, const char* msg) {
        if (!cond) violation(field, msg);
    }
};

void check_kinetics(ReportBuilder& b, const KineticsParams& k) {
    b.require(std::isfinite(k.diffusion_coeff) && k.diffusion_coeff >= 0.0, "kinetics.diffusion_coeff",
              "must be >= 0");
    b.require(std::isfinite(k.droplet_radius) && k.droplet_radius > 0.0, "kinetics.droplet_radius",
              "must be > 0");
    b.require(k.n_particles >= 1, "kinetics.n_particles", "must be >= 1");
    b.require(std::isfinite(k.dt_step) && k.dt_step > 0.0, "kinetics.dt_step", "must be > 0");
    b.require(std::isfinite(k.duration) && k.duration > 0.0, "kinetics.duration", "must be > 0");
    if (k.heavy_tail_alpha) {
        const double a = *k.heavy_tail_alpha;
        b.require(a > 1.0 && a <= 2.0, "kinetics.heavy_tail_alpha", "must lie in (1, 2]");
    }
}

}  // namespace

ValidationReport validate(const KineticsParams& params) {
    ReportBuilder b;
    check_kinetics(b, params);
    return b.report;
}

ValidationReport validate(const ExperimentConfig& config) {
    ReportBuilder b;
    const auto& acq = config.acquisition;
    const auto& drop = config.droplets;
    const auto& mw = config.mw;
    const auto& noise = config.noise;

    b.require(std::isfinite(acq.sample_rate) && acq.sample_rate > 0.0, "sample_rate", "must be > 0");
    b.require(std::isfinite(acq.duration) && acq.duration > 0.0, "duration", "must be > 0");
    if (acq.sample_rate > 0.0 && acq.duration > 0.0) {
        const double n = acq.sample_rate * acq.duration;
        b.require(n < static_cast<double>(std::numeric_limits<Eigen::Index>::max()) && n < 0x1p53,
                  "duration", "duration x sample_rate exceeds the addressable sample range");
    }

    b.require(std::isfinite(drop.f_D) && drop.f_D > 0.0, "f_D", "must be > 0");
    if (drop.f_D > 0.0 && (drop.f_D < 1.0 || drop.f_D > 1000.0))
        b.warning("f_D", "outside the demonstrated range [1, 1000] Hz");
    if (drop.profile == Profile::Square)
        b.require(drop.duty > 0.0 && drop.duty < 1.0, "duty", "must lie in (0, 1)");
    if (drop.profile == Profile::RaisedCosine)
        b.require(drop.edge_fraction > 0.0 && drop.edge_fraction <= 1.0, "edge_fraction",
                  "must lie in (0, 1]");
    b.require(std::isfinite(drop.g0) && drop.g0 >= 0.0, "g0", "must be >= 0");
    b.require(std::isfinite(drop.m0) && drop.m0 >= 0.0, "m0", "must be >= 0");
    b.require(std::isfinite(drop.rate_jitter_sigma) && drop.rate_jitter_sigma >= 0.0, "rate_jitter_sigma",
              "must be >= 0");
    b.require(drop.per_droplet_sigma >= 0.0 && drop.per_droplet_sigma <= 0.1, "per_droplet_sigma",
              "must lie in [0, 0.1]");
    if (drop.f_D > 0.0 && drop.rate_jitter_sigma >= 0.0)
        b.require(drop.f_D - 3.0 * drop.rate_jitter_sigma > 0.0, "rate_jitter_sigma",
                  "jitter band f_D +- 3 sigma must stay above 0 Hz");

    b.require(std::isfinite(mw.f_MW) && mw.f_MW > 0.0, "f_MW", "must be > 0");
    b.require(std::isfinite(mw.phase), "phase", "must be finite");
    b.require(mw.contrast >= 0.0 && mw.contrast <= 1.0, "contrast", "must lie in [0, 1]");
    if (mw.contrast > 0.2 && mw.contrast <= 1.0) b.warning("contrast", "above 0.2 is outside the usual ODMR range");
    if (drop.f_D > 0.0 && mw.f_MW > 0.0 && mw.f_MW < 10.0 * drop.f_D)
        b.violation("f_MW", "f_MW must be >= 10 x f_D");
    if (acq.sample_rate > 0.0 && mw.f_MW > 0.0 && acq.sample_rate < 10.0 * mw.f_MW)
        b.violation("sample_rate", "sample_rate must be >= 10 x f_MW");

    b.require(noise.shot_scale >= 0.0, "shot_scale", "must be >= 0");
    b.require(noise.background_b0 >= 0.0, "background_b0", "must be >= 0");
    b.require(noise.background_decay_tau >= 0.0, "background_decay_tau", "must be >= 0");
    if (noise.background_b0 > 0.0)
        b.require(noise.background_decay_tau > 0.0, "background_decay_tau", "must be > 0 when background_b0 > 0");
    b.require(noise.background_white_sigma >= 0.0, "background_white_sigma", "must be >= 0");
    b.require(noise.laser_drift_fraction >= 0.0 && noise.laser_drift_fraction < 2.0, "laser_drift_fraction",
              "must lie in [0, 2)");
    b.require(noise.laser_drift_period >= 0.0, "laser_drift_period", "must be >= 0");
    if (noise.laser_drift_fraction > 0.0)
        b.require(noise.laser_drift_period > 0.0, "laser_drift_period", "must be > 0 when drift is enabled");

    const auto& br = config.brownian;
    b.require(br.depth >= 0.0 && br.depth <= 1.0, "brownian_depth", "must lie in [0, 1]");
    if (br.depth > 0.0) {
        check_kinetics(b, br.kinetics);
        b.require(br.beam_radius > 0.0 && br.beam_radius <= br.kinetics.droplet_radius, "beam_radius",
                  "must lie in (0, droplet_radius]");
    }
    return b.report;
}

void ContrastSeries::update_summary() {
    auto s = masked_mean_std(values, valid);
    mean = s.mean;
    percent_error = (s.count > 1 && mean != 0.0) ? 100.0 * s.stddev / mean : 0.0;
}

}  // namespace droplock
