#include "droplock/duallock.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "droplock/parallel.hpp"

namespace droplock {

namespace {

constexpr double kValiditySnr = 3.0;
constexpr double kMeanFloor = 1e-9;
constexpr double kRingWidth = 2.0;  // ring width in units of the band half width

// Main-lobe half width in bins: leakage of a line near the band edge stays out of the ring.
double lobe_bins(Taper taper) { return taper == Taper::Hann ? 2.0 : 1.0; }

}  // namespace

ValidationReport validate(const EstimatorConfig& cfg, double sample_rate) {
    ValidationReport report;
    auto violation = [&](const char* field, const std::string& msg) {
        report.issues.push_back({ValidationIssue::Severity::Violation, field, msg});
    };
    if (!(cfg.delta_t > 0.0)) violation("delta_t", "delta_t must be > 0");
    if (!(cfg.f_D > 0.0)) violation("f_D", "f_D must be > 0");
    if (!(cfg.f_D_half_width > 0.0) || !(cfg.mw_half_width > 0.0)) violation("bands", "half widths must be > 0");
    if (cfg.f_D - cfg.f_D_half_width <= 0.0) violation("bands", "f_D band reaches DC");
    if (cfg.f_D <= 2.0 * cfg.mw_half_width) violation("bands", "f_MW band overlaps its sidebands");
    if (cfg.f_D + cfg.f_D_half_width >= cfg.f_MW - cfg.f_D - cfg.mw_half_width)
        violation("bands", "f_D band overlaps the lower sideband");
    if (cfg.f_MW + cfg.f_D + cfg.mw_half_width >= 0.5 * sample_rate) violation("f_MW", "upper sideband beyond Nyquist");
    if (cfg.background_fraction < 0.0 || cfg.background_fraction >= 1.0)
        violation("background_fraction", "background_fraction must lie in [0, 1)");
    if (cfg.delta_t * cfg.f_D < 10.0)
        report.issues.push_back({ValidationIssue::Severity::Warning, "delta_t", "fewer than 10 droplets per window"});
    return report;
}

WindowAmplitudes measure_windows(const TimeSeries& ts, const EstimatorConfig& cfg) {
    if (const auto report = validate(cfg, ts.sample_rate()); !report.ok())
        throw std::invalid_argument(report.describe());
    const Eigen::Index n = window_samples(ts, cfg.delta_t);
    const Eigen::Index windows = ts.size() / n;
    if (windows < 1) throw std::invalid_argument("trace shorter than delta_t");

    Eigen::VectorXd f_used = Eigen::VectorXd::Constant(windows, cfg.f_D);
    if (cfg.f_D_source == FdSource::Tracked) {
        const RateTrack track = track_droplet_rate(ts, cfg.delta_t, {cfg.f_D, cfg.tracking_half_width});
        double last = cfg.f_D;
        for (Eigen::Index w = 0; w < windows; ++w) {
            if (track.valid(w)) last = track.f_D(w);
            f_used(w) = last;
        }
    }

    WindowAmplitudes a;
    a.times.resize(windows);
    a.f_D = f_used;
    a.F_D.resize(windows);
    a.F_MW.resize(windows);
    a.F_plus.resize(windows);
    a.F_minus.resize(windows);
    a.mean.resize(windows);
    a.noise_floor.resize(windows);
    a.valid.resize(windows);

    parallel_for(static_cast<std::size_t>(windows), [&](std::size_t wi) {
        const auto w = static_cast<Eigen::Index>(wi);
        const SpectrumWindow win = spectrum_of(ts.samples.segment(w * n, n), ts.dt, cfg.taper);
        const double fd = f_used(w);
        a.times(w) = ts.time(w * n) + 0.5 * win.delta_t;
        a.mean(w) = win.mean;
        a.F_D(w) = band_amplitude(win, {fd, cfg.f_D_half_width});
        a.F_MW(w) = band_amplitude(win, {cfg.f_MW, cfg.mw_half_width});
        a.F_plus(w) = band_amplitude(win, {cfg.f_MW + fd, cfg.mw_half_width});
        a.F_minus(w) = band_amplitude(win, {cfg.f_MW - fd, cfg.mw_half_width});

        // Noise-equivalent amplitude: mean ring power scaled to the band's bin count.
        const auto [lo, count] = band_bins(win, {fd, cfg.f_D_half_width});
        double ss = 0.0;
        Eigen::Index m = 0;
        const double inner = cfg.f_D_half_width + lobe_bins(cfg.taper) * win.df;
        const double outer = inner + kRingWidth * cfg.f_D_half_width;
        for (Eigen::Index k = 1; k < win.magnitudes.size(); ++k) {
            const double d = std::abs(win.frequency(k) - fd);
            if (k >= lo && k < lo + count) continue;
            if (d <= inner || d > outer) continue;
            ss += win.magnitudes(k) * win.magnitudes(k);
            ++m;
        }
        a.noise_floor(w) =
            m > 0 ? std::sqrt(ss / static_cast<double>(m) * static_cast<double>(count) / win.enbw_bins()) : 0.0;
        a.valid(w) = a.F_D(w) > kValiditySnr * a.noise_floor(w) && a.F_D(w) > kMeanFloor * std::abs(win.mean);
    });
    return a;
}

ContrastSeries contrast_from(const WindowAmplitudes& a, const EstimatorConfig& cfg) {
    ContrastSeries s;
    const Eigen::Index n = a.size();
    s.times = a.times;
    s.valid = a.valid;
    s.estimator_id = cfg.estimator_id;
    s.calibrated = cfg.estimator_id != EstimatorId::PaperMain;
    s.values.resize(n);
    for (Eigen::Index w = 0; w < n; ++w) {
        double v = 0.0;
        switch (cfg.estimator_id) {
            case EstimatorId::PaperMain:
                v = (a.F_MW(w) + a.F_plus(w) + a.F_minus(w)) / a.F_D(w) / a.f_D(w);
                break;
            case EstimatorId::SIVariant:
                v = (a.F_plus(w) + a.F_minus(w)) / (2.0 * a.F_D(w));
                break;
            case EstimatorId::ExactRecovery:
                v = (a.F_MW(w) + a.F_plus(w) + a.F_minus(w)) /
                    (a.mean(w) * (1.0 - cfg.background_fraction) + a.F_D(w));
                break;
            case EstimatorId::ConventionalLockin:
                throw std::invalid_argument("conventional lock-in is not a windowed estimator");
        }
        if (!std::isfinite(v)) {
            v = 0.0;
            s.valid(w) = false;
        }
        s.values(w) = s.valid(w) ? v : 0.0;
    }
    s.update_summary();
    return s;
}

ContrastSeries estimate_contrast(const TimeSeries& ts, const EstimatorConfig& cfg) {
    return contrast_from(measure_windows(ts, cfg), cfg);
}

double calibrate(const ContrastSeries& series, double reference_C) {
    if (series.n_valid() == 0) throw std::invalid_argument("cannot calibrate: no valid windows");
    ContrastSeries copy = series;
    copy.update_summary();
    if (!(copy.mean > 0.0)) throw std::invalid_argument("cannot calibrate: non-positive mean");
    return reference_C / copy.mean;
}

ContrastSeries apply_calibration(ContrastSeries series, double k) {
    series.values *= k;
    series.calibrated = true;
    series.update_summary();
    return series;
}

void append(ContrastSeries& a, const ContrastSeries& b) {
    if (a.size() == 0) {
        a = b;
        return;
    }
    const Eigen::Index n = a.size() + b.size();
    Eigen::VectorXd times(n), values(n);
    Eigen::Array<bool, Eigen::Dynamic, 1> valid(n);
    times << a.times, b.times;
    values << a.values, b.values;
    valid << a.valid, b.valid;
    a.times = std::move(times);
    a.values = std::move(values);
    a.valid = std::move(valid);
    a.update_summary();
}

}  // namespace droplock
