#include "droplock/lockin.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace droplock {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSettlingConstants = 5.0;
constexpr double kPlFloor = 1e-9;

double one_pole_alpha(double tau, double dt) { return tau > 0.0 ? 1.0 - std::exp(-dt / tau) : 1.0; }

}  // namespace

void validate(const DemodConfig& cfg, double sample_rate) {
    if (!(cfg.time_constant > 0.0)) throw std::invalid_argument("time_constant must be > 0");
    if (cfg.filter_order < 1 || cfg.filter_order > 4) throw std::invalid_argument("filter_order must be in 1..4");
    if (!(cfg.reference_freq > 0.0) || cfg.reference_freq >= 0.5 * sample_rate)
        throw std::invalid_argument("reference_freq must lie in (0, Nyquist)");
}

double filter_gain(const DemodConfig& cfg, double offset_hz, double dt) {
    const double a = one_pole_alpha(cfg.time_constant, dt);
    const std::complex<double> z = std::polar(1.0, -kTwoPi * offset_hz * dt);
    const double stage = std::abs(a / (1.0 - (1.0 - a) * z));
    return std::pow(stage, cfg.filter_order);
}

Eigen::Index settling_samples(double time_constant, double dt) {
    return static_cast<Eigen::Index>(std::ceil(kSettlingConstants * time_constant / dt));
}

TimeSeries Quadratures::magnitude() const {
    return TimeSeries(in_phase.t_start, in_phase.dt,
                      (in_phase.samples.array().square() + quadrature.samples.array().square()).sqrt().matrix());
}

Demodulator::Demodulator(DemodConfig cfg, double sample_rate, double pl_smooth_tau)
    : cfg_(cfg),
      dt_(1.0 / sample_rate),
      alpha_(one_pole_alpha(cfg.time_constant, 1.0 / sample_rate)),
      pl_alpha_(one_pole_alpha(pl_smooth_tau, 1.0 / sample_rate)),
      i_state_(static_cast<std::size_t>(cfg.filter_order), 0.0),
      q_state_(static_cast<std::size_t>(cfg.filter_order), 0.0),
      pl_state_(static_cast<std::size_t>(cfg.filter_order), 0.0) {
    validate(cfg_, sample_rate);
    if (pl_smooth_tau < 0.0) throw std::invalid_argument("pl_smooth_tau must be >= 0");
}

void Demodulator::process(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> i_out,
                          Eigen::Ref<Eigen::VectorXd> q_out, Eigen::Ref<Eigen::VectorXd> pl_out) {
    const double f_dt = cfg_.reference_freq * dt_;
    const auto order = static_cast<std::size_t>(cfg_.filter_order);
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        const double v = x(n);
        if (counter_ == 0) {
            // Start the PL smoother at the first sample rather than at zero.
            for (auto& s : pl_state_) s = v;
        }
        const double cycles = f_dt * static_cast<double>(counter_);
        const double phase = kTwoPi * (cycles - std::floor(cycles));
        double in = v * std::cos(phase);
        double qu = v * std::sin(phase);
        double pl = v;
        for (std::size_t s = 0; s < order; ++s) {
            i_state_[s] += alpha_ * (in - i_state_[s]);
            q_state_[s] += alpha_ * (qu - q_state_[s]);
            pl_state_[s] += pl_alpha_ * (pl - pl_state_[s]);
            in = i_state_[s];
            qu = q_state_[s];
            pl = pl_state_[s];
        }
        i_out(n) = in;
        q_out(n) = qu;
        pl_out(n) = pl;
        sum_ += v;
        ++counter_;
    }
}

Quadratures demodulate_iq(const TimeSeries& ts, const DemodConfig& cfg) {
    Demodulator demod(cfg, ts.sample_rate());
    Quadratures out;
    out.in_phase = TimeSeries(ts.t_start, ts.dt, Eigen::VectorXd(ts.size()));
    out.quadrature = TimeSeries(ts.t_start, ts.dt, Eigen::VectorXd(ts.size()));
    Eigen::VectorXd pl(ts.size());
    demod.process(ts.samples, out.in_phase.samples, out.quadrature.samples, pl);
    out.settling = settling_samples(cfg.time_constant, ts.dt);
    return out;
}

TimeSeries demodulate(const TimeSeries& ts, const DemodConfig& cfg) { return demodulate_iq(ts, cfg).magnitude(); }

RatiometricContrast::RatiometricContrast(ConventionalConfig cfg, double sample_rate, double t_start)
    : cfg_(cfg),
      dt_(1.0 / sample_rate),
      t_start_(t_start),
      demod_(cfg.demod, sample_rate, cfg.pl_smooth_tau) {
    if (!(cfg_.decimation >= dt_)) throw std::invalid_argument("decimation interval shorter than one sample");
    settle_ = settling_samples(std::max(cfg_.demod.time_constant, cfg_.pl_smooth_tau), dt_);
}

void RatiometricContrast::process(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::Index n = x.size();
    if (i_buf_.size() < n) {
        i_buf_.resize(n);
        q_buf_.resize(n);
        pl_buf_.resize(n);
    }
    const Eigen::Index first = demod_.samples_seen();
    demod_.process(x, i_buf_.head(n), q_buf_.head(n), pl_buf_.head(n));
    const double floor = kPlFloor * std::abs(demod_.running_mean());
    for (;;) {
        const auto k = static_cast<Eigen::Index>(
                           std::llround(static_cast<double>(next_emit_) * cfg_.decimation / dt_)) - 1;
        if (k >= first + n) break;
        ++next_emit_;
        if (k < settle_ || k < first) continue;
        const Eigen::Index j = k - first;
        const double r = std::hypot(i_buf_(j), q_buf_(j));
        const double pl = pl_buf_(j);
        const bool ok = pl > floor && pl > 0.0;
        times_.push_back(t_start_ + static_cast<double>(k) * dt_);
        values_.push_back(ok ? 2.0 * r / pl : 0.0);
        valid_.push_back(ok);
    }
}

ContrastSeries RatiometricContrast::result() const {
    ContrastSeries s;
    const auto n = static_cast<Eigen::Index>(values_.size());
    s.times = Eigen::Map<const Eigen::VectorXd>(times_.data(), n);
    s.values = Eigen::Map<const Eigen::VectorXd>(values_.data(), n);
    s.valid.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) s.valid(i) = valid_[static_cast<std::size_t>(i)];
    s.estimator_id = EstimatorId::ConventionalLockin;
    s.calibrated = true;
    s.update_summary();
    return s;
}

ContrastSeries ratiometric_contrast(const TimeSeries& ts, const DemodConfig& cfg, double pl_smooth_tau,
                                    double decimation) {
    RatiometricContrast rc(ConventionalConfig{cfg, pl_smooth_tau, decimation}, ts.sample_rate(), ts.t_start);
    rc.process(ts.samples);
    return rc.result();
}

}  // namespace droplock
