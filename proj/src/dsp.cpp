#include "droplock/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "droplock/fourier.hpp"
#include "droplock/parallel.hpp"

namespace droplock {

std::string to_string(Taper t) { return t == Taper::Hann ? "hann" : "rectangular"; }

const Eigen::VectorXd& taper_weights(Taper taper, Eigen::Index n) {
    thread_local Taper cached_taper = Taper::Rectangular;
    thread_local Eigen::VectorXd cached;
    if (cached.size() != n || cached_taper != taper) {
        cached_taper = taper;
        if (taper == Taper::Rectangular) {
            cached = Eigen::VectorXd::Ones(n);
        } else {
            cached = 0.5 - 0.5 * (Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) *
                                  (2.0 * std::numbers::pi / static_cast<double>(n)))
                                     .cos();
        }
    }
    return cached;
}

SpectrumWindow spectrum_of(const Eigen::Ref<const Eigen::VectorXd>& samples, double dt, Taper taper) {
    const Eigen::Index n = samples.size();
    if (n < 2) throw std::invalid_argument("window needs at least two samples");
    const Eigen::VectorXd& w = taper_weights(taper, n);
    SpectrumWindow win;
    win.n_samples = n;
    win.delta_t = static_cast<double>(n) * dt;
    win.df = 1.0 / win.delta_t;
    win.mean = samples.mean();
    win.taper_sum = w.sum();
    win.taper_sq_sum = w.squaredNorm();
    const Eigen::VectorXd tapered = ((samples.array() - win.mean) * w.array()).matrix();
    const Eigen::VectorXcd X = real_dft(tapered);
    win.magnitudes = X.cwiseAbs() * (2.0 / win.taper_sum);
    win.magnitudes(0) *= 0.5;
    if (n % 2 == 0) win.magnitudes(n / 2) *= 0.5;
    return win;
}

Eigen::Index window_samples(const TimeSeries& ts, double delta_t) {
    if (!(delta_t > 0.0)) throw std::invalid_argument("delta_t must be > 0");
    const auto n = static_cast<Eigen::Index>(std::llround(delta_t / ts.dt));
    if (n < 2) throw std::invalid_argument("delta_t shorter than two samples");
    return n;
}

SpectrumWindow window_spectrum(const TimeSeries& ts, double t_i, double delta_t, Taper taper) {
    const Eigen::Index n = window_samples(ts, delta_t);
    const auto first = static_cast<Eigen::Index>(std::llround((t_i - delta_t - ts.t_start) / ts.dt));
    if (first < 0 || first + n > ts.size()) throw std::out_of_range("window exceeds trace bounds");
    SpectrumWindow win = spectrum_of(ts.samples.segment(first, n), ts.dt, taper);
    win.t_center = ts.time(first) + 0.5 * win.delta_t;
    return win;
}

double spectral_energy(const SpectrumWindow& win) {
    const Eigen::Index n = win.n_samples;
    const Eigen::Index last = win.magnitudes.size() - 1;
    const double m0 = win.magnitudes(0);
    double acc = m0 * m0;
    if (n % 2 == 0) {
        acc += win.magnitudes(last) * win.magnitudes(last);
        acc += 0.5 * win.magnitudes.segment(1, last - 1).squaredNorm();
    } else {
        acc += 0.5 * win.magnitudes.tail(last).squaredNorm();
    }
    return win.taper_sum * win.taper_sum / static_cast<double>(n) * acc;
}

std::pair<Eigen::Index, Eigen::Index> band_bins(const SpectrumWindow& win, const BandSpec& band) {
    const double nyquist = win.frequency(win.magnitudes.size() - 1);
    if (!(band.half_width > 0.0)) throw std::invalid_argument("band half_width must be > 0");
    if (band.center - band.half_width < 0.0 || band.center + band.half_width > nyquist * (1.0 + 1e-12))
        throw std::invalid_argument("band outside (0, Nyquist)");
    // Small slack so a bin exactly on the band edge is kept despite rounding.
    const double eps = 1e-9 * win.df;
    const auto lo = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::ceil((band.center - band.half_width - eps) / win.df)));
    const auto hi = std::min<Eigen::Index>(
        win.magnitudes.size() - 1, static_cast<Eigen::Index>(std::floor((band.center + band.half_width + eps) / win.df)));
    return {lo, std::max<Eigen::Index>(hi - lo + 1, 0)};
}

double band_amplitude(const SpectrumWindow& win, const BandSpec& band) {
    const auto [lo, count] = band_bins(win, band);
    if (count == 0) return 0.0;
    return std::sqrt(win.magnitudes.segment(lo, count).squaredNorm() / win.enbw_bins());
}

Eigen::VectorXd lorentzian(const Eigen::VectorXd& f, const LorentzianFit& p) {
    const double g = 0.5 * p.fwhm;
    return (p.height / (1.0 + ((f.array() - p.center) / g).square()) + p.baseline).matrix();
}

namespace {

// Parameters: height, center, half width at half maximum, baseline.
struct LorentzFunctor : Eigen::DenseFunctor<double> {
    Eigen::VectorXd f;
    Eigen::VectorXd y;

    LorentzFunctor(Eigen::VectorXd freqs, Eigen::VectorXd values)
        : Eigen::DenseFunctor<double>(4, static_cast<int>(freqs.size())), f(std::move(freqs)), y(std::move(values)) {}

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
        const Eigen::ArrayXd u = (f.array() - p(1)) / p(2);
        r = (p(0) / (1.0 + u.square()) + p(3) - y.array()).matrix();
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
        const Eigen::ArrayXd u = (f.array() - p(1)) / p(2);
        const Eigen::ArrayXd d = 1.0 / (1.0 + u.square());
        J.resize(f.size(), 4);
        J.col(0) = d.matrix();
        J.col(1) = (p(0) * d.square() * 2.0 * u / p(2)).matrix();
        J.col(2) = (p(0) * d.square() * 2.0 * u.square() / p(2)).matrix();
        J.col(3).setOnes();
        return 0;
    }
};

}  // namespace

LorentzianFit fit_lorentzian(const SpectrumWindow& win, const BandSpec& band, int max_iterations) {
    const auto [lo, count] = band_bins(win, band);
    if (count < 7) throw std::invalid_argument("fit_lorentzian needs at least 7 bins in band");
    Eigen::VectorXd f(count);
    for (Eigen::Index i = 0; i < count; ++i) f(i) = win.frequency(lo + i);
    const Eigen::VectorXd y = win.magnitudes.segment(lo, count);

    Eigen::Index peak = 0;
    const double ymax = y.maxCoeff(&peak);
    const double ymin = y.minCoeff();
    LorentzianFit guess;
    guess.center = f(peak);
    guess.height = ymax - ymin;
    guess.baseline = ymin;
    if (!(guess.height > 1e-12 * std::max(std::abs(ymax), std::numeric_limits<double>::min())))
        throw FitError("flat spectrum: no peak to fit", guess);
    // Width from the number of bins above half maximum.
    const auto above = ((y.array() - ymin) >= 0.5 * guess.height).count();
    guess.fwhm = std::max(static_cast<double>(above), 1.0) * win.df;

    LorentzFunctor functor(f, y);
    Eigen::VectorXd p(4);
    p << guess.height, guess.center, 0.5 * guess.fwhm, guess.baseline;
    Eigen::LevenbergMarquardt<LorentzFunctor> lm(functor);
    lm.setMaxfev(max_iterations);
    const auto status = lm.minimize(p);

    LorentzianFit fit;
    fit.height = p(0);
    fit.center = p(1);
    fit.fwhm = 2.0 * std::abs(p(2));
    fit.baseline = p(3);
    fit.iterations = static_cast<int>(lm.iterations());
    Eigen::VectorXd r(count);
    functor(p, r);
    fit.residual_norm = r.norm();

    using Status = Eigen::LevenbergMarquardtSpace::Status;
    if (status == Status::TooManyFunctionEvaluation || status == Status::ImproperInputParameters)
        throw FitError("Lorentzian fit did not converge", fit);
    if (!p.allFinite() || fit.height <= 0.0 || fit.center < f(0) || fit.center > f(count - 1))
        throw FitError("Lorentzian fit left the band", fit);
    const double flat_residual = (y.array() - y.mean()).matrix().norm();
    if (fit.residual_norm >= 0.9 * flat_residual) throw FitError("Lorentzian fit no better than a constant", fit);
    return fit;
}

RateTrack track_droplet_rate(const TimeSeries& ts, double delta_t, const BandSpec& search_band) {
    const Eigen::Index n = window_samples(ts, delta_t);
    const Eigen::Index windows = ts.size() / n;
    RateTrack track;
    track.times.resize(windows);
    track.f_D.resize(windows);
    track.snr.resize(windows);
    track.valid.resize(windows);

    parallel_for(static_cast<std::size_t>(windows), [&](std::size_t wi) {
        const auto w = static_cast<Eigen::Index>(wi);
        const SpectrumWindow win = spectrum_of(ts.samples.segment(w * n, n), ts.dt, Taper::Hann);
        track.times(w) = ts.time(w * n) + 0.5 * win.delta_t;
        const auto [lo, count] = band_bins(win, search_band);
        if (count < 1) throw std::invalid_argument("search band contains no bins");
        Eigen::Index rel = 0;
        const double peak = win.magnitudes.segment(lo, count).maxCoeff(&rel);
        const Eigen::Index k = lo + rel;

        double offset = 0.0;
        if (k >= 1 && k + 1 < win.magnitudes.size()) {
            constexpr double tiny = 1e-300;
            const double a = std::log(std::max(win.magnitudes(k - 1), tiny));
            const double b = std::log(std::max(win.magnitudes(k), tiny));
            const double c = std::log(std::max(win.magnitudes(k + 1), tiny));
            const double denom = a - 2.0 * b + c;
            if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
        }
        track.f_D(w) = (static_cast<double>(k) + offset) * win.df;

        double ss = 0.0;
        Eigen::Index m = 0;
        for (Eigen::Index i = lo; i < lo + count; ++i) {
            if (std::abs(i - k) <= 2) continue;
            ss += win.magnitudes(i) * win.magnitudes(i);
            ++m;
        }
        const double floor_rms = m > 0 ? std::sqrt(ss / static_cast<double>(m)) : 0.0;
        track.snr(w) = floor_rms > 0.0 ? peak / floor_rms : (peak > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        track.valid(w) = m > 0 && track.snr(w) >= kRateSnrThreshold;
    });
    return track;
}

Eigen::VectorXd Spectrogram::band_series(std::size_t b) const {
    return (band_magnitudes.at(b).rowwise().squaredNorm() / enbw_bins).cwiseSqrt();
}

Spectrogram compute_spectrogram(const TimeSeries& ts, double delta_t, const std::vector<BandSpec>& bands, Taper taper) {
    const Eigen::Index n = window_samples(ts, delta_t);
    const Eigen::Index windows = ts.size() / n;
    if (windows < 1) throw std::invalid_argument("trace shorter than one window");

    Spectrogram sg;
    sg.delta_t = static_cast<double>(n) * ts.dt;
    sg.df = 1.0 / sg.delta_t;
    sg.taper = taper;
    sg.bands = bands;
    sg.t_centers.resize(windows);
    sg.window_means.resize(windows);

    // Layout from the first window; every window has identical bins.
    const SpectrumWindow probe = spectrum_of(ts.samples.head(n), ts.dt, taper);
    sg.enbw_bins = probe.enbw_bins();
    std::vector<Eigen::Index> counts;
    for (const auto& band : bands) {
        const auto [lo, count] = band_bins(probe, band);
        sg.first_bin.push_back(lo);
        counts.push_back(count);
        sg.band_magnitudes.emplace_back(windows, count);
    }

    parallel_for(static_cast<std::size_t>(windows), [&](std::size_t wi) {
        const auto w = static_cast<Eigen::Index>(wi);
        const SpectrumWindow win = spectrum_of(ts.samples.segment(w * n, n), ts.dt, taper);
        sg.t_centers(w) = ts.time(w * n) + 0.5 * sg.delta_t;
        sg.window_means(w) = win.mean;
        for (std::size_t b = 0; b < bands.size(); ++b)
            sg.band_magnitudes[b].row(w) = win.magnitudes.segment(sg.first_bin[b], counts[b]).transpose();
    });
    return sg;
}

void append(Spectrogram& dst, const Spectrogram& src) {
    if (dst.n_windows() == 0) {
        dst = src;
        return;
    }
    if (std::abs(dst.delta_t - src.delta_t) > 1e-12 * dst.delta_t || dst.first_bin != src.first_bin)
        throw std::invalid_argument("spectrogram layouts differ");
    auto cat = [](Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        Eigen::VectorXd out(a.size() + b.size());
        out << a, b;
        a = std::move(out);
    };
    cat(dst.t_centers, src.t_centers);
    cat(dst.window_means, src.window_means);
    for (std::size_t b = 0; b < dst.band_magnitudes.size(); ++b) {
        Eigen::MatrixXd out(dst.band_magnitudes[b].rows() + src.band_magnitudes[b].rows(), dst.band_magnitudes[b].cols());
        out << dst.band_magnitudes[b], src.band_magnitudes[b];
        dst.band_magnitudes[b] = std::move(out);
    }
}

void write_spectrogram_csv(std::ostream& os, const Spectrogram& sg) {
    os << "t_center,frequency,magnitude\n";
    os.precision(17);
    for (Eigen::Index w = 0; w < sg.n_windows(); ++w)
        for (std::size_t b = 0; b < sg.bands.size(); ++b)
            for (Eigen::Index i = 0; i < sg.band_magnitudes[b].cols(); ++i)
                os << sg.t_centers(w) << ',' << static_cast<double>(sg.first_bin[b] + i) * sg.df << ','
                   << sg.band_magnitudes[b](w, i) << '\n';
}

}  // namespace droplock
