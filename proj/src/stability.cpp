#include "droplock/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/LevenbergMarquardt>

namespace droplock {

namespace {

constexpr Eigen::Index kMinBlocks = 3;
constexpr Eigen::Index kMinHistogramPoints = 100;
constexpr Eigen::Index kMinVariationBins = 10;

Eigen::VectorXd uniform_values(const ContrastSeries& s, GapPolicy gaps) {
    const Eigen::Index n = s.size();
    if (s.n_valid() == 0) throw std::invalid_argument("series has no valid entries");
    Eigen::VectorXd y = s.values;
    if (s.n_valid() == n) return y;
    if (gaps == GapPolicy::Reject) throw std::invalid_argument("series has invalid entries");
    Eigen::Index prev = -1;
    for (Eigen::Index i = 0; i <= n; ++i) {
        if (i < n && !s.valid(i)) continue;
        // Fill the gap (prev, i) from its valid neighbours.
        for (Eigen::Index j = prev + 1; j < i; ++j) {
            if (prev < 0)
                y(j) = s.values(i);
            else if (i == n)
                y(j) = s.values(prev);
            else {
                const double w = static_cast<double>(j - prev) / static_cast<double>(i - prev);
                y(j) = s.values(prev) * (1.0 - w) + s.values(i) * w;
            }
        }
        prev = i;
    }
    return y;
}

struct GaussFunctor : Eigen::DenseFunctor<double> {
    Eigen::VectorXd x;
    Eigen::VectorXd y;

    GaussFunctor(Eigen::VectorXd xs, Eigen::VectorXd ys)
        : Eigen::DenseFunctor<double>(3, static_cast<int>(xs.size())), x(std::move(xs)), y(std::move(ys)) {}

    // p = amplitude, mu, sigma
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
        r = (p(0) * (-0.5 * ((x.array() - p(1)) / p(2)).square()).exp() - y.array()).matrix();
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
        const Eigen::ArrayXd u = (x.array() - p(1)) / p(2);
        const Eigen::ArrayXd g = (-0.5 * u.square()).exp();
        J.resize(x.size(), 3);
        J.col(0) = g.matrix();
        J.col(1) = (p(0) * g * u / p(2)).matrix();
        J.col(2) = (p(0) * g * u.square() / p(2)).matrix();
        return 0;
    }
};

}  // namespace

AllanCurve allan_deviation(const Eigen::Ref<const Eigen::VectorXd>& y, double tau0, const Eigen::VectorXd& taus,
                           AllanKind kind) {
    if (!(tau0 > 0.0)) throw std::invalid_argument("tau0 must be > 0");
    const Eigen::Index n = y.size();
    // Prefix sums make every block mean O(1).
    Eigen::VectorXd prefix(n + 1);
    prefix(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) + y(i);

    std::vector<Eigen::Index> ms;
    for (const double tau : taus) {
        const auto m = static_cast<Eigen::Index>(std::llround(tau / tau0));
        if (m < 2 || n / m < kMinBlocks) continue;
        if (!ms.empty() && m <= ms.back()) continue;
        ms.push_back(m);
    }

    AllanCurve curve;
    const auto count = static_cast<Eigen::Index>(ms.size());
    curve.taus.resize(count);
    curve.deviations.resize(count);
    curve.n_terms.resize(count);
    for (Eigen::Index c = 0; c < count; ++c) {
        const Eigen::Index m = ms[static_cast<std::size_t>(c)];
        const double inv_m = 1.0 / static_cast<double>(m);
        double ss = 0.0;
        Eigen::Index terms = 0;
        const Eigen::Index stride = kind == AllanKind::Overlapping ? 1 : m;
        for (Eigen::Index k = 0; k + 2 * m <= n; k += stride) {
            const double a = (prefix(k + m) - prefix(k)) * inv_m;
            const double b = (prefix(k + 2 * m) - prefix(k + m)) * inv_m;
            ss += (b - a) * (b - a);
            ++terms;
        }
        curve.taus(c) = static_cast<double>(m) * tau0;
        curve.deviations(c) = std::sqrt(0.5 * ss / static_cast<double>(terms));
        curve.n_terms(c) = static_cast<int>(terms);
    }
    return curve;
}

AllanCurve allan_deviation(const ContrastSeries& series, const Eigen::VectorXd& taus, const AllanOptions& options) {
    if (series.size() < 2) throw std::invalid_argument("series too short");
    const Eigen::VectorXd diffs = series.times.tail(series.size() - 1) - series.times.head(series.size() - 1);
    const double tau0 = diffs.mean();
    if (!(tau0 > 0.0) || ((diffs.array() - tau0).abs() > 1e-6 * tau0).any())
        throw std::invalid_argument("series is not uniformly sampled");
    Eigen::VectorXd y = uniform_values(series, options.gaps);
    if (options.fractional) {
        const double mean = y.mean();
        if (mean == 0.0) throw std::invalid_argument("fractional Allan deviation of a zero-mean series");
        y /= mean;
    }
    return allan_deviation(y, tau0, taus, options.kind);
}

Eigen::VectorXd log_spaced(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw std::invalid_argument("bad log_spaced range");
    const double decades = std::log10(hi / lo);
    const auto n = static_cast<Eigen::Index>(std::floor(decades * per_decade + 1e-9)) + 1;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = lo * std::pow(10.0, static_cast<double>(i) / per_decade);
    return out;
}

LineFit allan_slope(const AllanCurve& curve, double tau_lo, double tau_hi) {
    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < curve.size(); ++i) {
        const double tau = curve.taus(i);
        if (tau < tau_lo * (1.0 - 1e-9) || tau > tau_hi * (1.0 + 1e-9) || !(curve.deviations(i) > 0.0)) continue;
        xs.push_back(std::log10(tau));
        ys.push_back(std::log10(curve.deviations(i)));
    }
    if (xs.size() < 2) throw std::invalid_argument("fewer than two Allan points in the fit range");
    const auto n = static_cast<Eigen::Index>(xs.size());
    return fit_line(Eigen::Map<const Eigen::VectorXd>(xs.data(), n), Eigen::Map<const Eigen::VectorXd>(ys.data(), n));
}

double deviation_at(const AllanCurve& curve, double tau) {
    if (curve.size() == 0) throw std::invalid_argument("empty Allan curve");
    Eigen::Index best = 0;
    (curve.taus.array().log() - std::log(tau)).abs().minCoeff(&best);
    return curve.deviations(best);
}

GaussianFit histogram_fit(const ContrastSeries& series, int n_bins) {
    if (n_bins < 3) throw std::invalid_argument("n_bins must be >= 3");
    if (series.n_valid() < kMinHistogramPoints) throw std::invalid_argument("histogram_fit needs >= 100 valid points");
    std::vector<double> v;
    for (Eigen::Index i = 0; i < series.size(); ++i)
        if (series.valid(i)) v.push_back(series.values(i));
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    GaussianFit fit;
    if (hi == lo) {
        fit.mu = lo;
        fit.sigma = 0.0;
        fit.amplitude = static_cast<double>(v.size());
    } else {
        const double width = (hi - lo) / n_bins;
        Eigen::VectorXd centers(n_bins), counts = Eigen::VectorXd::Zero(n_bins);
        for (int b = 0; b < n_bins; ++b) centers(b) = lo + (b + 0.5) * width;
        for (const double x : v) counts(std::min(static_cast<int>((x - lo) / width), n_bins - 1)) += 1.0;

        const auto n = static_cast<Eigen::Index>(v.size());
        const MeanStd ms = mean_std(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
        GaussFunctor functor(centers, counts);
        Eigen::VectorXd p(3);
        p << counts.maxCoeff(), ms.mean, ms.stddev > 0.0 ? ms.stddev : width;
        Eigen::LevenbergMarquardt<GaussFunctor> lm(functor);
        lm.setMaxfev(400);
        lm.minimize(p);
        if (!p.allFinite()) throw std::runtime_error("Gaussian histogram fit diverged");
        fit.amplitude = p(0);
        fit.mu = p(1);
        fit.sigma = std::abs(p(2));
    }
    if (!(fit.mu > 0.0)) throw std::domain_error("histogram_fit: fitted mean is not positive");
    fit.percent_error = 100.0 * fit.sigma / fit.mu;
    return fit;
}

VariationBound nd_variation_bound(const Spectrogram& sg, const BandSpec& band, double bin_duration,
                                  double extrapolation_tau) {
    if (!(bin_duration > 0.0) || !(extrapolation_tau > 0.0)) throw std::invalid_argument("durations must be > 0");
    std::size_t index = sg.bands.size();
    for (std::size_t b = 0; b < sg.bands.size(); ++b)
        if (std::abs(sg.bands[b].center - band.center) <= 1e-9 * std::max(1.0, band.center) &&
            std::abs(sg.bands[b].half_width - band.half_width) <= 1e-9 * std::max(1.0, band.half_width))
            index = b;
    if (index == sg.bands.size()) throw std::invalid_argument("band not present in spectrogram");

    const auto per_bin = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(bin_duration / sg.delta_t)));
    const Eigen::Index bins = sg.n_windows() / per_bin;
    if (bins < kMinVariationBins) throw std::invalid_argument("spectrogram covers fewer than 10 bins");

    const Eigen::VectorXd amp = sg.band_series(index);
    Eigen::VectorXd bin_means(bins);
    for (Eigen::Index b = 0; b < bins; ++b) bin_means(b) = amp.segment(b * per_bin, per_bin).mean();
    const MeanStd ms = mean_std(bin_means);
    const double scale = sg.window_means.size() > 0 ? sg.window_means.cwiseAbs().maxCoeff() : 0.0;
    if (!(ms.mean > 1e-12 * scale) || !(ms.mean > 0.0))
        throw std::domain_error("band amplitude at or below the noise floor");

    VariationBound vb;
    vb.bin_duration = static_cast<double>(per_bin) * sg.delta_t;
    vb.extrapolation_tau = extrapolation_tau;
    vb.n_bins = bins;
    vb.sigma_at_bin = ms.stddev / ms.mean;
    vb.extrapolated_sigma = vb.sigma_at_bin * std::sqrt(vb.bin_duration / extrapolation_tau);
    return vb;
}

}  // namespace droplock
