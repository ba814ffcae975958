#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "droplock/stability.hpp"
#include "support.hpp"

using namespace droplock;
using testing::rel_err;

namespace {

// Textbook Allan deviation with explicit block means.
double brute_allan(const Eigen::VectorXd& y, Eigen::Index m, bool overlapping) {
    double ss = 0.0;
    Eigen::Index terms = 0;
    for (Eigen::Index k = 0; k + 2 * m <= y.size(); k += overlapping ? 1 : m) {
        double a = 0.0;
        double b = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            a += y(k + j);
            b += y(k + m + j);
        }
        const double d = (b - a) / static_cast<double>(m);
        ss += d * d;
        ++terms;
    }
    return std::sqrt(ss / (2.0 * static_cast<double>(terms)));
}

ContrastSeries series_of(const Eigen::VectorXd& v, double tau0) {
    ContrastSeries s;
    s.values = v;
    s.times = Eigen::VectorXd::LinSpaced(v.size(), 0.5 * tau0, (static_cast<double>(v.size()) - 0.5) * tau0);
    s.valid = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(v.size(), true);
    s.update_summary();
    return s;
}

}  // namespace

TEST_CASE("Allan deviation matches the textbook block-mean definition") {
    const Eigen::VectorXd y = testing::gaussian_vector(1000, 21, 3.0, 0.2);
    const Eigen::VectorXd taus = (Eigen::VectorXd(4) << 1.0, 2.5, 5.0, 25.0).finished();
    for (const AllanKind kind : {AllanKind::Overlapping, AllanKind::NonOverlapping}) {
        const AllanCurve c = allan_deviation(y, 0.5, taus, kind);
        REQUIRE(c.size() == 4);
        for (Eigen::Index i = 0; i < 4; ++i) {
            const auto m = static_cast<Eigen::Index>(std::llround(c.taus(i) / 0.5));
            CHECK(rel_err(c.deviations(i), brute_allan(y, m, kind == AllanKind::Overlapping)) < 1e-12);
        }
    }
}

TEST_CASE("white noise falls as tau^-1/2 for both estimators") {
    const double sd = 0.01;
    const Eigen::VectorXd y = testing::gaussian_vector(1 << 17, 22, 1.0, sd);
    const Eigen::VectorXd taus = log_spaced(2.0, 2000.0, 5);
    const AllanCurve o = allan_deviation(y, 1.0, taus);
    const AllanCurve n = allan_deviation(y, 1.0, taus, AllanKind::NonOverlapping);
    CHECK(allan_slope(o, 2.0, 2000.0).slope == doctest::Approx(-0.5).epsilon(0.1));
    // sigma(m) = sd / sqrt(m) for white noise.
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(rel_err(o.deviations(i), sd / std::sqrt(o.taus(i))) < 0.03);
    CHECK(rel_err(deviation_at(n, 10.0), deviation_at(o, 10.0)) < 0.1);
    CHECK(n.n_terms(0) < o.n_terms(0));
}

TEST_CASE("constant input has zero deviation and unusable taus are omitted") {
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(100, 0.056);
    const Eigen::VectorXd taus = (Eigen::VectorXd(6) << 0.1, 2.0, 2.2, 10.0, 33.0, 40.0).finished();
    const AllanCurve c = allan_deviation(y, 1.0, taus);
    // 0.1 gives m < 2, 2.2 rounds onto 2, 40 leaves fewer than three blocks.
    REQUIRE(c.size() == 3);
    CHECK(c.taus(0) == 2.0);
    CHECK(c.taus(2) == 33.0);
    CHECK(c.deviations.cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(allan_deviation(y, 0.0, taus), std::invalid_argument);
}

TEST_CASE("gaps are interpolated or rejected") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(60, 1.0, 2.0);
    const ContrastSeries clean = series_of(v, 0.7);
    ContrastSeries holed = clean;
    for (const Eigen::Index i : {0, 17, 18, 59}) {
        holed.values(i) = 0.0;
        holed.valid(i) = false;
    }
    holed.update_summary();
    const Eigen::VectorXd taus = log_spaced(1.4, 14.0, 5);
    const AllanCurve a = allan_deviation(clean, taus);
    AllanOptions opt;
    // A linear series is rebuilt exactly inside the gap; the ends are held.
    ContrastSeries inner = clean;
    inner.valid(17) = inner.valid(18) = false;
    inner.values(17) = inner.values(18) = 0.0;
    const AllanCurve b = allan_deviation(inner, taus, opt);
    CHECK((a.deviations - b.deviations).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(allan_deviation(holed, taus, opt).size() == a.size());
    opt.gaps = GapPolicy::Reject;
    CHECK_THROWS_AS(allan_deviation(holed, taus, opt), std::invalid_argument);

    opt = AllanOptions{};
    opt.fractional = true;
    ContrastSeries scaled = clean;
    scaled.values *= 7.0;
    const AllanCurve f1 = allan_deviation(clean, taus, opt);
    const AllanCurve f7 = allan_deviation(scaled, taus, opt);
    CHECK((f1.deviations - f7.deviations).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("histogram Gaussian fit recovers the generating percent error") {
    const ContrastSeries s = series_of(testing::gaussian_vector(20'000, 23, 0.056, 0.00112), 0.7);
    const GaussianFit fit = histogram_fit(s, 60);
    CHECK(fit.percent_error == doctest::Approx(2.0).epsilon(0.1));
    CHECK(rel_err(fit.mu, 0.056) < 1e-3);

    // Error of the fitted sigma shrinks with more points (averaged over seeds).
    auto mean_error = [](Eigen::Index n) {
        double e = 0.0;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const GaussianFit f = histogram_fit(series_of(testing::gaussian_vector(n, 100 + seed, 0.056, 0.00112), 0.7), 30);
            e += std::abs(f.sigma - 0.00112) / 0.00112;
        }
        return e / 8.0;
    };
    CHECK(mean_error(100'000) < mean_error(1'000));

    const GaussianFit delta = histogram_fit(series_of(Eigen::VectorXd::Constant(200, 0.03), 0.7), 20);
    CHECK(delta.mu == 0.03);
    CHECK(delta.sigma == 0.0);
    CHECK(delta.percent_error == 0.0);
    CHECK_THROWS_AS(histogram_fit(series_of(testing::gaussian_vector(500, 24, -0.05, 0.001), 0.7), 20),
                    std::domain_error);
    CHECK_THROWS_AS(histogram_fit(series_of(Eigen::VectorXd::Ones(50), 0.7), 20), std::invalid_argument);
}

TEST_CASE("ND variation bound: noiseless floor, scaling identity and preconditions") {
    const std::vector<BandSpec> bands{{29.0, 2.0}};
    const TimeSeries ts = testing::noiseless_trace(29.0, 0.056, 77.0);
    const Spectrogram sg = compute_spectrogram(ts, 0.7, bands);
    const VariationBound vb = nd_variation_bound(sg, bands[0], 7.0, 1000.0);
    CHECK(vb.n_bins == 11);
    CHECK(vb.bin_duration == doctest::Approx(7.0));
    CHECK(vb.sigma_at_bin <= 1e-6);
    CHECK(vb.extrapolated_sigma == doctest::Approx(vb.sigma_at_bin * std::sqrt(7.0 / 1000.0)));

    ExperimentConfig c = reference::noiseless_config(29.0, 0.056, 77.0);
    c.droplets.per_droplet_sigma = 0.05;
    const Spectrogram noisy = compute_spectrogram(Synthesizer(c).render_all(), 0.7, bands);
    const VariationBound nb = nd_variation_bound(noisy, bands[0], 7.0, 1000.0);
    CHECK(nb.sigma_at_bin > 1e-4);
    CHECK(nb.extrapolated_sigma == doctest::Approx(nb.sigma_at_bin * std::sqrt(7.0 / 1000.0)));

    CHECK_THROWS_AS(nd_variation_bound(sg, bands[0], 14.0, 1000.0), std::invalid_argument);
    CHECK_THROWS_AS(nd_variation_bound(sg, {30.0, 2.0}, 7.0, 1000.0), std::invalid_argument);
}
