#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "droplock/brownian.hpp"
#include "droplock/stats.hpp"
#include "support.hpp"

using namespace droplock;
using namespace droplock::brownian;

namespace {

KineticsParams kinetics(double D, double radius, std::size_t n, double dt, double duration) {
    KineticsParams k;
    k.diffusion_coeff = D;
    k.droplet_radius = radius;
    k.n_particles = n;
    k.dt_step = dt;
    k.duration = duration;
    return k;
}

// Kolmogorov-Smirnov distance of the sample to the 2D Rayleigh law with
// per-axis variance s2: F(r) = 1 - exp(-r^2 / (2 s2)).
double ks_rayleigh(Eigen::VectorXd d, double s2) {
    std::sort(d.begin(), d.end());
    const auto n = static_cast<double>(d.size());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double F = 1.0 - std::exp(-d(i) * d(i) / (2.0 * s2));
        worst = std::max({worst, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
    }
    return worst;
}

}  // namespace

TEST_CASE("zero diffusion leaves every particle in place") {
    const auto ens = simulate(kinetics(0.0, 25.0, 20, 0.1, 5.0), 1);
    CHECK(ens.n_particles() == 20);
    CHECK(ens.n_steps() == 51);
    CHECK(displacements(ens, 2.0).maxCoeff() == 0.0);
    const Histogram h = displacement_histogram(ens, 1.0, 10);
    CHECK(h.counts(0) == h.counts.sum());
    CHECK(h.counts.tail(9).sum() == 0);
}

TEST_CASE("ensemble MSD follows 4 D t") {
    const double D = 1.0;
    const auto ens = simulate(kinetics(D, 50.0, 10'000, 0.1, 3.0), 3);
    const Eigen::VectorXd msd = mean_squared_displacement(ens, 30);
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(30, 0.1, 3.0);
    // Regression through the origin.
    const double slope = t.dot(msd) / t.squaredNorm();
    CHECK(testing::rel_err(slope, 4.0 * D) < 0.05);
    for (Eigen::Index i = 0; i < 30; ++i) CHECK(testing::rel_err(msd(i), 4.0 * D * t(i)) < 0.05);
}

TEST_CASE("trajectories never leave the droplet and are reproducible") {
    auto k = kinetics(4.0, 5.0, 200, 0.05, 10.0);
    const auto a = simulate(k, 9);
    const auto b = simulate(k, 9);
    const Eigen::ArrayXXd r = (a.x.array().square() + a.y.array().square()).sqrt();
    CHECK(r.maxCoeff() <= 5.0);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(simulate(k, 10).x != a.x);
    k.heavy_tail_alpha = 1.2;
    const auto h = simulate(k, 9);
    CHECK((h.x.array().square() + h.y.array().square()).sqrt().maxCoeff() <= 5.0);
}

TEST_CASE("a step larger than the droplet is rejected") {
    CHECK_THROWS_WITH_AS(simulate(kinetics(100.0, 1.0, 1, 1.0, 2.0), 0), "time step too coarse",
                         std::invalid_argument);
    CHECK_THROWS_AS(simulate(kinetics(-1.0, 1.0, 1, 0.1, 2.0), 0), std::invalid_argument);
}

TEST_CASE("displacements match the Rayleigh law") {
    // Large droplet so the wall is never reached at this lag.
    const double D = 0.5;
    const double lag = 1.0;
    const auto ens = simulate(kinetics(D, 1000.0, 10'000, 0.1, 1.0), 4);
    const Eigen::VectorXd d = displacements(ens, lag);
    REQUIRE(d.size() >= 10'000);
    const auto big = simulate(kinetics(D, 1000.0, 1'000, 0.1, 10.9), 5);
    const Eigen::VectorXd pooled = displacements(big, lag);
    REQUIRE(pooled.size() >= 100'000);
    CHECK(ks_rayleigh(pooled, 2.0 * D * lag) < 0.02);
    CHECK(ks_rayleigh(d, 2.0 * D * lag) < 0.02);
    // Wrong diffusion coefficient is clearly rejected.
    CHECK(ks_rayleigh(pooled, 2.0 * 1.5 * D * lag) > 0.05);
}

TEST_CASE("heavy-tailed steps have larger displacement kurtosis") {
    auto k = kinetics(1.0, 500.0, 2'000, 0.1, 2.0);
    const auto gauss = simulate(k, 6);
    k.heavy_tail_alpha = 1.5;
    const auto levy = simulate(k, 6);
    CHECK(excess_kurtosis(displacements(levy, 0.1)) > excess_kurtosis(displacements(gauss, 0.1)));
}

TEST_CASE("tracked-particle scale: 30 s displacements reach beyond 5 um") {
    // D chosen so the median 30 s displacement sqrt(4 D t ln 2) is 2 um.
    const double lag = 30.0;
    const double D = 4.0 / (4.0 * lag * std::log(2.0));
    const auto ens = simulate(kinetics(D, 50.0, 200, 0.05, 60.0), 7);
    Eigen::VectorXd d = displacements(ens, lag);
    std::sort(d.begin(), d.end());
    const double median = d(d.size() / 2);
    CHECK(testing::rel_err(median, 2.0) < 0.15);
    CHECK(d.maxCoeff() > 5.0);
    const Histogram h = displacement_histogram(ens, lag, 40);
    CHECK(h.edges(h.edges.size() - 1) > 5.0);
    CHECK(h.counts.sum() == d.size());
}

TEST_CASE("fluorescence of stationary symmetric particles is constant") {
    TrajectoryEnsemble one;
    one.dt_step = 0.1;
    one.droplet_radius = 10.0;
    one.x = Eigen::MatrixXd::Zero(1, 20);
    one.y = Eigen::MatrixXd::Zero(1, 20);
    const TimeSeries t1 = fluorescence_trace(one, 5.0, 100.0);
    CHECK((t1.samples.array() - 1.0).abs().maxCoeff() < 1e-12);

    TrajectoryEnsemble two = one;
    two.x = Eigen::MatrixXd::Constant(2, 20, 3.0);
    two.x.row(1).setConstant(-3.0);
    two.y = Eigen::MatrixXd::Zero(2, 20);
    const TimeSeries t2 = fluorescence_trace(two, 5.0, 100.0);
    CHECK((t2.samples.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(fluorescence_trace(one, 20.0, 100.0), std::invalid_argument);
}

TEST_CASE("fluorescence trace is positive, mean one, and its spread falls as 1/sqrt(n)") {
    std::vector<double> rel_std;
    for (std::size_t n : {100u, 1000u, 10000u}) {
        // Small droplet: the beam-weight sum decorrelates within about a second.
        const auto ens = simulate(kinetics(4.0, 5.0, n, 0.05, 30.0), 8);
        const TimeSeries tr = fluorescence_trace(ens, 3.0, 1000.0);
        CHECK(tr.samples.minCoeff() > 0.0);
        CHECK(std::abs(tr.samples.mean() - 1.0) < 1e-12);
        rel_std.push_back(mean_std(tr.samples).stddev);
    }
    CHECK(rel_std[1] < rel_std[0]);
    CHECK(rel_std[2] < rel_std[1]);
    // Each decade in n should shrink the spread by about sqrt(10).
    CHECK(rel_std[0] / rel_std[1] == doctest::Approx(std::sqrt(10.0)).epsilon(0.35));
    CHECK(rel_std[1] / rel_std[2] == doctest::Approx(std::sqrt(10.0)).epsilon(0.35));
}

TEST_CASE("trajectory and histogram CSV exports") {
    const auto ens = simulate(kinetics(1.0, 10.0, 2, 0.5, 1.0), 1);
    std::ostringstream os;
    write_trajectories_csv(os, ens);
    const std::string csv = os.str();
    CHECK(csv.rfind("particle_id,t,x_um,y_um\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 3);
    std::ostringstream hs;
    write_histogram_csv(hs, displacement_histogram(ens, 0.5, 4));
    const std::string hist = hs.str();
    CHECK(std::count(hist.begin(), hist.end(), '\n') == 5);
}
