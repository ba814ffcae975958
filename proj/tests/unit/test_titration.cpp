#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "droplock/titration.hpp"
#include "support.hpp"

using namespace droplock;
using testing::rel_err;

namespace {

std::vector<TitrationPoint> exact_points(const RelaxometryModel& m, const std::vector<double>& concs) {
    std::vector<TitrationPoint> pts;
    for (const double c : concs) {
        TitrationPoint p;
        p.concentration = c;
        p.mean_contrast = expected_contrast(m, c);
        pts.push_back(p);
    }
    return pts;
}

}  // namespace

TEST_CASE("response curve boundaries and monotonicity") {
    const RelaxometryModel gd = gd_model();
    CHECK(expected_contrast(gd, 0.0) == gd.C_zero);
    CHECK(expected_contrast(gd, gd.K_half) == doctest::Approx(0.5 * (gd.C_zero + gd.C_floor)));
    double prev = gd.C_zero + 1.0;
    for (double c = 1e-7; c <= 2e-5; c *= 1.3) {
        const double v = expected_contrast(gd, c);
        CHECK(v < prev);
        CHECK(v > gd.C_floor);
        prev = v;
    }
    CHECK(expected_contrast(gd, 1e3) == doctest::Approx(gd.C_floor).epsilon(1e-6));
    CHECK_THROWS_AS(expected_contrast(gd, -1e-9), std::invalid_argument);
    CHECK(tempol_model().K_half == 1e-5);
    CHECK_THROWS_AS(validate(RelaxometryModel{0.03, 0.05, 1e-6}), std::invalid_argument);
    CHECK_THROWS_AS(validate(RelaxometryModel{0.05, 0.03, 0.0}), std::invalid_argument);
}

TEST_CASE("LOD matches the inverted curve and behaves at its limits") {
    const RelaxometryModel gd = gd_model();
    // d = 3 x 0.00037 = 0.00111 below C_zero.
    const double closed = gd.K_half * 0.00111 / (gd.C_zero - gd.C_floor - 0.00111);
    CHECK(rel_err(lod(gd, 0.00037), closed) < 1e-9);
    CHECK(rel_err(lod_closed_form(gd, 0.00037), closed) < 1e-12);
    CHECK(gd.C_zero - expected_contrast(gd, lod(gd, 0.00037)) == doctest::Approx(0.00111).epsilon(1e-9));
    CHECK(lod(gd, 0.0) == 0.0);
    CHECK(lod(gd, 1e-12) < 1e-15);
    double prev = 0.0;
    for (const double s : {1e-5, 1e-4, 5e-4, 1e-3, 5e-3}) {
        const double l = lod(gd, s);
        CHECK(l > prev);
        prev = l;
    }
    CHECK_THROWS_WITH_AS(lod(gd, 0.01), "LOD beyond model range", std::domain_error);
    CHECK_THROWS_AS(lod_closed_form(gd, 0.01), std::domain_error);
    CHECK_THROWS_AS(lod(gd, -1.0), std::invalid_argument);
}

TEST_CASE("cost and volume scaling") {
    const CostVolumeReport r = cost_volume_report(30.0, 1000.0, 1e-9, 100e-12, 50.0);
    CHECK(r.droplets == doctest::Approx(3e4));
    CHECK(r.total_nd_mass_g == doctest::Approx(3e-6));
    CHECK(r.total_cost == doctest::Approx(0.15));
    CHECK(r.total_volume_L == doctest::Approx(3e-5));
    CHECK(cost_volume_report(30.0, 3600.0, 1e-9, 117e-12, 50.0).total_cost == doctest::Approx(0.63).epsilon(0.01));
    const CostVolumeReport zero = cost_volume_report(30.0, 0.0, 1e-9, 100e-12, 50.0);
    CHECK(zero.droplets == 0.0);
    CHECK(zero.total_cost == 0.0);
    CHECK_THROWS_AS(cost_volume_report(-1.0, 1.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("model fit recovers exact points and a flat response") {
    const RelaxometryModel truth{0.05, 0.02, 3e-6};
    const RelaxometryModel fit = fit_model(exact_points(truth, {0.0, 1e-7, 5e-7, 1e-6, 3e-6, 1e-5, 5e-5}));
    CHECK(rel_err(fit.K_half, truth.K_half) < 1e-6);
    CHECK(rel_err(fit.C_zero, truth.C_zero) < 1e-9);
    CHECK(rel_err(fit.C_floor, truth.C_floor) < 1e-9);

    const RelaxometryModel flat = fit_model(exact_points({0.04, 0.04, 1e-6}, {0.0, 1e-6, 1e-5}));
    CHECK(flat.C_zero == doctest::Approx(0.04));
    CHECK(flat.C_floor == doctest::Approx(0.04));
    CHECK_THROWS_AS(fit_model(exact_points(truth, {0.0, 1e-6})), std::invalid_argument);
}

TEST_CASE("noise-free titration reproduces the curve with the exact estimator") {
    TitrationOptions opt;
    opt.config_template = reference::noiseless_config(29.0, 0.056, 1.0, 3);
    opt.per_point_duration = 4.0;
    opt.settling_gap = 1.0;
    opt.estimator.estimator_id = EstimatorId::ExactRecovery;
    opt.estimator.f_D = 29.0;
    opt.estimator.delta_t = 1.0;
    const RelaxometryModel gd = gd_model();
    const std::vector<double> concs{0.0, 1e-7, 1e-6, 5e-6, 2e-5};
    const TitrationCurve curve = run_titration(gd, concs, opt);
    REQUIRE(curve.points.size() == concs.size());
    for (const TitrationPoint& p : curve.points) {
        CHECK(std::abs(p.mean_contrast - expected_contrast(gd, p.concentration)) < 1e-4);
        CHECK(p.n_windows == 4);
    }
    CHECK(curve.calibration_factor == 1.0);
    CHECK(curve.lod_convention == "3-sigma");
    CHECK(rel_err(curve.fitted.K_half, gd.K_half) < 1e-3);

    CHECK_THROWS_AS(run_titration(gd, {0.0, 1e-6, 1e-7}, opt), std::invalid_argument);
    CHECK_THROWS_AS(run_titration(gd, {0.0, 1e-6}, opt), std::invalid_argument);
}

TEST_CASE("uncalibrated estimators are mapped to absolute contrast") {
    TitrationOptions opt;
    opt.config_template = reference::noiseless_config(29.0, 0.056, 1.0, 3);
    opt.per_point_duration = 3.0;
    opt.settling_gap = 1.0;
    opt.estimator.estimator_id = EstimatorId::PaperMain;
    opt.estimator.delta_t = 1.0;
    const TitrationCurve curve = run_titration(gd_model(), {0.0, 1e-6, 1e-5}, opt);
    CHECK(curve.calibration_factor == doctest::Approx(14.5).epsilon(1e-6));
    CHECK(curve.points.front().mean_contrast == doctest::Approx(0.056).epsilon(1e-6));
}
