#pragma once

#include <optional>
#include <string>
#include <vector>

#include "droplock/duallock.hpp"
#include "droplock/types.hpp"

namespace droplock {

// C(conc) = C_floor + (C_zero - C_floor) / (1 + conc / K_half); conc in M.
struct RelaxometryModel {
    double C_zero = 0.056;
    double C_floor = 0.028;
    double K_half = 2e-6;
};

RelaxometryModel gd_model();
RelaxometryModel tempol_model();

// Throws std::invalid_argument unless 0 <= C_floor <= C_zero <= 0.2 and K_half > 0.
void validate(const RelaxometryModel& model);

double expected_contrast(const RelaxometryModel& model, double conc);

struct TitrationPoint {
    double concentration = 0.0;  // M
    double mean_contrast = 0.0;
    double std_err = 0.0;     // window_std / sqrt(n_windows)
    double window_std = 0.0;  // per-window spread of the calibrated estimate
    Eigen::Index n_windows = 0;
};

struct TitrationCurve {
    std::vector<TitrationPoint> points;
    RelaxometryModel fitted;
    double blank_sigma = 0.0;
    std::optional<double> lod;  // M; empty when beyond model range
    std::string lod_convention = "3-sigma";
    double calibration_factor = 1.0;
};

struct TitrationOptions {
    ExperimentConfig config_template;  // contrast is overwritten per point
    double per_point_duration = 120.0;  // s of analysed data per point
    double settling_gap = 5.0;          // s synthesized and discarded before each point
    EstimatorConfig estimator;
};

// Simulates every concentration (strictly increasing, >= 3 points) with an
// independent seed derived from the template seed and the point index, then
// fits the model and evaluates the LOD. PaperMain and SIVariant outputs are
// mapped to absolute contrast through a reference run at the model's C_zero.
// blank_sigma is the window_std of the lowest-concentration point.
TitrationCurve run_titration(const RelaxometryModel& model, const std::vector<double>& concentrations,
                             const TitrationOptions& options);

// Variable-projection least squares: 1-D search over log K_half with the two
// contrasts solved linearly, weighted by 1/std_err^2 when all are positive.
RelaxometryModel fit_model(const std::vector<TitrationPoint>& points);

// Smallest conc with |C(conc) - C_zero| = 3 blank_sigma on the model, found
// numerically. Throws std::domain_error("LOD beyond model range") if the
// curve never drops that far.
double lod(const RelaxometryModel& model, double blank_sigma);
double lod(const TitrationCurve& curve, double blank_sigma);

// K_half d / (C_zero - C_floor - d), d = 3 blank_sigma.
double lod_closed_form(const RelaxometryModel& model, double blank_sigma);

struct CostVolumeReport {
    double droplets = 0.0;
    double total_volume_L = 0.0;
    double total_nd_mass_g = 0.0;
    double total_cost = 0.0;  // currency units of nd_price_per_mg
};

CostVolumeReport cost_volume_report(double f_D, double duration, double droplet_volume_L, double nd_mass_per_droplet_g,
                                    double nd_price_per_mg);

}  // namespace droplock
