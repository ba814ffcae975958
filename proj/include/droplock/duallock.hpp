#pragma once

#include <Eigen/Core>

#include "droplock/dsp.hpp"
#include "droplock/types.hpp"

namespace droplock {

enum class FdSource { Nominal, Tracked };

struct EstimatorConfig {
    EstimatorId estimator_id = EstimatorId::PaperMain;
    double delta_t = 0.7;  // s
    double f_D = 29.0;     // nominal droplet rate, Hz
    double f_MW = 1000.0;  // Hz
    double f_D_half_width = 2.0;   // Hz
    double mw_half_width = 2.0;    // Hz, used for f_MW and both sidebands
    double tracking_half_width = 5.0;  // Hz, search band when f_D_source == Tracked
    FdSource f_D_source = FdSource::Nominal;
    Taper taper = Taper::Hann;
    // ExactRecovery only: share of the window mean not carried by the droplets
    // (background). M = mean * (1 - background_fraction).
    double background_fraction = 0.0;
};

// Throws std::invalid_argument when bands overlap or leave the spectrum.
// Fewer than 10 droplets per window is legal but reported as a warning.
ValidationReport validate(const EstimatorConfig& cfg, double sample_rate);

// Per-window band amplitudes shared by every estimator variant.
struct WindowAmplitudes {
    Eigen::VectorXd times;  // window centres
    Eigen::VectorXd f_D;    // droplet rate used to place the bands
    Eigen::VectorXd F_D;
    Eigen::VectorXd F_MW;
    Eigen::VectorXd F_plus;
    Eigen::VectorXd F_minus;
    Eigen::VectorXd mean;         // window mean before subtraction
    Eigen::VectorXd noise_floor;  // noise-equivalent band amplitude near f_D
    Eigen::Array<bool, Eigen::Dynamic, 1> valid;

    Eigen::Index size() const { return times.size(); }
};

// Consecutive windows of delta_t starting at ts.t_start; a trailing partial
// window is dropped. A window is invalid when F(f_D) is not above three times
// the noise-equivalent amplitude of the surrounding bins, i.e. no droplets.
WindowAmplitudes measure_windows(const TimeSeries& ts, const EstimatorConfig& cfg);

ContrastSeries contrast_from(const WindowAmplitudes& amps, const EstimatorConfig& cfg);

//   PaperMain:     (F(f_MW) + F(f_MW + f_D) + F(f_MW - f_D)) / F(f_D) / f_D   [uncalibrated, s]
//   SIVariant:     (F(f_MW + f_D) + F(f_MW - f_D)) / (2 F(f_D))
//   ExactRecovery: (F(f_MW) + F(f_MW + f_D) + F(f_MW - f_D)) / (M + F(f_D))
ContrastSeries estimate_contrast(const TimeSeries& ts, const EstimatorConfig& cfg);

// Factor k with k * mean(valid values) == reference_C. Throws
// std::invalid_argument on an all-invalid series or a non-positive mean.
double calibrate(const ContrastSeries& series, double reference_C);

// Multiplies values by k, marks the series calibrated and refreshes the summary.
ContrastSeries apply_calibration(ContrastSeries series, double k);

// Appends b to a (streaming assembly); summaries are recomputed.
void append(ContrastSeries& a, const ContrastSeries& b);

}  // namespace droplock
