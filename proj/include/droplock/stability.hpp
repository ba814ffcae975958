#pragma once

#include <Eigen/Core>

#include "droplock/dsp.hpp"
#include "droplock/stats.hpp"
#include "droplock/types.hpp"

namespace droplock {

enum class AllanKind { Overlapping, NonOverlapping };
enum class GapPolicy { Interpolate, Reject };

struct AllanOptions {
    AllanKind kind = AllanKind::Overlapping;
    GapPolicy gaps = GapPolicy::Interpolate;
    bool fractional = false;  // divide the series by its mean first
};

struct AllanCurve {
    Eigen::VectorXd taus;        // s, strictly increasing
    Eigen::VectorXd deviations;  // units of the input series
    Eigen::VectorXi n_terms;     // squared differences averaged at each tau

    Eigen::Index size() const { return taus.size(); }
};

// Allan deviation of y sampled every tau0. Each requested tau is rounded to
// m = round(tau / tau0) samples; taus with m < 2 or fewer than three whole
// blocks are omitted, as are duplicates after rounding.
AllanCurve allan_deviation(const Eigen::Ref<const Eigen::VectorXd>& y, double tau0, const Eigen::VectorXd& taus,
                           AllanKind kind = AllanKind::Overlapping);

// Uses the valid entries of a uniformly spaced series. Invalid entries are
// linearly interpolated or, with GapPolicy::Reject, make the call throw.
AllanCurve allan_deviation(const ContrastSeries& series, const Eigen::VectorXd& taus, const AllanOptions& options = {});

// per_decade log-spaced values covering [lo, hi].
Eigen::VectorXd log_spaced(double lo, double hi, int per_decade);

// Least-squares line through (log10 tau, log10 sigma) restricted to [tau_lo, tau_hi].
LineFit allan_slope(const AllanCurve& curve, double tau_lo, double tau_hi);

// Deviation at the curve point nearest tau in log distance.
double deviation_at(const AllanCurve& curve, double tau);

struct GaussianFit {
    double mu = 0.0;
    double sigma = 0.0;
    double amplitude = 0.0;
    double percent_error = 0.0;  // 100 sigma / mu
};

// Least-squares Gaussian fit to an n_bins histogram of the valid values.
// Requires >= 100 valid points; throws std::domain_error if mu <= 0.
GaussianFit histogram_fit(const ContrastSeries& series, int n_bins);

struct VariationBound {
    double bin_duration = 0.0;
    double sigma_at_bin = 0.0;
    double extrapolated_sigma = 0.0;
    double extrapolation_tau = 0.0;
    Eigen::Index n_bins = 0;
};

// Relative spread of the band amplitude over consecutive bins of
// bin_duration, scaled by sqrt(bin_duration / extrapolation_tau). The band
// must be one of the spectrogram's bands. Needs >= 10 bins.
VariationBound nd_variation_bound(const Spectrogram& spectrogram, const BandSpec& band, double bin_duration,
                                  double extrapolation_tau);

}  // namespace droplock
