#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "droplock/types.hpp"

namespace droplock {

enum class Taper { Hann, Rectangular };

std::string to_string(Taper t);

struct BandSpec {
    double center = 0.0;      // Hz
    double half_width = 2.0;  // Hz
};

// Periodic taper of length n; cached per thread.
const Eigen::VectorXd& taper_weights(Taper taper, Eigen::Index n);

// Spectrum of a window given directly as samples. Mean is subtracted, taper
// applied, and magnitudes normalized so that A cos(2 pi f t) on an exact bin
// reads A: M_k = 2|X_k| / sum(w) for interior bins, |X_k| / sum(w) at DC and
// Nyquist.
SpectrumWindow spectrum_of(const Eigen::Ref<const Eigen::VectorXd>& samples, double dt, Taper taper = Taper::Hann);

// Window [t_i - delta_t, t_i) of ts. Throws std::out_of_range if it leaves the trace.
SpectrumWindow window_spectrum(const TimeSeries& ts, double t_i, double delta_t, Taper taper = Taper::Hann);

// Energy of the tapered, mean-subtracted samples recovered from magnitudes
// (Parseval); equals sum((w (x - mean))^2).
double spectral_energy(const SpectrumWindow& win);

// Band bins: 1 <= k <= n/2 with |f_k - center| <= half_width.
std::pair<Eigen::Index, Eigen::Index> band_bins(const SpectrumWindow& win, const BandSpec& band);

// Root-sum-square of in-band magnitudes divided by the taper's equivalent
// noise bandwidth, so a tone's amplitude is recovered whether it sits on a bin
// or leaks into neighbours. Throws std::invalid_argument if the band leaves
// (0, Nyquist].
double band_amplitude(const SpectrumWindow& win, const BandSpec& band);

struct LorentzianFit {
    double center = 0.0;
    double fwhm = 0.0;
    double height = 0.0;
    double baseline = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, LorentzianFit best) : std::runtime_error(what), best_(best) {}
    const LorentzianFit& best_so_far() const { return best_; }

private:
    LorentzianFit best_;
};

// height / (1 + ((f - center) / (fwhm / 2))^2) + baseline, evaluated per f.
Eigen::VectorXd lorentzian(const Eigen::VectorXd& f, const LorentzianFit& p);

// Levenberg-Marquardt fit over the band bins (>= 7 required). Throws FitError
// on non-convergence, on a flat band, or when the fit is no better than a
// constant.
LorentzianFit fit_lorentzian(const SpectrumWindow& win, const BandSpec& band, int max_iterations = 200);

struct RateTrack {
    Eigen::VectorXd times;  // window centres
    Eigen::VectorXd f_D;    // Hz
    Eigen::VectorXd snr;
    Eigen::Array<bool, Eigen::Dynamic, 1> valid;
};

constexpr double kRateSnrThreshold = 3.0;

// Consecutive Hann windows of delta_t; per window the in-band argmax refined
// by a 3-point parabola on log magnitude. SNR is the peak over the rms of the
// band bins more than two bins from the peak; windows with SNR < 3 are invalid.
RateTrack track_droplet_rate(const TimeSeries& ts, double delta_t, const BandSpec& search_band);

// Band-limited spectrogram over consecutive, gap-free windows of delta_t.
struct Spectrogram {
    double delta_t = 0.0;
    double df = 0.0;
    double enbw_bins = 1.0;
    Taper taper = Taper::Hann;
    Eigen::VectorXd t_centers;
    Eigen::VectorXd window_means;
    std::vector<BandSpec> bands;
    std::vector<Eigen::Index> first_bin;           // per band
    std::vector<Eigen::MatrixXd> band_magnitudes;  // per band: windows x bins

    Eigen::Index n_windows() const { return t_centers.size(); }
    // band_amplitude of band b in every window.
    Eigen::VectorXd band_series(std::size_t b) const;
};

Spectrogram compute_spectrogram(const TimeSeries& ts, double delta_t, const std::vector<BandSpec>& bands,
                                Taper taper = Taper::Hann);

// Appends another spectrogram with identical layout (streaming assembly).
void append(Spectrogram& dst, const Spectrogram& src);

// CSV rows t_center,frequency,magnitude.
void write_spectrogram_csv(std::ostream& os, const Spectrogram& sg);

// Number of whole windows of delta_t in ts, and samples per window.
Eigen::Index window_samples(const TimeSeries& ts, double delta_t);

}  // namespace droplock
