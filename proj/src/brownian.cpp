#include "droplock/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "droplock/parallel.hpp"
#include "droplock/random.hpp"

namespace droplock::brownian {

namespace {

// Chambers-Mallows-Stuck draw of a standard symmetric alpha-stable variate.
double symmetric_stable(double alpha, double u_angle, double u_exp) {
    const double v = std::numbers::pi * (u_angle - 0.5);
    const double w = -std::log(u_exp);
    if (alpha == 2.0) return 2.0 * std::sin(v) * std::sqrt(w);
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

Eigen::Index lag_steps(const TrajectoryEnsemble& ensemble, double lag) {
    if (!(lag >= 0.0)) throw std::invalid_argument("lag must be >= 0");
    const auto steps = static_cast<Eigen::Index>(std::llround(lag / ensemble.dt_step));
    if (steps >= ensemble.n_steps()) throw std::invalid_argument("lag exceeds the trajectory duration");
    return steps;
}

}  // namespace

TrajectoryEnsemble simulate(const KineticsParams& params, std::uint64_t seed) {
    if (const auto report = validate(params); !report.ok()) throw std::invalid_argument(report.describe());
    const double D = params.diffusion_coeff;
    const double R = params.droplet_radius;
    const double dt = params.dt_step;
    if (std::sqrt(4.0 * D * dt) > R) throw std::invalid_argument("time step too coarse");

    const auto n_steps = static_cast<Eigen::Index>(std::llround(params.duration / dt));
    const auto n_particles = static_cast<Eigen::Index>(params.n_particles);
    TrajectoryEnsemble ens;
    ens.dt_step = dt;
    ens.droplet_radius = R;
    ens.x.resize(n_particles, n_steps + 1);
    ens.y.resize(n_particles, n_steps + 1);

    const double gauss_sigma = std::sqrt(2.0 * D * dt);
    const double stable_scale = std::sqrt(D * dt);
    const double max_step = 2.0 * R;

    parallel_for(static_cast<std::size_t>(n_particles), [&](std::size_t pi) {
        const auto p = static_cast<Eigen::Index>(pi);
        const CounterRng rng(seed, Stream::Particles, pi);
        const auto [u_r, u_a] = rng.uniform_pair(0);
        double px = R * std::sqrt(u_r) * std::cos(2.0 * std::numbers::pi * u_a);
        double py = R * std::sqrt(u_r) * std::sin(2.0 * std::numbers::pi * u_a);
        // Keep initial points strictly inside the wall.
        px *= 1.0 - 1e-12;
        py *= 1.0 - 1e-12;
        ens.x(p, 0) = px;
        ens.y(p, 0) = py;
        for (Eigen::Index k = 1; k <= n_steps; ++k) {
            double dx = 0.0;
            double dy = 0.0;
            if (D > 0.0) {
                const auto counter = static_cast<std::uint64_t>(k);
                if (params.heavy_tail_alpha) {
                    const auto u = rng.uniform4(counter);
                    const double a = *params.heavy_tail_alpha;
                    dx = stable_scale * symmetric_stable(a, u[0], u[1]);
                    dy = stable_scale * symmetric_stable(a, u[2], u[3]);
                    const double len = std::hypot(dx, dy);
                    if (len > max_step) {
                        dx *= max_step / len;
                        dy *= max_step / len;
                    }
                } else {
                    const auto [nx, ny] = rng.normal_pair(counter);
                    dx = gauss_sigma * nx;
                    dy = gauss_sigma * ny;
                }
            }
            px += dx;
            py += dy;
            const double r = std::hypot(px, py);
            if (r > R) {
                // Mirror about the wall; steps are bounded by 2R so |2R - r| <= R.
                const double scale = (2.0 * R - r) / r;
                px *= scale;
                py *= scale;
            }
            ens.x(p, k) = px;
            ens.y(p, k) = py;
        }
    });
    return ens;
}

Eigen::VectorXd displacements(const TrajectoryEnsemble& ensemble, double lag) {
    const Eigen::Index L = lag_steps(ensemble, lag);
    const Eigen::Index starts = ensemble.n_steps() - L;
    const Eigen::Index P = ensemble.n_particles();
    Eigen::VectorXd out(P * starts);
    for (Eigen::Index p = 0; p < P; ++p) {
        for (Eigen::Index k = 0; k < starts; ++k) {
            out(p * starts + k) = std::hypot(ensemble.x(p, k + L) - ensemble.x(p, k),
                                             ensemble.y(p, k + L) - ensemble.y(p, k));
        }
    }
    return out;
}

Histogram displacement_histogram(const TrajectoryEnsemble& ensemble, double lag, int n_bins) {
    if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
    const Eigen::VectorXd d = displacements(ensemble, lag);
    const double hi = d.size() > 0 && d.maxCoeff() > 0.0 ? d.maxCoeff() : 1.0;
    Histogram h;
    h.edges = Eigen::VectorXd::LinSpaced(n_bins + 1, 0.0, hi);
    h.counts = Eigen::VectorXi::Zero(n_bins);
    for (const double v : d) {
        auto bin = static_cast<int>(v / hi * n_bins);
        h.counts(std::clamp(bin, 0, n_bins - 1)) += 1;
    }
    return h;
}

Eigen::VectorXd mean_squared_displacement(const TrajectoryEnsemble& ensemble, Eigen::Index max_lag_steps) {
    if (max_lag_steps < 1 || max_lag_steps >= ensemble.n_steps())
        throw std::invalid_argument("max_lag_steps out of range");
    Eigen::VectorXd msd(max_lag_steps);
    for (Eigen::Index L = 1; L <= max_lag_steps; ++L) {
        const Eigen::Index n = ensemble.n_steps() - L;
        const auto dx = ensemble.x.rightCols(n) - ensemble.x.leftCols(n);
        const auto dy = ensemble.y.rightCols(n) - ensemble.y.leftCols(n);
        msd(L - 1) = (dx.array().square() + dy.array().square()).mean();
    }
    return msd;
}

TimeSeries fluorescence_profile(const TrajectoryEnsemble& ensemble, double beam_radius) {
    if (!(beam_radius > 0.0) || beam_radius > ensemble.droplet_radius)
        throw std::invalid_argument("beam_radius must lie in (0, droplet_radius]");
    const double inv = 1.0 / (2.0 * beam_radius * beam_radius);
    Eigen::VectorXd w = (-(ensemble.x.array().square() + ensemble.y.array().square()) * inv)
                            .exp()
                            .colwise()
                            .sum()
                            .transpose();
    w /= w.mean();
    return TimeSeries(0.0, ensemble.dt_step, std::move(w));
}

TimeSeries fluorescence_trace(const TrajectoryEnsemble& ensemble, double beam_radius, double sample_rate) {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("sample_rate must be > 0");
    const TimeSeries coarse = fluorescence_profile(ensemble, beam_radius);
    const double span = static_cast<double>(coarse.size() - 1) * coarse.dt;
    const auto n = static_cast<Eigen::Index>(std::floor(span * sample_rate + 1e-9)) + 1;
    Eigen::VectorXd out(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double pos = static_cast<double>(k) / sample_rate / coarse.dt;
        const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), coarse.size() - 2);
        const double frac = coarse.size() > 1 ? pos - static_cast<double>(i) : 0.0;
        out(k) = coarse.size() > 1 ? coarse.samples(i) * (1.0 - frac) + coarse.samples(i + 1) * frac
                                   : coarse.samples(0);
    }
    out /= out.mean();
    return TimeSeries(0.0, 1.0 / sample_rate, std::move(out));
}

void write_trajectories_csv(std::ostream& os, const TrajectoryEnsemble& ensemble) {
    os << "particle_id,t,x_um,y_um\n";
    os.precision(17);
    for (Eigen::Index p = 0; p < ensemble.n_particles(); ++p)
        for (Eigen::Index k = 0; k < ensemble.n_steps(); ++k)
            os << p << ',' << static_cast<double>(k) * ensemble.dt_step << ',' << ensemble.x(p, k) << ','
               << ensemble.y(p, k) << '\n';
}

void write_histogram_csv(std::ostream& os, const Histogram& histogram) {
    os << "bin_lo_um,bin_hi_um,count\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < histogram.counts.size(); ++i)
        os << histogram.edges(i) << ',' << histogram.edges(i + 1) << ',' << histogram.counts(i) << '\n';
}

}  // namespace droplock::brownian
