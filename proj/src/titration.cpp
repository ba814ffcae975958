#include "droplock/titration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "droplock/parallel.hpp"
#include "droplock/pipeline.hpp"
#include "droplock/random.hpp"
#include "droplock/stats.hpp"

namespace droplock {

namespace {

constexpr double kSigmas = 3.0;

TitrationPoint measure_point(const ExperimentConfig& cfg, const TitrationOptions& options, double conc, double k) {
    Synthesizer synth(cfg);
    PipelineOptions p;
    p.dual = options.estimator;
    p.estimators = {options.estimator.estimator_id};
    p.start_time = options.settling_gap;
    const ContrastSeries s = apply_calibration(run_pipeline(synth, p).dual.front(), k);
    if (s.n_valid() == 0) throw std::runtime_error("titration point has no valid windows");
    const MeanStd ms = masked_mean_std(s.values, s.valid);
    TitrationPoint pt;
    pt.concentration = conc;
    pt.mean_contrast = ms.mean;
    pt.window_std = ms.stddev;
    pt.n_windows = ms.count;
    pt.std_err = ms.stddev / std::sqrt(static_cast<double>(ms.count));
    return pt;
}

struct LinearSolve {
    double C_zero = 0.0;
    double C_floor = 0.0;
    double cost = std::numeric_limits<double>::infinity();
};

LinearSolve solve_for_k(const std::vector<TitrationPoint>& pts, const Eigen::VectorXd& w, double K) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = 1.0 / (1.0 + pts[static_cast<std::size_t>(i)].concentration / K);
        const double sw = std::sqrt(w(i));
        A(i, 0) = sw * x;          // C_zero
        A(i, 1) = sw * (1.0 - x);  // C_floor
        y(i) = sw * pts[static_cast<std::size_t>(i)].mean_contrast;
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    LinearSolve s;
    s.C_zero = c(0);
    s.C_floor = c(1);
    s.cost = (A * c - y).squaredNorm();
    return s;
}

}  // namespace

RelaxometryModel gd_model() { return {0.056, 0.028, 2e-6}; }
RelaxometryModel tempol_model() { return {0.056, 0.028, 1e-5}; }

void validate(const RelaxometryModel& m) {
    if (!(m.C_floor >= 0.0 && m.C_floor <= m.C_zero && m.C_zero <= 0.2))
        throw std::invalid_argument("model requires 0 <= C_floor <= C_zero <= 0.2");
    if (!(m.K_half > 0.0)) throw std::invalid_argument("K_half must be > 0");
}

double expected_contrast(const RelaxometryModel& m, double conc) {
    if (conc < 0.0) throw std::invalid_argument("concentration must be >= 0");
    return m.C_floor + (m.C_zero - m.C_floor) / (1.0 + conc / m.K_half);
}

TitrationCurve run_titration(const RelaxometryModel& model, const std::vector<double>& concentrations,
                             const TitrationOptions& options) {
    validate(model);
    if (concentrations.size() < 3) throw std::invalid_argument("titration needs at least 3 concentrations");
    for (std::size_t i = 0; i < concentrations.size(); ++i) {
        if (concentrations[i] < 0.0) throw std::invalid_argument("concentrations must be >= 0");
        if (i > 0 && !(concentrations[i] > concentrations[i - 1]))
            throw std::invalid_argument("concentrations must be strictly increasing");
    }
    const std::uint64_t master = options.config_template.acquisition.rng_seed;
    auto point_config = [&](std::uint64_t index, double contrast) {
        ExperimentConfig cfg = options.config_template;
        cfg.acquisition.duration = options.settling_gap + options.per_point_duration;
        cfg.acquisition.rng_seed = derive_seed(master, index);
        cfg.mw.contrast = contrast;
        return cfg;
    };

    TitrationCurve curve;
    const EstimatorId id = options.estimator.estimator_id;
    if (id == EstimatorId::PaperMain || id == EstimatorId::SIVariant) {
        const TitrationPoint ref = measure_point(point_config(0, model.C_zero), options, 0.0, 1.0);
        if (!(ref.mean_contrast > 0.0)) throw std::runtime_error("calibration run has a non-positive mean");
        curve.calibration_factor = model.C_zero / ref.mean_contrast;
    }

    curve.points.resize(concentrations.size());
    parallel_for(concentrations.size(), [&](std::size_t i) {
        const double c = concentrations[i];
        curve.points[i] = measure_point(point_config(i + 1, expected_contrast(model, c)), options, c,
                                        curve.calibration_factor);
    });

    curve.fitted = fit_model(curve.points);
    curve.blank_sigma = curve.points.front().window_std;
    try {
        curve.lod = lod(curve, curve.blank_sigma);
    } catch (const std::domain_error&) {
        curve.lod.reset();
    }
    return curve;
}

RelaxometryModel fit_model(const std::vector<TitrationPoint>& pts) {
    if (pts.size() < 3) throw std::invalid_argument("fit needs at least 3 points");
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    const bool weighted = std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.std_err > 0.0; });
    if (weighted)
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = 1.0 / (pts[static_cast<std::size_t>(i)].std_err * pts[static_cast<std::size_t>(i)].std_err);

    double c_min = std::numeric_limits<double>::infinity();
    double c_max = 0.0;
    for (const auto& p : pts) {
        if (p.concentration > 0.0) c_min = std::min(c_min, p.concentration);
        c_max = std::max(c_max, p.concentration);
    }
    if (!(c_max > 0.0)) throw std::invalid_argument("fit needs a positive concentration");
    const double lo = std::log(c_min) - std::log(1e3);
    const double hi = std::log(c_max) + std::log(1e3);

    // Coarse grid, then golden-section refinement around the best cell.
    constexpr int kGrid = 400;
    double best_u = lo;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= kGrid; ++g) {
        const double u = lo + (hi - lo) * g / kGrid;
        const double cost = solve_for_k(pts, w, std::exp(u)).cost;
        if (cost < best_cost) {
            best_cost = cost;
            best_u = u;
        }
    }
    const double step = (hi - lo) / kGrid;
    double a = std::max(lo, best_u - step);
    double b = std::min(hi, best_u + step);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = solve_for_k(pts, w, std::exp(x1)).cost;
    double f2 = solve_for_k(pts, w, std::exp(x2)).cost;
    for (int it = 0; it < 100; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = solve_for_k(pts, w, std::exp(x1)).cost;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = solve_for_k(pts, w, std::exp(x2)).cost;
        }
    }
    const double K = std::exp(0.5 * (a + b));
    const LinearSolve s = solve_for_k(pts, w, K);
    return {s.C_zero, s.C_floor, K};
}

double lod_closed_form(const RelaxometryModel& m, double blank_sigma) {
    const double d = kSigmas * blank_sigma;
    const double span = m.C_zero - m.C_floor;
    if (!(span > d)) throw std::domain_error("LOD beyond model range");
    return m.K_half * d / (span - d);
}

double lod(const RelaxometryModel& m, double blank_sigma) {
    if (blank_sigma < 0.0) throw std::invalid_argument("blank_sigma must be >= 0");
    if (!(m.K_half > 0.0)) throw std::invalid_argument("K_half must be > 0");
    const double d = kSigmas * blank_sigma;
    if (d == 0.0) return 0.0;
    auto drop = [&](double c) { return std::abs(m.C_floor + (m.C_zero - m.C_floor) / (1.0 + c / m.K_half) - m.C_zero); };
    // The drop saturates at |C_zero - C_floor|; at or past it there is no solution.
    if (!(std::abs(m.C_zero - m.C_floor) > d)) throw std::domain_error("LOD beyond model range");
    double lo = 0.0;
    double hi = m.K_half;
    while (drop(hi) < d) {
        hi *= 2.0;
        if (hi > 1e12 * m.K_half) throw std::domain_error("LOD beyond model range");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (drop(mid) < d ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double lod(const TitrationCurve& curve, double blank_sigma) { return lod(curve.fitted, blank_sigma); }

CostVolumeReport cost_volume_report(double f_D, double duration, double droplet_volume_L, double nd_mass_per_droplet_g,
                                    double nd_price_per_mg) {
    if (f_D < 0.0 || duration < 0.0 || droplet_volume_L < 0.0 || nd_mass_per_droplet_g < 0.0 || nd_price_per_mg < 0.0)
        throw std::invalid_argument("cost_volume_report inputs must be non-negative");
    CostVolumeReport r;
    r.droplets = f_D * duration;
    r.total_volume_L = r.droplets * droplet_volume_L;
    r.total_nd_mass_g = r.droplets * nd_mass_per_droplet_g;
    r.total_cost = r.total_nd_mass_g * 1e3 * nd_price_per_mg;
    return r;
}

}  // namespace droplock
