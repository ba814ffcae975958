#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "droplock/brownian.hpp"
#include "droplock/cli.hpp"
#include "droplock/config_io.hpp"
#include "droplock/dsp.hpp"
#include "droplock/duallock.hpp"
#include "droplock/lockin.hpp"
#include "droplock/reference.hpp"
#include "droplock/stability.hpp"
#include "droplock/synth.hpp"
#include "droplock/titration.hpp"
#include "droplock/trace_io.hpp"
#include "json.hpp"

namespace droplock::cli {

namespace {

using Json = nlohmann::ordered_json;

// Analysis produced nothing usable (all windows invalid, empty curve).
class Degenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr Eigen::Index kWriteChunk = Eigen::Index{1} << 20;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw std::ios_base::failure("failed writing '" + path + "'");
}

ExperimentConfig load_checked_config(const std::string& path) {
    if (!std::filesystem::exists(path)) throw std::ios_base::failure("cannot read '" + path + "'");
    return load_config(path);
}

// Records outputs and the invocation, then writes <primary>.manifest.json.
struct ManifestWriter {
    RunManifest manifest;
    std::vector<std::string> outputs;

    ManifestWriter(std::string command, const std::vector<std::string>& args) {
        manifest.command = std::move(command);
        manifest.argv = args;
        manifest.version = version();
    }

    void finish(const std::string& manifest_path) {
        for (const auto& path : outputs) manifest.output_digests[path] = sha256_file(path);
        write_manifest(manifest_path, manifest);
    }
};

Json summary_json(const ContrastSeries& s) {
    Json j;
    j["estimator_id"] = to_string(s.estimator_id);
    j["mean"] = s.mean;
    j["percent_error"] = s.percent_error;
    j["n_windows"] = s.size();
    j["n_valid"] = s.n_valid();
    j["calibrated"] = s.calibrated;
    return j;
}

std::string with_suffix(const std::string& path, const std::string& suffix) { return path + suffix; }

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string format = "bin";
};

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = load_checked_config(a.config);
    if (a.seed_set) cfg.acquisition.rng_seed = a.seed;
    const ValidationReport report = validate(cfg);
    if (!report.ok()) {
        err << "configuration rejected:\n" << report.describe();
        return kConfigError;
    }
    if (!report.empty()) err << report.describe();
    const Synthesizer synth(cfg);

    {
        auto os = open_out(a.out);
        const Eigen::Index n = synth.sample_count();
        if (a.format == "bin")
            write_binary_header(os, cfg.acquisition.sample_rate, static_cast<std::uint64_t>(n));
        else
            write_csv_header(os);
        Eigen::VectorXd buf;
        for (Eigen::Index first = 0; first < n; first += kWriteChunk) {
            const Eigen::Index count = std::min(kWriteChunk, n - first);
            buf.resize(count);
            synth.render(first, buf);
            if (a.format == "bin")
                write_binary_samples(os, buf);
            else
                write_csv_rows(os, buf, synth.dt(), first);
        }
    }

    const GroundTruth& truth = synth.ground_truth();
    Json side;
    side["true_contrast"] = truth.true_contrast;
    side["droplet_count"] = truth.droplet_count();
    side["f_D_mean"] = truth.f_D_values.size() > 0 ? truth.f_D_values.mean() : cfg.droplets.f_D;
    side["loading_mean"] = truth.droplet_count() > 0 ? truth.per_droplet_loading.mean() : 1.0;
    side["sample_rate"] = cfg.acquisition.sample_rate;
    side["n_samples"] = synth.sample_count();
    {
        // Mean background over the trace, used for absolute-contrast recovery.
        const double T = static_cast<double>(synth.sample_count()) * synth.dt();
        const auto& nb = cfg.noise;
        side["background_mean"] =
            nb.background_b0 > 0.0 ? nb.background_b0 * nb.background_decay_tau / T * (1.0 - std::exp(-T / nb.background_decay_tau))
                                   : 0.0;
    }
    // Rate path decimated to at most ~10^4 points.
    const Eigen::Index stride = std::max<Eigen::Index>(1, truth.f_D_times.size() / 10000);
    std::vector<double> pt, pv;
    for (Eigen::Index i = 0; i < truth.f_D_times.size(); i += stride) {
        pt.push_back(truth.f_D_times(i));
        pv.push_back(truth.f_D_values(i));
    }
    side["f_D_path_t"] = pt;
    side["f_D_path_hz"] = pv;
    side["config"] = to_key_values(cfg);
    const std::string sidecar = with_suffix(a.out, ".truth.json");
    write_text(sidecar, side.dump(2) + "\n");

    ManifestWriter mw("synth", argv);
    mw.manifest.config = to_key_values(cfg);
    mw.manifest.seed = cfg.acquisition.rng_seed;
    mw.outputs = {a.out, sidecar};
    mw.finish(with_suffix(a.out, ".manifest.json"));
    out << "wrote " << synth.sample_count() << " samples to " << a.out << "\n";
    return kOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string trace;
    std::string config;
    std::string out;
    std::string estimator = "paper";
    double window_s = 0.7;
    double band_hz = 2.0;
};

int cmd_analyze(const AnalyzeArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    const TimeSeries ts = read_trace_file(a.trace);

    ExperimentConfig cfg;
    double background_mean = 0.0;
    if (!a.config.empty()) {
        cfg = load_checked_config(a.config);
        const double T = ts.duration();
        const auto& nb = cfg.noise;
        if (nb.background_b0 > 0.0)
            background_mean = nb.background_b0 * nb.background_decay_tau / T * (1.0 - std::exp(-T / nb.background_decay_tau));
    } else {
        const std::string sidecar = with_suffix(a.trace, ".truth.json");
        if (!std::filesystem::exists(sidecar)) {
            err << "no --config given and no sidecar " << sidecar << "; f_D and f_MW are unknown\n";
            return kConfigError;
        }
        const auto side = nlohmann::json::parse(read_text(sidecar));
        cfg = config_from_key_values(side.at("config").get<KeyValueMap>());
        background_mean = side.value("background_mean", 0.0);
    }

    EstimatorConfig ec;
    ec.delta_t = a.window_s;
    ec.f_D = cfg.droplets.f_D;
    ec.f_MW = cfg.mw.f_MW;
    ec.f_D_half_width = a.band_hz;
    ec.mw_half_width = a.band_hz;
    const double trace_mean = ts.samples.mean();
    ec.background_fraction = trace_mean > 0.0 ? std::clamp(background_mean / trace_mean, 0.0, 0.999) : 0.0;

    std::vector<EstimatorId> dual_ids;
    bool conventional = false;
    if (a.estimator == "paper") dual_ids = {EstimatorId::PaperMain};
    if (a.estimator == "si") dual_ids = {EstimatorId::SIVariant};
    if (a.estimator == "exact") dual_ids = {EstimatorId::ExactRecovery};
    if (a.estimator == "both") {
        dual_ids = {EstimatorId::PaperMain};
        conventional = true;
    }
    if (a.estimator == "conventional") conventional = true;

    std::vector<ContrastSeries> results;
    if (!dual_ids.empty()) {
        const WindowAmplitudes amps = measure_windows(ts, ec);
        for (const auto id : dual_ids) {
            ec.estimator_id = id;
            results.push_back(contrast_from(amps, ec));
        }
    }
    if (conventional) {
        ConventionalConfig cc = reference::conventional();
        cc.demod.reference_freq = cfg.mw.f_MW;
        results.push_back(ratiometric_contrast(ts, cc.demod, cc.pl_smooth_tau, cc.decimation));
    }

    ManifestWriter mw("analyze", argv);
    Json summary;
    summary["trace"] = a.trace;
    summary["f_D"] = ec.f_D;
    summary["f_MW"] = ec.f_MW;
    summary["window_s"] = a.window_s;
    summary["band_hz"] = a.band_hz;
    summary["taper"] = to_string(ec.taper);
    Json list = Json::array();
    bool degenerate = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const ContrastSeries& s = results[i];
        const std::string path =
            i == 0 ? a.out : with_suffix(a.out, "." + to_string(s.estimator_id) + ".csv");
        auto os = open_out(path);
        write_contrast_csv(os, s);
        os.close();
        mw.outputs.push_back(path);
        Json j = summary_json(s);
        j["csv"] = path;
        list.push_back(j);
        if (s.n_valid() == 0) degenerate = true;
        out << to_string(s.estimator_id) << ": mean " << s.mean << ", percent_error " << s.percent_error << " ("
            << s.n_valid() << "/" << s.size() << " valid)\n";
    }
    summary["estimators"] = list;
    const std::string summary_path = with_suffix(a.out, ".summary.json");
    write_text(summary_path, summary.dump(2) + "\n");
    mw.outputs.push_back(summary_path);

    mw.manifest.config = to_key_values(cfg);
    mw.manifest.config["estimator"] = a.estimator;
    mw.manifest.config["window_s"] = format_double(a.window_s);
    mw.manifest.config["band_hz"] = format_double(a.band_hz);
    mw.manifest.seed = cfg.acquisition.rng_seed;
    mw.finish(with_suffix(a.out, ".manifest.json"));
    if (degenerate) {
        err << "no valid windows: the trace shows no droplet modulation\n";
        return kDegenerate;
    }
    return kOk;
}

// ---------------------------------------------------------------- allan

struct AllanArgs {
    std::string input;
    std::string out;
    bool fractional = false;
    bool non_overlapping = false;
    int per_decade = 5;
};

int cmd_allan(const AllanArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot read '" + a.input + "'");
    const ContrastSeries series = read_contrast_csv(in);
    if (series.size() < 6 || series.n_valid() == 0) throw Degenerate("contrast series too short for Allan analysis");
    const double tau0 = (series.times(series.size() - 1) - series.times(0)) / static_cast<double>(series.size() - 1);
    AllanOptions opt;
    opt.fractional = a.fractional;
    opt.kind = a.non_overlapping ? AllanKind::NonOverlapping : AllanKind::Overlapping;
    const double hi = tau0 * static_cast<double>(series.size()) / 3.0;
    const AllanCurve curve = allan_deviation(series, log_spaced(2.0 * tau0, hi, a.per_decade), opt);
    if (curve.size() == 0) throw Degenerate("no Allan points");
    {
        auto os = open_out(a.out);
        write_allan_csv(os, curve);
    }
    Json summary;
    summary["input"] = a.input;
    summary["tau0"] = tau0;
    summary["n_points"] = curve.size();
    summary["kind"] = a.non_overlapping ? "non_overlapping" : "overlapping";
    summary["fractional"] = a.fractional;
    if (curve.size() >= 2) {
        const LineFit fit = allan_slope(curve, curve.taus(0), curve.taus(curve.size() - 1));
        summary["slope"] = fit.slope;
        out << "log-log slope " << fit.slope << " over " << curve.size() << " taus\n";
    }
    const std::string summary_path = with_suffix(a.out, ".summary.json");
    write_text(summary_path, summary.dump(2) + "\n");
    (void)err;

    ManifestWriter mw("allan", argv);
    mw.manifest.config = {{"fractional", a.fractional ? "true" : "false"},
                          {"kind", a.non_overlapping ? "non_overlapping" : "overlapping"},
                          {"per_decade", std::to_string(a.per_decade)}};
    mw.outputs = {a.out, summary_path};
    mw.finish(with_suffix(a.out, ".manifest.json"));
    return kOk;
}

// ---------------------------------------------------------------- titrate

struct TitrateArgs {
    std::string model = "gd";
    std::vector<double> concentrations;
    double duration_s = 120.0;
    double gap_s = 5.0;
    std::string config;
    std::uint64_t seed = 0;
    std::string estimator = "paper";
    double window_s = 0.7;
    double band_hz = 2.0;
    std::string out;
};

int cmd_titrate(const TitrateArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    const RelaxometryModel model = a.model == "gd" ? gd_model() : tempol_model();
    TitrationOptions opt = reference::titration(a.duration_s, a.seed);
    if (!a.config.empty()) opt.config_template = load_checked_config(a.config);
    opt.config_template.acquisition.rng_seed = a.seed;
    opt.per_point_duration = a.duration_s;
    opt.settling_gap = a.gap_s;
    opt.estimator.f_D = opt.config_template.droplets.f_D;
    opt.estimator.f_MW = opt.config_template.mw.f_MW;
    opt.estimator.delta_t = a.window_s;
    opt.estimator.f_D_half_width = a.band_hz;
    opt.estimator.mw_half_width = a.band_hz;
    if (a.estimator == "paper") opt.estimator.estimator_id = EstimatorId::PaperMain;
    else if (a.estimator == "si") opt.estimator.estimator_id = EstimatorId::SIVariant;
    else if (a.estimator == "exact") opt.estimator.estimator_id = EstimatorId::ExactRecovery;
    else {
        err << "titrate supports --estimator paper, si or exact\n";
        return kConfigError;
    }
    {
        ExperimentConfig probe = opt.config_template;
        probe.acquisition.duration = a.gap_s + a.duration_s;
        probe.mw.contrast = model.C_zero;
        if (const auto report = validate(probe); !report.ok()) {
            err << "configuration rejected:\n" << report.describe();
            return kConfigError;
        }
    }

    const TitrationCurve curve = run_titration(model, a.concentrations, opt);
    {
        auto os = open_out(a.out);
        write_titration_csv(os, curve);
    }
    Json j;
    j["model"] = {{"name", a.model}, {"C_zero", model.C_zero}, {"C_floor", model.C_floor}, {"K_half", model.K_half}};
    j["fitted"] = {{"C_zero", curve.fitted.C_zero}, {"C_floor", curve.fitted.C_floor}, {"K_half", curve.fitted.K_half}};
    j["blank_sigma"] = curve.blank_sigma;
    j["lod_M"] = curve.lod ? Json(*curve.lod) : Json(nullptr);
    j["lod_convention"] = curve.lod_convention;
    j["calibration_factor"] = curve.calibration_factor;
    j["per_point_duration_s"] = a.duration_s;
    j["estimator"] = a.estimator;
    const std::string summary_path = with_suffix(a.out, ".summary.json");
    write_text(summary_path, j.dump(2) + "\n");
    if (curve.lod)
        out << "LOD (" << curve.lod_convention << ") = " << *curve.lod << " M\n";
    else
        out << "LOD beyond model range\n";

    ManifestWriter mw("titrate", argv);
    mw.manifest.config = to_key_values(opt.config_template);
    mw.manifest.config["model"] = a.model;
    mw.manifest.config["estimator"] = a.estimator;
    mw.manifest.seed = a.seed;
    mw.outputs = {a.out, summary_path};
    mw.finish(with_suffix(a.out, ".manifest.json"));
    return kOk;
}

// ---------------------------------------------------------------- brownian

struct BrownianArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    double duration_s = 30.0;
    double lag_s = -1.0;
    int bins = 50;
};

int cmd_brownian(const BrownianArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    if (!a.config.empty()) cfg = load_checked_config(a.config);
    KineticsParams kin = cfg.brownian.kinetics;
    kin.duration = a.duration_s;
    if (const auto report = validate(kin); !report.ok()) {
        err << "kinetics rejected:\n" << report.describe();
        return kConfigError;
    }
    const auto ensemble = brownian::simulate(kin, a.seed);
    const double lag = a.lag_s > 0.0 ? a.lag_s : static_cast<double>(ensemble.n_steps() - 1) * kin.dt_step;
    const auto hist = brownian::displacement_histogram(ensemble, lag, a.bins);
    const std::string hist_path = with_suffix(a.out, ".hist.csv");
    {
        auto os = open_out(a.out);
        brownian::write_trajectories_csv(os, ensemble);
        auto hs = open_out(hist_path);
        brownian::write_histogram_csv(hs, hist);
    }
    out << "simulated " << ensemble.n_particles() << " particles over " << ensemble.n_steps() << " steps\n";

    ManifestWriter mw("brownian", argv);
    mw.manifest.config = to_key_values(cfg);
    mw.manifest.config["duration_s"] = format_double(a.duration_s);
    mw.manifest.config["lag_s"] = format_double(lag);
    mw.manifest.config["bins"] = std::to_string(a.bins);
    mw.manifest.seed = a.seed;
    mw.outputs = {a.out, hist_path};
    mw.finish(with_suffix(a.out, ".manifest.json"));
    return kOk;
}

// ---------------------------------------------------------------- replay

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    const RunManifest m = read_manifest(manifest_path);
    if (!m.argv.empty() && m.argv.front() == "replay") {
        err << "refusing to replay a replay\n";
        return kConfigError;
    }
    std::ostringstream sink;
    const int code = run(m.argv, sink, err);
    if (code != kOk && code != kDegenerate) return code;
    bool same = true;
    for (const auto& [path, digest] : m.output_digests) {
        const std::string now = sha256_file(path);
        if (now != digest) {
            err << "digest mismatch: " << path << "\n";
            same = false;
        }
    }
    out << (same ? "replay reproduced all outputs\n" : "replay differs\n");
    return same ? kOk : kReplayMismatch;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"droplock: dual lock-in ODMR simulation and analysis"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Synthesize a PL trace from a config");
    synth->add_option("--config", synth_args.config, "Experiment config (key = value)")->required();
    synth->add_option("--out", synth_args.out, "Output trace path")->required();
    synth->add_option("--seed", synth_args.seed, "Master seed (overrides the config)");
    synth->add_option("--format", synth_args.format, "Trace format")->check(CLI::IsMember({"csv", "bin"}));

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Estimate contrast from a trace");
    analyze->add_option("trace", analyze_args.trace, "Trace file (DLK1 binary or t,value CSV)")->required();
    analyze->add_option("--config", analyze_args.config, "Config providing f_D and f_MW (default: trace sidecar)");
    analyze->add_option("--out", analyze_args.out, "Contrast CSV path")->required();
    analyze->add_option("--estimator", analyze_args.estimator, "Estimator")
        ->check(CLI::IsMember({"paper", "si", "exact", "both", "conventional"}));
    analyze->add_option("--window-s", analyze_args.window_s, "Analysis window length in seconds")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--band-hz", analyze_args.band_hz, "Band half-width in Hz")->check(CLI::PositiveNumber);

    AllanArgs allan_args;
    auto* allan = app.add_subcommand("allan", "Allan deviation of a contrast CSV");
    allan->add_option("contrast_csv", allan_args.input, "Contrast CSV (t,C_hat,valid)")->required();
    allan->add_option("--out", allan_args.out, "Allan CSV path")->required();
    allan->add_flag("--fractional", allan_args.fractional, "Normalize the series by its mean first");
    allan->add_flag("--non-overlapping", allan_args.non_overlapping, "Use the non-overlapping estimator");
    allan->add_option("--per-decade", allan_args.per_decade, "Taus per decade")->check(CLI::Range(1, 100));

    TitrateArgs titrate_args;
    auto* titrate = app.add_subcommand("titrate", "Simulate a titration and estimate the LOD");
    titrate->add_option("--model", titrate_args.model, "Analyte model")->check(CLI::IsMember({"gd", "tempol"}));
    titrate->add_option("--concentrations", titrate_args.concentrations, "Comma list of concentrations in M")
        ->delimiter(',')
        ->required();
    titrate->add_option("--duration-s", titrate_args.duration_s, "Analysed seconds per point")
        ->check(CLI::PositiveNumber);
    titrate->add_option("--gap-s", titrate_args.gap_s, "Settling seconds discarded per point")
        ->check(CLI::NonNegativeNumber);
    titrate->add_option("--config", titrate_args.config, "Template config (default: matched reference)");
    titrate->add_option("--seed", titrate_args.seed, "Master seed");
    titrate->add_option("--estimator", titrate_args.estimator, "Estimator")
        ->check(CLI::IsMember({"paper", "si", "exact"}));
    titrate->add_option("--window-s", titrate_args.window_s, "Analysis window length in seconds")
        ->check(CLI::PositiveNumber);
    titrate->add_option("--band-hz", titrate_args.band_hz, "Band half-width in Hz")->check(CLI::PositiveNumber);
    titrate->add_option("--out", titrate_args.out, "Titration CSV path")->required();

    BrownianArgs brownian_args;
    auto* brown = app.add_subcommand("brownian", "Simulate intra-droplet particle motion");
    brown->add_option("--config", brownian_args.config, "Config providing the kinetics keys");
    brown->add_option("--out", brownian_args.out, "Trajectory CSV path")->required();
    brown->add_option("--seed", brownian_args.seed, "Master seed");
    brown->add_option("--duration-s", brownian_args.duration_s, "Simulated seconds")->check(CLI::PositiveNumber);
    brown->add_option("--lag-s", brownian_args.lag_s, "Histogram lag in seconds (default: full run)");
    brown->add_option("--bins", brownian_args.bins, "Histogram bins")->check(CLI::Range(1, 100000));

    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "Rerun a manifest and verify output digests");
    replay->add_option("manifest", manifest_path, "Manifest JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    synth_args.seed_set = synth->count("--seed") > 0;

    try {
        if (*synth) return cmd_synth(synth_args, args, out, err);
        if (*analyze) return cmd_analyze(analyze_args, args, out, err);
        if (*allan) return cmd_allan(allan_args, args, out, err);
        if (*titrate) return cmd_titrate(titrate_args, args, out, err);
        if (*brown) return cmd_brownian(brownian_args, args, out, err);
        if (*replay) return cmd_replay(manifest_path, out, err);
    } catch (const std::ios_base::failure& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const FormatError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const nlohmann::json::exception& e) {
        err << "I/O error: malformed JSON: " << e.what() << "\n";
        return kIoError;
    } catch (const ConfigError& e) {
        err << e.what();
        return kConfigError;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "analysis failed: " << e.what() << "\n";
        return kDegenerate;
    }
    return kConfigError;
}

}  // namespace droplock::cli
