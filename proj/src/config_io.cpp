#include "droplock/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace droplock {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueMap parse_key_values(const std::string& text) {
    KeyValueMap kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return kv;
}

std::string format_key_values(const KeyValueMap& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ParseError("not a real number: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("not an unsigned integer: '" + s + "'");
    return v;
}

namespace {

// One table drives both directions so the key set cannot drift apart.
struct Field {
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename Accessor>
Field real_field(const char* key, Accessor acc) {
    return {key,
            [acc](const ExperimentConfig& c) {
                ExperimentConfig copy = c;
                return format_double(acc(copy));
            },
            [acc](ExperimentConfig& c, const std::string& v) { acc(c) = parse_double(v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> t;
        t.push_back(real_field("sample_rate", [](ExperimentConfig& c) -> double& { return c.acquisition.sample_rate; }));
        t.push_back(real_field("duration", [](ExperimentConfig& c) -> double& { return c.acquisition.duration; }));
        t.push_back({"seed", [](const ExperimentConfig& c) { return std::to_string(c.acquisition.rng_seed); },
                     [](ExperimentConfig& c, const std::string& v) { c.acquisition.rng_seed = parse_u64(v); }});

        t.push_back(real_field("f_D", [](ExperimentConfig& c) -> double& { return c.droplets.f_D; }));
        t.push_back({"profile", [](const ExperimentConfig& c) { return to_string(c.droplets.profile); },
                     [](ExperimentConfig& c, const std::string& v) { c.droplets.profile = parse_profile(v); }});
        t.push_back(real_field("duty", [](ExperimentConfig& c) -> double& { return c.droplets.duty; }));
        t.push_back(real_field("edge_fraction", [](ExperimentConfig& c) -> double& { return c.droplets.edge_fraction; }));
        t.push_back(real_field("g0", [](ExperimentConfig& c) -> double& { return c.droplets.g0; }));
        t.push_back(real_field("m0", [](ExperimentConfig& c) -> double& { return c.droplets.m0; }));
        t.push_back(real_field("rate_jitter_sigma",
                               [](ExperimentConfig& c) -> double& { return c.droplets.rate_jitter_sigma; }));
        t.push_back(real_field("per_droplet_sigma",
                               [](ExperimentConfig& c) -> double& { return c.droplets.per_droplet_sigma; }));

        t.push_back(real_field("f_MW", [](ExperimentConfig& c) -> double& { return c.mw.f_MW; }));
        t.push_back(real_field("phase", [](ExperimentConfig& c) -> double& { return c.mw.phase; }));
        t.push_back(real_field("contrast", [](ExperimentConfig& c) -> double& { return c.mw.contrast; }));
        t.push_back({"waveform", [](const ExperimentConfig& c) { return to_string(c.mw.waveform); },
                     [](ExperimentConfig& c, const std::string& v) { c.mw.waveform = parse_waveform(v); }});

        t.push_back(real_field("shot_scale", [](ExperimentConfig& c) -> double& { return c.noise.shot_scale; }));
        t.push_back(real_field("background_b0", [](ExperimentConfig& c) -> double& { return c.noise.background_b0; }));
        t.push_back(real_field("background_decay_tau",
                               [](ExperimentConfig& c) -> double& { return c.noise.background_decay_tau; }));
        t.push_back(real_field("background_white_sigma",
                               [](ExperimentConfig& c) -> double& { return c.noise.background_white_sigma; }));
        t.push_back(real_field("laser_drift_fraction",
                               [](ExperimentConfig& c) -> double& { return c.noise.laser_drift_fraction; }));
        t.push_back(real_field("laser_drift_period",
                               [](ExperimentConfig& c) -> double& { return c.noise.laser_drift_period; }));

        t.push_back(real_field("brownian_depth", [](ExperimentConfig& c) -> double& { return c.brownian.depth; }));
        t.push_back(real_field("beam_radius", [](ExperimentConfig& c) -> double& { return c.brownian.beam_radius; }));
        t.push_back(real_field("diffusion_coeff",
                               [](ExperimentConfig& c) -> double& { return c.brownian.kinetics.diffusion_coeff; }));
        t.push_back(real_field("droplet_radius",
                               [](ExperimentConfig& c) -> double& { return c.brownian.kinetics.droplet_radius; }));
        t.push_back({"n_particles",
                     [](const ExperimentConfig& c) { return std::to_string(c.brownian.kinetics.n_particles); },
                     [](ExperimentConfig& c, const std::string& v) {
                         c.brownian.kinetics.n_particles = static_cast<std::size_t>(parse_u64(v));
                     }});
        t.push_back(real_field("dt_step", [](ExperimentConfig& c) -> double& { return c.brownian.kinetics.dt_step; }));
        t.push_back({"heavy_tail_alpha",
                     [](const ExperimentConfig& c) {
                         const auto& a = c.brownian.kinetics.heavy_tail_alpha;
                         return a ? format_double(*a) : std::string("none");
                     },
                     [](ExperimentConfig& c, const std::string& v) {
                         if (v == "none")
                             c.brownian.kinetics.heavy_tail_alpha.reset();
                         else
                             c.brownian.kinetics.heavy_tail_alpha = parse_double(v);
                     }});
        return t;
    }();
    return table;
}

}  // namespace

KeyValueMap to_key_values(const ExperimentConfig& config) {
    KeyValueMap kv;
    for (const auto& f : fields()) kv[f.key] = f.get(config);
    return kv;
}

ExperimentConfig config_from_key_values(const KeyValueMap& kv) {
    ExperimentConfig c;
    for (const auto& [key, value] : kv) {
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
        if (it == table.end()) throw ParseError("unknown config key '" + key + "'");
        try {
            it->set(c, value);
        } catch (const std::invalid_argument& e) {
            throw ParseError(key + ": " + e.what());
        }
    }
    return c;
}

std::string serialize(const ExperimentConfig& config) {
    return "# droplock experiment config\n" + format_key_values(to_key_values(config));
}

ExperimentConfig parse_config(const std::string& text) { return config_from_key_values(parse_key_values(text)); }

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace droplock
