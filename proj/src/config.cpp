#include "nsdd/config.hpp"

#include "nsdd/coupling.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace nsdd::cli {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + v +
                          "'");
    }
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "geometry") {
        if (value != "bfs" && value != "rect")
            throw ConfigError("config key 'geometry': want bfs|rect, got '" + value + "'");
        c.geometry = value;
    } else if (key == "h") {
        c.h = parse_double(key, value);
    } else if (key == "x_gamma") {
        c.x_gamma = parse_double(key, value);
    } else if (key == "dt") {
        c.dt = parse_double(key, value);
    } else if (key == "steps") {
        c.steps = parse_int(key, value);
    } else if (key == "t_final") {
        const double T = parse_double(key, value);
        if (!(c.dt > 0.0) || !(T >= c.dt))
            throw ConfigError("config key 't_final': need T >= dt > 0 (set dt first)");
        c.steps = static_cast<int>(std::lround(T / c.dt));
    } else if (key == "ubar_min") {
        c.ubar_min = parse_double(key, value);
    } else if (key == "ubar_max") {
        c.ubar_max = parse_double(key, value);
    } else if (key == "nu_min") {
        c.nu_min = parse_double(key, value);
    } else if (key == "nu_max") {
        c.nu_max = parse_double(key, value);
    } else if (key == "train_count") {
        c.train_count = parse_int(key, value);
    } else if (key == "seed") {
        c.seed = parse_u64(key, value);
    } else if (key == "modes_u1") {
        c.modes.u1 = parse_int(key, value);
    } else if (key == "modes_u2") {
        c.modes.u2 = parse_int(key, value);
    } else if (key == "modes_p") {
        c.modes.p = parse_int(key, value);
    } else if (key == "modes_g") {
        c.modes.g = parse_int(key, value);
    } else if (key == "mode") {
        c.mode = coupling::mode_name(coupling::parse_mode(value));
    } else if (key == "test_ubar") {
        c.test_ubar = parse_double(key, value);
    } else if (key == "test_nu") {
        c.test_nu = parse_double(key, value);
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key == "workers") {
        c.workers = parse_int(key, value);
    } else if (key == "precond") {
        if (value != "riesz" && value != "identity")
            throw ConfigError("config key 'precond': want riesz|identity, got '" + value + "'");
        c.precond = value;
    } else if (key == "gtol") {
        c.lbfgs.gtol = parse_double(key, value);
    } else if (key == "ftol") {
        c.lbfgs.ftol = parse_double(key, value);
    } else if (key == "max_opt_iterations") {
        c.lbfgs.max_iterations = parse_int(key, value);
    } else if (key == "lbfgs_memory") {
        c.lbfgs.memory = parse_int(key, value);
    } else if (key == "max_line_search") {
        c.lbfgs.max_line_search = parse_int(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void RunConfig::validate() const {
    if (!(h > 0.0)) throw ConfigError("config: h must be > 0");
    if (!(dt > 0.0)) throw ConfigError("config: dt must be > 0");
    if (steps < 1) throw ConfigError("config: steps must be >= 1");
    if (!(ubar_min <= ubar_max) || !(nu_min <= nu_max) || !(nu_min > 0.0))
        throw ConfigError("config: parameter box is empty or non-positive");
    if (train_count < 1) throw ConfigError("config: train_count must be >= 1");
    if (modes.u1 < 1 || modes.u2 < 1 || modes.p < 1 || modes.g < 1)
        throw ConfigError("config: mode counts must be positive");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (!(test_nu > 0.0)) throw ConfigError("config: test_nu must be > 0");
    if (lbfgs.memory < 1 || lbfgs.max_iterations < 1 || lbfgs.max_line_search < 1)
        throw ConfigError("config: optimiser settings must be positive");
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << path << ":" << lineno << ": expected key = value";
            throw ConfigError(os.str());
        }
        apply_config_entry(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    c.validate();
    return c;
}

std::vector<std::array<double, 2>> sample_training(const RunConfig& c) {
    std::mt19937_64 rng(c.seed);
    auto unit = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1p-53;  // [0,1), platform-exact
    };
    std::vector<std::array<double, 2>> mus(static_cast<size_t>(c.train_count));
    for (auto& mu : mus) {
        mu[0] = c.ubar_min + (c.ubar_max - c.ubar_min) * unit();
        mu[1] = c.nu_min + (c.nu_max - c.nu_min) * unit();
    }
    return mus;
}

}  // namespace nsdd::cli
