#pragma once

#include "nsdd/optimizer.hpp"
#include "nsdd/rom.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdd::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration (desk-scale defaults). Every key is
/// documented in the README; unknown keys are rejected.
struct RunConfig {
    std::string geometry = "bfs";  // bfs | rect
    double h = 0.5;
    double x_gamma = 9.0;
    double dt = 0.01;
    int steps = 20;

    double ubar_min = 0.5, ubar_max = 4.5;
    double nu_min = 0.4, nu_max = 2.0;
    int train_count = 8;
    std::uint64_t seed = 20260815ULL;
    rom::ModeCounts modes;

    std::string mode = "fff";
    double test_ubar = 4.5, test_nu = 0.4;
    std::string out_dir = "out";
    int workers = 1;
    std::string precond = "riesz";  // riesz | identity
    coupling::LbfgsSettings lbfgs;

    void validate() const;  // throws ConfigError on violated invariants
};

/// Parses a config file; throws ConfigError on unreadable files, malformed
/// lines, unknown keys or invalid values. Lines are `key = value`, blank, or
/// `#` comments.
RunConfig load_config(const std::string& path);

/// Applies one `key=value` assignment (also used for CLI overrides).
void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value);

/// Seeded uniform training samples (Ubar, nu) from the parameter box, using
/// an explicit bit mapping so the draw is identical across platforms.
std::vector<std::array<double, 2>> sample_training(const RunConfig& c);

}  // namespace nsdd::cli
