#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gbsde/errors.hpp"
#include "gbsde/generator.hpp"
#include "gbsde/tree.hpp"

namespace gbsde {

/// Malformed or out-of-range experiment configuration.
class ConfigError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

struct ModulusSpec {
    std::string kind = "identity";  // identity|scaled|sqrt|capped_sqrt|saturating|zero
    double c = 1.0;
};

struct GeneratorSpec {
    // mu_phi: sign (mu|y| + phi(|z|)); time_scaled: (1 + t) mu |y| + phi(|z|);
    // linear: a y + b z + c; constant: c; zero.
    std::string kind = "zero";
    double mu = 0.0;
    int sign = 1;
    double a = 0.0, b = 0.0, c = 0.0;
};

struct TerminalSpec {
    // brownian: scale B; abs_brownian: scale |B|; sin_brownian: scale sin(B);
    // call: max(B - strike, 0); constant: value.
    std::string kind = "brownian";
    double value = 0.0;
    double scale = 1.0;
    double strike = 0.0;
};

struct PropertiesSpec {
    int trials = 200;
    double tolerance = 1e-10;
    int a1_samples = 2000;
    double domain_radius = 5.0;
};

struct DmSpec {
    std::string process = "linear_decay";  // linear_decay: 1 - t; supersolution: solve(g, X, gamma)
    double gamma = 1.0;
    std::vector<double> schedule;
    std::optional<double> target_residual;
};

struct FixedPointSpec {
    double lambda = 1.0;
    std::string forcing = "linear";  // linear: lambda y; sin: lambda sin(y)
    double tolerance = 1e-10;
    std::optional<int> piece_steps;
};

struct RecoverSpec {
    int level = 3;
    std::array<double, 2> y_range{-2.0, 2.0};
    int y_count = 5;
    std::array<double, 2> z_range{-2.0, 2.0};
    int z_count = 5;
    std::optional<double> barrier;
    int trials = 50;
};

struct ConvergenceSpec {
    std::vector<int> steps{32, 64, 128};
    int reference_steps = 1024;
};

struct ExperimentConfig {
    nlohmann::json raw;
    double horizon = 1.0;
    int steps = 64;
    ModulusSpec modulus;
    GeneratorSpec generator;
    TerminalSpec terminal;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int threads = 1;
    PropertiesSpec properties;
    DmSpec dm;
    FixedPointSpec fixedpoint;
    RecoverSpec recover;
    ConvergenceSpec convergence;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

Modulus build_modulus(const ModulusSpec& spec);
/// Declared (mu, phi) come from the descriptor; time_scaled declares (1 + T) mu.
Generator build_generator(const GeneratorSpec& spec, const Modulus& phi, double horizon);
Process build_terminal(const BinomialTree& tree, const TerminalSpec& spec, int step);

/// 16 hex digits of FNV-1a over the compact dump of the raw config, ignoring
/// output_dir and threads (they never change results).
std::string config_hash(const nlohmann::json& raw);
const char* engine_version();

}  // namespace gbsde
