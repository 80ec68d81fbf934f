#include "gbsde/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#ifndef GBSDE_VERSION
#define GBSDE_VERSION "0.0.0"
#endif

namespace gbsde {

namespace {

using nlohmann::json;

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
        }
    }
}

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where + "." + key + ": must be finite");
    return d;
}

long long get_integer(const json& j, const char* key, long long fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<long long>();
}

std::string get_string(const json& j, const char* key, const std::string& fallback,
                       const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

void one_of(const std::string& value, std::initializer_list<const char*> options, const std::string& where) {
    if (std::none_of(options.begin(), options.end(), [&](const char* o) { return value == o; })) {
        throw ConfigError(where + ": unsupported value '" + value + "'");
    }
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

std::array<double, 2> get_range(const json& j, const char* key, std::array<double, 2> fallback,
                                const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + "." + key + ": expected [lo, hi]");
    }
    std::array<double, 2> r{v[0].get<double>(), v[1].get<double>()};
    require(std::isfinite(r[0]) && std::isfinite(r[1]) && r[0] <= r[1], where + "." + key + ": need lo <= hi");
    return r;
}

ModulusSpec parse_modulus(const json& j) {
    only_keys(j, {"kind", "c"}, "modulus");
    ModulusSpec m;
    m.kind = get_string(j, "kind", m.kind, "modulus");
    one_of(m.kind, {"identity", "scaled", "sqrt", "capped_sqrt", "saturating", "zero"}, "modulus.kind");
    m.c = get_number(j, "c", m.c, "modulus");
    require(m.c > 0.0, "modulus.c: must be > 0");
    return m;
}

GeneratorSpec parse_generator(const json& j) {
    only_keys(j, {"kind", "mu", "sign", "a", "b", "c"}, "generator");
    GeneratorSpec g;
    g.kind = get_string(j, "kind", g.kind, "generator");
    one_of(g.kind, {"mu_phi", "time_scaled", "linear", "constant", "zero"}, "generator.kind");
    g.mu = get_number(j, "mu", g.mu, "generator");
    require(g.mu >= 0.0, "generator.mu: must be >= 0");
    g.sign = static_cast<int>(get_integer(j, "sign", g.sign, "generator"));
    require(g.sign == 1 || g.sign == -1, "generator.sign: must be 1 or -1");
    g.a = get_number(j, "a", g.a, "generator");
    g.b = get_number(j, "b", g.b, "generator");
    g.c = get_number(j, "c", g.c, "generator");
    return g;
}

TerminalSpec parse_terminal(const json& j) {
    only_keys(j, {"kind", "value", "scale", "strike"}, "terminal");
    TerminalSpec t;
    t.kind = get_string(j, "kind", t.kind, "terminal");
    one_of(t.kind, {"brownian", "abs_brownian", "sin_brownian", "call", "constant"}, "terminal.kind");
    t.value = get_number(j, "value", t.value, "terminal");
    t.scale = get_number(j, "scale", t.scale, "terminal");
    t.strike = get_number(j, "strike", t.strike, "terminal");
    return t;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    only_keys(j,
              {"tree", "modulus", "generator", "terminal", "seed", "output_dir", "threads", "properties",
               "dm", "fixedpoint", "recover", "convergence"},
              "config");
    ExperimentConfig c;
    c.raw = j;
    if (!j.contains("tree")) throw ConfigError("config: missing 'tree'");
    const auto& tree = j.at("tree");
    only_keys(tree, {"T", "N"}, "tree");
    c.horizon = get_number(tree, "T", c.horizon, "tree");
    require(c.horizon > 0.0, "tree.T: must be > 0");
    const long long n = get_integer(tree, "N", c.steps, "tree");
    require(n >= 1 && n <= 100000, "tree.N: must be in [1, 100000]");
    c.steps = static_cast<int>(n);

    if (j.contains("modulus")) c.modulus = parse_modulus(j.at("modulus"));
    if (j.contains("generator")) c.generator = parse_generator(j.at("generator"));
    if (j.contains("terminal")) c.terminal = parse_terminal(j.at("terminal"));
    const long long seed = get_integer(j, "seed", 1, "config");
    require(seed >= 0, "seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.output_dir = get_string(j, "output_dir", c.output_dir, "config");
    require(!c.output_dir.empty(), "output_dir: must be nonempty");
    c.threads = static_cast<int>(get_integer(j, "threads", c.threads, "config"));
    require(c.threads >= 1, "threads: must be >= 1");

    if (j.contains("properties")) {
        const auto& p = j.at("properties");
        only_keys(p, {"trials", "tolerance", "a1_samples", "domain_radius"}, "properties");
        c.properties.trials = static_cast<int>(get_integer(p, "trials", c.properties.trials, "properties"));
        c.properties.tolerance = get_number(p, "tolerance", c.properties.tolerance, "properties");
        c.properties.a1_samples =
            static_cast<int>(get_integer(p, "a1_samples", c.properties.a1_samples, "properties"));
        c.properties.domain_radius = get_number(p, "domain_radius", c.properties.domain_radius, "properties");
        require(c.properties.trials >= 1 && c.properties.a1_samples >= 1, "properties: counts must be >= 1");
        require(c.properties.tolerance >= 0.0 && c.properties.domain_radius > 0.0,
                "properties: tolerance >= 0 and domain_radius > 0");
    }
    if (j.contains("dm")) {
        const auto& d = j.at("dm");
        only_keys(d, {"process", "gamma", "schedule", "target_residual"}, "dm");
        c.dm.process = get_string(d, "process", c.dm.process, "dm");
        one_of(c.dm.process, {"linear_decay", "supersolution"}, "dm.process");
        c.dm.gamma = get_number(d, "gamma", c.dm.gamma, "dm");
        require(c.dm.gamma >= 0.0, "dm.gamma: must be >= 0");
        if (d.contains("schedule")) {
            const auto& s = d.at("schedule");
            require(s.is_array() && !s.empty(), "dm.schedule: expected a nonempty array");
            for (const auto& v : s) {
                require(v.is_number() && v.get<double>() > 0.0, "dm.schedule: entries must be > 0");
                c.dm.schedule.push_back(v.get<double>());
            }
            require(std::is_sorted(c.dm.schedule.begin(), c.dm.schedule.end()) &&
                        std::adjacent_find(c.dm.schedule.begin(), c.dm.schedule.end()) == c.dm.schedule.end(),
                    "dm.schedule: must be strictly ascending");
        }
        if (d.contains("target_residual")) {
            c.dm.target_residual = get_number(d, "target_residual", 0.0, "dm");
            require(*c.dm.target_residual >= 0.0, "dm.target_residual: must be >= 0");
        }
    }
    if (j.contains("fixedpoint")) {
        const auto& f = j.at("fixedpoint");
        only_keys(f, {"lambda", "forcing", "tolerance", "piece_steps"}, "fixedpoint");
        c.fixedpoint.lambda = get_number(f, "lambda", c.fixedpoint.lambda, "fixedpoint");
        require(c.fixedpoint.lambda >= 0.0, "fixedpoint.lambda: must be >= 0");
        c.fixedpoint.forcing = get_string(f, "forcing", c.fixedpoint.forcing, "fixedpoint");
        one_of(c.fixedpoint.forcing, {"linear", "sin"}, "fixedpoint.forcing");
        c.fixedpoint.tolerance = get_number(f, "tolerance", c.fixedpoint.tolerance, "fixedpoint");
        require(c.fixedpoint.tolerance > 0.0, "fixedpoint.tolerance: must be > 0");
        if (f.contains("piece_steps")) {
            const long long p = get_integer(f, "piece_steps", 1, "fixedpoint");
            require(p >= 1, "fixedpoint.piece_steps: must be >= 1");
            c.fixedpoint.piece_steps = static_cast<int>(p);
        }
    }
    if (j.contains("recover")) {
        const auto& r = j.at("recover");
        only_keys(r, {"level", "y_range", "y_count", "z_range", "z_count", "barrier", "trials"}, "recover");
        c.recover.level = static_cast<int>(get_integer(r, "level", c.recover.level, "recover"));
        require(c.recover.level >= 0 && c.recover.level <= 20, "recover.level: must be in [0, 20]");
        c.recover.y_range = get_range(r, "y_range", c.recover.y_range, "recover");
        c.recover.z_range = get_range(r, "z_range", c.recover.z_range, "recover");
        c.recover.y_count = static_cast<int>(get_integer(r, "y_count", c.recover.y_count, "recover"));
        c.recover.z_count = static_cast<int>(get_integer(r, "z_count", c.recover.z_count, "recover"));
        require(c.recover.y_count >= 1 && c.recover.z_count >= 1, "recover: counts must be >= 1");
        if (r.contains("barrier")) {
            c.recover.barrier = get_number(r, "barrier", 1.0, "recover");
            require(*c.recover.barrier > 0.0, "recover.barrier: must be > 0");
        }
        c.recover.trials = static_cast<int>(get_integer(r, "trials", c.recover.trials, "recover"));
        require(c.recover.trials >= 1, "recover.trials: must be >= 1");
    }
    if (j.contains("convergence")) {
        const auto& v = j.at("convergence");
        only_keys(v, {"steps", "reference_steps"}, "convergence");
        if (v.contains("steps")) {
            const auto& s = v.at("steps");
            require(s.is_array() && s.size() >= 2, "convergence.steps: expected at least two entries");
            c.convergence.steps.clear();
            for (const auto& e : s) {
                require(e.is_number_integer() && e.get<long long>() >= 1, "convergence.steps: entries must be >= 1");
                c.convergence.steps.push_back(e.get<int>());
            }
            require(std::is_sorted(c.convergence.steps.begin(), c.convergence.steps.end()),
                    "convergence.steps: must ascend");
        }
        c.convergence.reference_steps =
            static_cast<int>(get_integer(v, "reference_steps", c.convergence.reference_steps, "convergence"));
        require(c.convergence.reference_steps > c.convergence.steps.back(),
                "convergence.reference_steps: must exceed every entry of steps");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

Modulus build_modulus(const ModulusSpec& spec) {
    if (spec.kind == "identity") return Modulus::identity();
    if (spec.kind == "scaled") return Modulus::scaled(spec.c);
    if (spec.kind == "sqrt") return Modulus::sqrt();
    if (spec.kind == "capped_sqrt") return Modulus::capped_sqrt();
    if (spec.kind == "saturating") return Modulus::saturating(spec.c);
    return Modulus::zero();
}

Generator build_generator(const GeneratorSpec& spec, const Modulus& phi, double horizon) {
    if (spec.kind == "mu_phi") return make_mu_phi(spec.mu, phi, spec.sign);
    if (spec.kind == "time_scaled") {
        const double mu = spec.mu;
        const int sign = spec.sign;
        return Generator("time_scaled",
                         Generator::TimeDriver([mu, phi, sign](double t, double y, double z) {
                             return sign * ((1.0 + t) * mu * std::abs(y) + phi(std::abs(z)));
                         }),
                         (1.0 + horizon) * mu, phi, true);
    }
    if (spec.kind == "linear") return make_linear(spec.a, spec.b, spec.c);
    if (spec.kind == "constant") return make_constant(spec.c);
    return make_zero();
}

Process build_terminal(const BinomialTree& tree, const TerminalSpec& spec, int step) {
    return Process::from_function(tree, step, step, [&](int k, int j) {
        const double b = tree.brownian(k, j);
        if (spec.kind == "brownian") return spec.scale * b;
        if (spec.kind == "abs_brownian") return spec.scale * std::abs(b);
        if (spec.kind == "sin_brownian") return spec.scale * std::sin(b);
        if (spec.kind == "call") return std::max(b - spec.strike, 0.0);
        return spec.value;
    });
}

std::string config_hash(const json& raw) {
    json keyed = raw;
    if (keyed.is_object()) {
        keyed.erase("output_dir");
        keyed.erase("threads");
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : keyed.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const char* engine_version() { return GBSDE_VERSION; }

}  // namespace gbsde
