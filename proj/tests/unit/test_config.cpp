#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gbsde/experiments.hpp"

using namespace gbsde;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("gbsde_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
    const json good = {{"tree", {{"T", 1.0}, {"N", 8}}}, {"generator", {{"kind", "mu_phi"}, {"mu", 0.5}}},
                       {"modulus", {{"kind", "capped_sqrt"}}}, {"seed", 3}};
    const auto c = parse_config(good);
    CHECK(c.steps == 8);
    CHECK(c.seed == 3);
    CHECK(build_generator(c.generator, build_modulus(c.modulus), 1.0)(0.0, -2.0, 4.0) == doctest::Approx(3.0));

    CHECK_THROWS_AS(parse_config({{"tree", {{"T", 1.0}, {"N", 0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"tree", {{"T", 1.0}, {"N", 8}}}, {"colour", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"tree", {{"T", 1.0}, {"N", 8}, {"dt", 0.1}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"tree", {{"T", "one"}, {"N", 8}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"generator", {{"kind", "mu_phi"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"tree", {{"N", 8}}}, {"generator", {{"kind", "cubic"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"tree", {{"N", 8}}}, {"dm", {{"schedule", {4, 2}}}}}), ConfigError);

    CHECK(config_hash(good) == config_hash(good));
    CHECK(config_hash(good).size() == 16);
    json other = good;
    other["seed"] = 4;
    CHECK(config_hash(good) != config_hash(other));
    other = good;
    other["output_dir"] = "elsewhere";
    other["threads"] = 4;
    CHECK(config_hash(good) == config_hash(other));
}

TEST_CASE("terminals") {
    const auto tree = build_tree(1.0, 4);
    TerminalSpec t;
    t.kind = "call";
    t.strike = 0.5;
    const auto x = build_terminal(tree, t, 4);
    CHECK(x.at(4, 4) == doctest::Approx(1.5));
    CHECK(x.at(4, 0) == 0.0);
}

TEST_CASE("solve runner") {
    const auto dir = scratch("solve");
    auto c = parse_config({{"tree", {{"T", 1.0}, {"N", 8}}}, {"output_dir", dir.string()}});
    std::ostringstream log;
    CHECK(run_solve(c, log) == exit_ok);
    std::ifstream csv(dir / "solution.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "step,up_moves,brownian_value,Y,Z,defect");
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string step, up, b, y;
        std::getline(ss, step, ',');
        std::getline(ss, up, ',');
        std::getline(ss, b, ',');
        std::getline(ss, y, ',');
        CHECK(std::stod(y) == doctest::Approx(std::stod(b)).epsilon(1e-12));
    }
    const auto summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary["config_hash"] == config_hash(c.raw));
    CHECK(summary["engine_version"] == engine_version());

    auto bad = parse_config({{"tree", {{"T", 1.0}, {"N", 2}}},
                             {"generator", {{"kind", "linear"}, {"a", 4.0}}},
                             {"output_dir", dir.string()}});
    CHECK(run_solve(bad, log) == exit_numerical_failure);
    CHECK(log.str().find("mu dt") != std::string::npos);
}

TEST_CASE("properties runner flags the constant driver") {
    const auto dir = scratch("props");
    auto c = parse_config({{"tree", {{"T", 1.0}, {"N", 6}}},
                           {"generator", {{"kind", "constant"}, {"c", 1.0}}},
                           {"modulus", {{"kind", "zero"}}},
                           {"properties", {{"trials", 10}, {"a1_samples", 100}}},
                           {"output_dir", dir.string()}});
    std::ostringstream log;
    CHECK(run_properties(c, log) == exit_property_failure);
    CHECK(log.str().find("h2_zero") != std::string::npos);

    c = parse_config({{"tree", {{"T", 1.0}, {"N", 6}}},
                      {"generator", {{"kind", "mu_phi"}, {"mu", 0.3}}},
                      {"modulus", {{"kind", "capped_sqrt"}}},
                      {"properties", {{"trials", 10}, {"a1_samples", 100}}},
                      {"output_dir", dir.string()}});
    CHECK(run_properties(c, log) == exit_ok);
}

TEST_CASE("runners are deterministic") {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    json raw = {{"tree", {{"T", 1.0}, {"N", 16}}}, {"generator", {{"kind", "zero"}}},
                {"dm", {{"schedule", {1, 2, 4}}, {"target_residual", 0.5}}}};
    raw["output_dir"] = a.string();
    auto ca = parse_config(raw);
    raw["output_dir"] = b.string();
    auto cb = parse_config(raw);
    std::ostringstream log;
    CHECK(run_dm(ca, log) == exit_ok);
    CHECK(run_dm(cb, log) == exit_ok);
    CHECK(slurp(a / "dm_levels.csv") == slurp(b / "dm_levels.csv"));
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
}

TEST_CASE("convergence and fixed point runners") {
    const auto dir = scratch("conv");
    auto c = parse_config({{"tree", {{"T", 1.0}, {"N", 8}}},
                           {"generator", {{"kind", "linear"}, {"a", 0.5}}},
                           {"terminal", {{"kind", "constant"}, {"value", 1.0}}},
                           {"convergence", {{"steps", {32, 64, 128}}, {"reference_steps", 2048}}},
                           {"fixedpoint", {{"lambda", 0.25}}},
                           {"output_dir", dir.string()}});
    std::ostringstream log;
    CHECK(run_convergence(c, log) == exit_ok);
    CHECK(run_fixedpoint(c, log) == exit_ok);
    CHECK(run_command("nonsense", c, log) == exit_config_invalid);
}
