#include "gbsde/report.hpp"

#include <nlohmann/json.hpp>

namespace gbsde {

bool ValidationReport::passed() const {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

const CheckResult* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

CheckResult& ValidationReport::add(std::string name) {
    CheckResult c;
    c.name = std::move(name);
    checks.push_back(std::move(c));
    return checks.back();
}

void ValidationReport::merge(const ValidationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

void to_json(nlohmann::json& j, const CheckResult& c) {
    j = nlohmann::json{{"name", c.name},
                       {"passed", c.passed},
                       {"worst_violation", c.worst_violation},
                       {"witness", c.witness},
                       {"detail", c.detail}};
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
    j = nlohmann::json{{"passed", r.passed()}, {"checks", r.checks}};
}

}  // namespace gbsde
