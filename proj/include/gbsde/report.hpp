#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gbsde {

struct CheckResult {
    std::string name;
    bool passed = true;
    // Largest violation seen (positive means the asserted inequality failed by that much).
    double worst_violation = 0.0;
    std::string witness;
    std::string detail;
};

/// Outcome of a battery of randomized or grid assertions.
struct ValidationReport {
    std::vector<CheckResult> checks;

    bool passed() const;
    const CheckResult* find(const std::string& name) const;
    CheckResult& add(std::string name);
    void merge(const ValidationReport& other);
};

void to_json(nlohmann::json& j, const CheckResult& c);
void to_json(nlohmann::json& j, const ValidationReport& r);

}  // namespace gbsde
