#ifndef PSTIRLING_REPORT_HPP
#define PSTIRLING_REPORT_HPP

#include <json.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace pstirling {

// One verification record; reports are line-delimited JSON.
struct Check {
    std::string check;
    std::string params;
    bool pass = false;
    std::string detail;
};

struct Report {
    std::vector<Check> checks;

    void add(std::string check, std::string params, bool pass, std::string detail = "") {
        checks.push_back({std::move(check), std::move(params), pass, std::move(detail)});
    }
    void merge(const Report& other) {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    }
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    long failures() const {
        long f = 0;
        for (const auto& c : checks)
            if (!c.pass) ++f;
        return f;
    }
    void write_jsonl(std::ostream& os) const {
        for (const auto& c : checks) {
            nlohmann::json j{{"check", c.check},
                             {"params", c.params},
                             {"status", c.pass ? "pass" : "fail"},
                             {"detail", c.detail}};
            os << j.dump() << "\n";
        }
    }
};

}  // namespace pstirling

#endif
