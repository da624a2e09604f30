#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kslab {

struct Check {
    std::string id;
    double value = 0;
    double bound = 0;
    bool pass = false;
};

struct BatteryOptions {
    bool quick = false; // 8^3 velocity grid and small ensembles
    std::uint64_t seed = 1;
};

// Property battery over all modules. Each check compares a computed
// quantity against an independent reference or bound.
std::vector<Check> run_battery(const BatteryOptions& opt);

// CSV with header check_id,value,bound,status.
std::string battery_csv(const std::vector<Check>& checks);

} // namespace kslab
