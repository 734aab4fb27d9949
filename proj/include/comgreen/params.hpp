#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <string>

namespace comgreen {

/// Physical constants shared by the catalog systems; natural units by default.
///
/// `omega` is the oscillator frequency for `ho` and the cyclotron frequency eB/(mc) for
/// `magnetic`; `eE` is the product of charge and field strength for `uniform`.
struct PhysicalParams {
    double hbar = 1.0;
    double m = 1.0;
    double omega = 1.0;
    double k = 1.0;
    double eE = 1.0;

    /// Values under the names used in model-language expressions.
    std::map<std::string, double> symbols() const {
        return {{"hbar", hbar}, {"m", m}, {"w", omega}, {"omega", omega}, {"k", k}, {"eE", eE}};
    }

    nlohmann::json to_json() const {
        return {{"hbar", hbar}, {"m", m}, {"omega", omega}, {"k", k}, {"eE", eE}};
    }
};

}  // namespace comgreen
