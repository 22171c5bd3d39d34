#pragma once

// CLI scenario configs: a thin validated wrapper over a JSON object.  The
// whitelist per command is the schema; unknown keys are rejected so typos
// fail loudly, and serialization is the identity on the stored object, which
// makes config round-trips lossless by construction.

#include "flab/common.hpp"
#include "flab/extended.hpp"

#include <json.hpp>

#include <set>
#include <string>

namespace flab {

using Json = nlohmann::json;

inline const std::map<std::string, std::set<std::string>>& scenario_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"axioms",
         {"command", "backend", "times", "grid_lo", "grid_hi", "grid_n", "tol",
          "p4_epsilon", "p4_C", "alpha", "n_max", "degree", "dt", "n_paths", "seed",
          "expect_fail", "out_dir"}},
        {"transport",
         {"command", "flow", "a", "b", "r", "capacity", "step", "times", "grid_lo",
          "grid_hi", "grid_n", "delta", "growth_C", "tol", "out_dir"}},
        {"poly",
         {"command", "preset", "kappa", "s_vol", "mu", "degree", "times", "x0s",
          "grid_lo", "grid_hi", "grid_n", "mc_compare", "dt", "n_paths", "seed", "tol",
          "out_dir"}},
        {"diffusion",
         {"command", "preset", "kappa", "s_vol", "mu", "T", "dt", "n_paths", "seed",
          "x0", "dump", "omega", "times", "x0s", "out_dir"}},
        {"extended",
         {"command", "preset", "kappa", "s_vol", "mu", "omega", "T", "dt", "n_paths",
          "seed", "x0", "indicators", "tol", "out_dir"}},
        {"counterexample",
         {"command", "alpha", "n_max", "t_ladder", "n0", "h", "expect_fail", "out_dir"}},
        {"approx",
         {"command", "target", "R", "degrees", "grid_lo", "grid_hi", "grid_n",
          "clamp_slack", "out_dir"}},
    };
    return schema;
}

struct Scenario {
    Json data;

    static Scenario from_json(const Json& j) {
        if (!j.is_object()) throw ConfigInvalid("scenario must be a JSON object");
        if (!j.contains("command") || !j.at("command").is_string())
            throw ConfigInvalid("scenario needs a string 'command'");
        std::string cmd = j.at("command").get<std::string>();
        auto it = scenario_schema().find(cmd);
        if (it == scenario_schema().end())
            throw ConfigInvalid("unknown command '" + cmd + "'");
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (!it->second.count(key))
                throw ConfigInvalid("unknown key '" + key + "' for command '" + cmd + "'");
        }
        Scenario s;
        s.data = j;
        return s;
    }

    Json to_json() const { return data; }
    std::string command() const { return data.at("command").get<std::string>(); }

    bool has(const std::string& key) const { return data.contains(key); }

    template <typename T>
    T get_or(const std::string& key, T fallback) const {
        if (!data.contains(key)) return fallback;
        try {
            return data.at(key).get<T>();
        } catch (const Json::exception&) {
            throw ConfigInvalid("bad type for key '" + key + "'");
        }
    }

    template <typename T>
    T require(const std::string& key) const {
        if (!data.contains(key)) throw ConfigInvalid("missing key '" + key + "'");
        try {
            return data.at(key).get<T>();
        } catch (const Json::exception&) {
            throw ConfigInvalid("bad type for key '" + key + "'");
        }
    }
};

// "x(0.5)>0 AND x(1)<=2": comparisons of the path at fixed times, joined by
// one connective (AND = all, OR = any)
inline CylinderIndicator parse_indicator(const std::string& text) {
    CylinderIndicator ind;
    ind.label = text;
    std::vector<std::string> parts;
    std::string rest = text;
    bool has_and = text.find(" AND ") != std::string::npos;
    bool has_or = text.find(" OR ") != std::string::npos;
    if (has_and && has_or)
        throw ConfigInvalid("indicator mixes AND and OR: " + text);
    ind.mode = has_or ? CylinderIndicator::Mode::Any : CylinderIndicator::Mode::All;
    const std::string sep = has_or ? " OR " : " AND ";
    while (true) {
        auto pos = rest.find(sep);
        parts.push_back(rest.substr(0, pos));
        if (pos == std::string::npos) break;
        rest = rest.substr(pos + sep.size());
    }
    for (auto term : parts) {
        // trim
        auto l = term.find_first_not_of(" \t");
        auto r = term.find_last_not_of(" \t");
        if (l == std::string::npos) throw ConfigInvalid("empty indicator term");
        term = term.substr(l, r - l + 1);
        if (term.rfind("x(", 0) != 0) throw ConfigInvalid("term must start with x(: " + term);
        auto close = term.find(')');
        if (close == std::string::npos) throw ConfigInvalid("missing ) in " + term);
        CylinderIndicator::Term t;
        try {
            t.time = std::stod(term.substr(2, close - 2));
        } catch (...) {
            throw ConfigInvalid("bad time in " + term);
        }
        std::string tail = term.substr(close + 1);
        std::size_t oplen = 0;
        if (tail.rfind(">=", 0) == 0 || tail.rfind("> ", 0) == 0 || tail.rfind(">", 0) == 0) {
            t.greater = true;
            oplen = tail.rfind(">=", 0) == 0 ? 2 : 1;
        } else if (tail.rfind("<=", 0) == 0 || tail.rfind("<", 0) == 0) {
            t.greater = false;
            oplen = tail.rfind("<=", 0) == 0 ? 2 : 1;
        } else {
            throw ConfigInvalid("missing comparison in " + term);
        }
        try {
            t.threshold = std::stod(tail.substr(oplen));
        } catch (...) {
            throw ConfigInvalid("bad threshold in " + term);
        }
        ind.terms.push_back(t);
    }
    if (ind.terms.empty()) throw ConfigInvalid("indicator has no terms");
    return ind;
}

}  // namespace flab
