#pragma once

// JSON conversions. Laws and measures are stored as {"atoms": [[v, w], ...]}.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core_measures.hpp"
#include "extremal_bounds.hpp"
#include "verifier.hpp"

namespace rosenthal::io {

using json = nlohmann::json;

inline json atoms_to_json(std::span<const Atom> atoms) {
    json arr = json::array();
    for (const Atom& a : atoms) arr.push_back({a.value, a.weight});
    return json{{"atoms", arr}};
}

inline std::vector<Atom> atoms_from_json(const json& j) {
    const json& arr = j.at("atoms");
    if (!arr.is_array()) throw json::type_error::create(302, "\"atoms\" must be an array", &arr);
    std::vector<Atom> atoms;
    for (const json& pair : arr) {
        if (!pair.is_array() || pair.size() != 2)
            throw json::type_error::create(302, "each atom must be a [value, weight] pair", &pair);
        atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    return atoms;
}

inline json to_json(const DiscreteRV& x) { return atoms_to_json(x.atoms()); }
inline json to_json(const LevyVarianceMeasure& h) { return atoms_to_json(h.atoms()); }

inline DiscreteRV discrete_rv_from_json(const json& j) { return DiscreteRV(atoms_from_json(j)); }
inline LevyVarianceMeasure levy_from_json(const json& j) { return LevyVarianceMeasure(atoms_from_json(j)); }

inline DiscreteRV read_discrete_rv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return discrete_rv_from_json(json::parse(in));
}

inline json to_json(const LambdaC& lc) { return json{{"lambda", lc.lambda}, {"c", lc.c}}; }

inline json to_json(const BoundResult& r) {
    json cert = json::array();
    for (const LambdaC& lc : r.certificate) cert.push_back(to_json(lc));
    return json{{"value", r.value},
                {"regime", to_string(r.regime)},
                {"certificate", cert},
                {"achieved_sign", to_string(r.achieved_sign)},
                {"error_budget", r.error_budget}};
}

inline json to_json(const CheckReport& r) {
    return json{{"case_id", r.case_id}, {"seed", r.seed}, {"p", r.p},         {"q", r.q},
                {"lhs", r.lhs},         {"rhs", r.rhs},   {"slack", r.slack}, {"status", to_string(r.status)}};
}

} // namespace rosenthal::io
