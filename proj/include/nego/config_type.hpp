#pragma once

#include <map>
#include <string>
#include <vector>

#include "nego/logic.hpp"

namespace nego {

// Terms of negotiation: the negotiable parameters of a service (all of basic
// type decimal) and a constraint formula over them.
struct ConfigType {
    std::string name;         // empty for anonymous inline types
    std::vector<Var> params;  // ordered, unique; unprefixed until prefix_params
    FormulaPtr constraint;
};

// parameter-name set of the type
std::set<Var> lang(const ConfigType& ct);

// free_vars(f) within the type's parameters
bool is_formula_over(const Formula& f, const ConfigType& ct);
inline bool is_formula_over(const FormulaPtr& f, const ConfigType& ct) {
    return is_formula_over(*f, ct);
}

// Rename every parameter (and the constraint) under server prefix `s`.
// Throws ValidationError if the type is already prefixed.
ConfigType prefix_params(const ConfigType& ct, const std::string& s);

// Load-time checks: the constraint must be quantifier-free and satisfiable.
// A parameterless type is legal but reported through `warnings`.
void check_config_type(const ConfigType& ct, std::vector<std::string>* warnings = nullptr);

// two types describe the same negotiation surface: equal parameter sets and
// logically equivalent constraints
bool same_signature(const ConfigType& a, const ConfigType& b);

std::string to_text(const ConfigType& ct);

struct Registry {
    std::map<std::string, ConfigType> types;

    const ConfigType* find(const std::string& id) const {
        auto it = types.find(id);
        return it == types.end() ? nullptr : &it->second;
    }
};

}  // namespace nego
