#include "nego/config_type.hpp"

#include "nego/errors.hpp"
#include "nego/print.hpp"
#include "nego/qe.hpp"

namespace nego {

std::set<Var> lang(const ConfigType& ct) {
    return std::set<Var>(ct.params.begin(), ct.params.end());
}

bool is_formula_over(const Formula& f, const ConfigType& ct) {
    std::set<Var> params = lang(ct);
    for (const auto& v : free_vars(f))
        if (!params.count(v)) return false;
    return true;
}

ConfigType prefix_params(const ConfigType& ct, const std::string& s) {
    if (s.empty()) throw ValidationError("prefix_params: empty server id");
    for (const auto& p : ct.params) {
        if (!p.prefix.empty())
            throw ValidationError("prefix_params: type '" + ct.name + "' is already prefixed (" +
                                  p.text() + ")");
    }
    ConfigType out;
    out.name = ct.name;
    out.params.reserve(ct.params.size());
    for (const auto& p : ct.params) out.params.push_back(make_var(s, p.name));
    out.constraint = ct.constraint
                         ? map_vars(ct.constraint, [&](const Var& v) { return make_var(s, v.name); })
                         : ct.constraint;
    return out;
}

void check_config_type(const ConfigType& ct, std::vector<std::string>* warnings) {
    std::string label = ct.name.empty() ? "<anonymous>" : ct.name;
    if (!ct.constraint) throw ValidationError("config type " + label + " has no constraint");
    if (!quantifier_free(*ct.constraint))
        throw ValidationError("config type " + label + " has a quantified constraint");
    if (!is_formula_over(*ct.constraint, ct))
        throw ValidationError("config type " + label +
                              " constrains variables outside its parameters");
    if (!is_satisfiable(ct.constraint))
        throw ValidationError("config type " + label + " has an unsatisfiable constraint");
    if (ct.params.empty() && warnings)
        warnings->push_back("config type " + label +
                            " has no parameters; only ground formulas apply to it");
}

bool same_signature(const ConfigType& a, const ConfigType& b) {
    if (lang(a) != lang(b)) return false;
    return equivalent(a.constraint, b.constraint);
}

std::string to_text(const ConfigType& ct) {
    std::string out = "{";
    for (std::size_t i = 0; i < ct.params.size(); ++i) {
        if (i) out += ", ";
        out += ct.params[i].text() + ": decimal";
    }
    out += "; " + to_text(ct.constraint) + "}";
    return out;
}

}  // namespace nego
