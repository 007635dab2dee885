#include "nego/policy.hpp"

#include <algorithm>

#include "nego/errors.hpp"
#include "nego/print.hpp"

namespace nego {

namespace {

const ConfigType* resolve(const TypeExpr& te, const Registry& reg, std::string* err) {
    if (te.inline_type) return &*te.inline_type;
    const ConfigType* ct = reg.find(te.id);
    if (!ct && err) *err = "unknown config type '" + te.id + "'";
    return ct;
}

void push(std::vector<Diagnostic>& out, std::string code, std::string msg, SourceLoc loc) {
    out.push_back(Diagnostic{std::move(code), std::move(msg), loc});
}

}  // namespace

std::vector<Diagnostic> validate(const Policy& p, const Registry& registry) {
    std::vector<Diagnostic> out;

    std::string err;
    const ConfigType* serves = resolve(p.serves, registry, &err);
    if (!serves) {
        push(out, "unknown-type", err, p.serves.loc);
        return out;  // nothing else is checkable
    }
    std::set<Var> served = lang(*serves);

    for (const auto* clause : {&p.minimize, &p.maximize}) {
        SourceLoc loc = clause == &p.minimize ? p.minimize_loc : p.maximize_loc;
        for (const auto& id : *clause) {
            if (!served.count(make_var(id)))
                push(out, "preference-unknown-param",
                     "preference parameter '" + id + "' is not a parameter of the served type",
                     loc);
        }
    }
    for (const auto& id : p.minimize) {
        if (std::find(p.maximize.begin(), p.maximize.end(), id) != p.maximize.end())
            push(out, "preference-overlap",
                 "parameter '" + id + "' appears in both minimize and maximize", p.minimize_loc);
    }

    for (const auto& rule : p.rules) {
        if (!is_formula_over(*rule.trigger, *serves))
            push(out, "trigger-not-over-type",
                 "trigger mentions variables outside the served type", rule.trigger_loc);

        std::set<Var> signature = served;   // Lang(ct) + prefixed sub-languages
        std::set<Var> sub_signature;
        std::set<std::string> seen_ids;
        bool subs_ok = true;
        for (const auto& use : rule.uses) {
            if (!seen_ids.insert(use.server_id).second)
                push(out, "duplicate-server",
                     "server '" + use.server_id + "' is used twice in one rule", use.loc);
            std::string uerr;
            const ConfigType* uct = resolve(use.type, registry, &uerr);
            if (!uct) {
                push(out, "unknown-type", uerr, use.type.loc);
                subs_ok = false;
                continue;
            }
            for (const auto& v : lang(prefix_params(*uct, use.server_id))) {
                signature.insert(v);
                sub_signature.insert(v);
            }
        }
        if (!subs_ok) continue;

        for (const auto& v : free_vars(*rule.constraint)) {
            if (!signature.count(v))
                push(out, "constraint-vars",
                     "constraint mentions '" + v.text() +
                         "' which is neither a served parameter nor a prefixed sub-parameter",
                     rule.constraint_loc);
        }

        std::set<std::string> assigned;
        for (const auto& a : rule.offer) {
            if (!served.count(make_var(a.param)))
                push(out, "assign-unknown-param",
                     "offer assigns '" + a.param + "' which is not a parameter of the served type",
                     a.loc);
            if (!assigned.insert(a.param).second)
                push(out, "assign-duplicate", "parameter '" + a.param + "' assigned twice", a.loc);
            for (const auto& v : term_vars(*a.value)) {
                if (!sub_signature.count(v))
                    push(out, "assign-term-vars",
                         "offer term mentions '" + v.text() +
                             "' which is not a prefixed parameter of a used server",
                         a.loc);
            }
        }
    }
    return out;
}

CorePolicyPtr CorePolicy::make_rule(CoreRule r) {
    auto p = std::make_shared<CorePolicy>();
    p->rule_ = std::move(r);
    return p;
}

CorePolicyPtr CorePolicy::compose(CorePolicyPtr l, CorePolicyPtr r) {
    if (lang(l->config_type()) != lang(r->config_type()))
        throw ValidationError("compose: branches serve different config types");
    auto p = std::make_shared<CorePolicy>();
    p->left_ = std::move(l);
    p->right_ = std::move(r);
    return p;
}

const ConfigType& CorePolicy::config_type() const {
    return is_rule() ? rule_->ct : left_->config_type();
}

std::size_t CorePolicy::rule_count() const {
    return is_rule() ? 1 : left_->rule_count() + right_->rule_count();
}

static void collect_ids(const CorePolicy& p, std::vector<std::string>& out,
                        std::set<std::string>& seen) {
    if (p.is_rule()) {
        for (const auto& u : p.rule().uses)
            if (seen.insert(u.server_id).second) out.push_back(u.server_id);
        return;
    }
    collect_ids(*p.left(), out, seen);
    collect_ids(*p.right(), out, seen);
}

std::vector<std::string> CorePolicy::server_ids() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    collect_ids(*this, out, seen);
    return out;
}

CorePolicyPtr to_core(const Policy& p, const Registry& registry) {
    auto diags = validate(p, registry);
    if (!diags.empty())
        throw ValidationError("policy '" + p.name + "' does not validate: " + diags[0].message);

    const ConfigType* serves = resolve(p.serves, registry, nullptr);
    std::vector<CorePolicyPtr> leaves;
    for (const auto& rule : p.rules) {
        CoreRule core;
        core.ct = *serves;
        core.trigger = rule.trigger;
        std::vector<FormulaPtr> psi_parts;
        psi_parts.push_back(rule.constraint);
        for (const auto& a : rule.offer)
            psi_parts.push_back(atom(variable(make_var(a.param)), Rel::eq, a.value));
        psi_parts.push_back(serves->constraint);
        for (const auto& use : rule.uses) {
            const ConfigType* uct = resolve(use.type, registry, nullptr);
            core.uses.push_back(CoreUse{use.server_id, *uct});
            psi_parts.push_back(prefix_params(*uct, use.server_id).constraint);
        }
        core.psi = conjunction(psi_parts);
        leaves.push_back(CorePolicy::make_rule(std::move(core)));
    }
    // right-nested composition: r1 + (r2 + (... + rn))
    CorePolicyPtr out = leaves.back();
    for (auto it = std::next(leaves.rbegin()); it != leaves.rend(); ++it)
        out = CorePolicy::compose(*it, out);
    return out;
}

CompiledPolicy compile_policy(const Policy& p, const Registry& registry) {
    CompiledPolicy out;
    out.name = p.name;
    out.core = to_core(p, registry);
    for (const auto& id : p.minimize)
        out.preferences.push_back(Preference{make_var(id), Direction::minimize});
    for (const auto& id : p.maximize)
        out.preferences.push_back(Preference{make_var(id), Direction::maximize});
    return out;
}

VariableSets variable_sets(const CoreRule& r) {
    VariableSets vs;
    vs.all = lang(r.ct);
    std::vector<std::set<Var>> sub_langs;
    for (const auto& use : r.uses) {
        sub_langs.push_back(lang(prefix_params(use.type, use.server_id)));
        for (const auto& v : sub_langs.back()) {
            vs.all.insert(v);
            vs.subs_only.insert(v);
        }
    }
    for (const auto& sl : sub_langs) {
        std::set<Var> xi = vs.all;
        for (const auto& v : sl) xi.erase(v);
        vs.excluding_use.push_back(std::move(xi));
    }
    return vs;
}

std::string to_text(const Policy& p) {
    std::string out = "policy " + p.name + " {\n";
    out += "  serves: ";
    out += p.serves.inline_type ? to_text(*p.serves.inline_type) : p.serves.id;
    out += "\n";
    auto pref = [&](const char* kw, const std::vector<std::string>& ids) {
        if (ids.empty()) return;
        out += std::string("  ") + kw + ": [";
        for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? ", " : "") + ids[i];
        out += "]\n";
    };
    pref("minimize", p.minimize);
    pref("maximize", p.maximize);
    out += "  rules: [\n";
    for (const auto& r : p.rules) {
        out += "    { trigger: " + to_text(r.trigger) + ",\n      uses: [";
        for (std::size_t i = 0; i < r.uses.size(); ++i) {
            if (i) out += ", ";
            out += r.uses[i].server_id + ":";
            out += r.uses[i].type.inline_type ? to_text(*r.uses[i].type.inline_type)
                                              : r.uses[i].type.id;
        }
        out += "],\n      offer: {";
        for (std::size_t i = 0; i < r.offer.size(); ++i) {
            if (i) out += ", ";
            out += r.offer[i].param + " := " + to_text(r.offer[i].value);
        }
        out += "},\n      constraint: " + to_text(r.constraint) + " },\n";
    }
    out += "  ]\n}\n";
    return out;
}

}  // namespace nego
