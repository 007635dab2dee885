#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nego/config_type.hpp"
#include "nego/logic.hpp"
#include "nego/qe.hpp"

namespace nego {

struct SourceLoc {
    int line = 0;
    int column = 0;
};

// a named reference into the registry, or an inline config type
struct TypeExpr {
    std::string id;  // empty when inline
    std::optional<ConfigType> inline_type;
    SourceLoc loc;
};

struct UseDecl {
    std::string server_id;
    TypeExpr type;
    SourceLoc loc;
};

struct OfferAssignment {
    std::string param;  // parameter of the served type
    TermPtr value;      // term over prefixed sub-server parameters
    SourceLoc loc;
};

struct Rule {
    FormulaPtr trigger;
    std::vector<UseDecl> uses;
    std::vector<OfferAssignment> offer;
    FormulaPtr constraint;
    SourceLoc loc;
    SourceLoc trigger_loc;
    SourceLoc constraint_loc;
};

struct Policy {
    std::string name;
    TypeExpr serves;
    std::vector<std::string> minimize;
    std::vector<std::string> maximize;
    std::vector<Rule> rules;
    SourceLoc minimize_loc;
    SourceLoc maximize_loc;
};

struct Diagnostic {
    std::string code;
    std::string message;
    SourceLoc loc;
};

// Empty result iff the policy is well-formed against the registry: triggers
// over the served type, constraint/assignment variables inside the declared
// signatures, preference parameters known and disjoint.
std::vector<Diagnostic> validate(const Policy& p, const Registry& registry);

struct CoreUse {
    std::string server_id;
    ConfigType type;  // unprefixed, as declared
};

// Compiled rule: trigger plus the single condition psi combining the rule
// constraint, the offer equalities, and the config-type constraints (served
// and prefixed sub-types).
struct CoreRule {
    ConfigType ct;
    FormulaPtr trigger;
    std::vector<CoreUse> uses;
    FormulaPtr psi;
};

class CorePolicy;
using CorePolicyPtr = std::shared_ptr<const CorePolicy>;

// A core policy is a rule or the composition (disjunctive choice) of two
// core policies over the same config type.
class CorePolicy {
public:
    static CorePolicyPtr make_rule(CoreRule r);
    static CorePolicyPtr compose(CorePolicyPtr l, CorePolicyPtr r);

    bool is_rule() const { return rule_.has_value(); }
    const CoreRule& rule() const { return *rule_; }
    const CorePolicyPtr& left() const { return left_; }
    const CorePolicyPtr& right() const { return right_; }
    const ConfigType& config_type() const;
    std::size_t rule_count() const;
    // server ids across all rules, in first-appearance order
    std::vector<std::string> server_ids() const;

private:
    std::optional<CoreRule> rule_;
    CorePolicyPtr left_, right_;
};

// Translation to the core language; requires validate() to be clean and
// throws ValidationError otherwise.
CorePolicyPtr to_core(const Policy& p, const Registry& registry);

struct Preference {
    Var param;
    Direction direction;
};

struct CompiledPolicy {
    std::string name;
    CorePolicyPtr core;
    std::vector<Preference> preferences;  // in declaration order
};

CompiledPolicy compile_policy(const Policy& p, const Registry& registry);

// X, X0, Xi of a rule: all parameters, sub-only parameters, and the
// complements used when deriving each sub-query.
struct VariableSets {
    std::set<Var> all;                            // X
    std::set<Var> subs_only;                      // X0
    std::vector<std::set<Var>> excluding_use;     // Xi, one per use
};
VariableSets variable_sets(const CoreRule& r);

std::string to_text(const Policy& p);

}  // namespace nego
