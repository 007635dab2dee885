#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nego/config_type.hpp"
#include "nego/policy.hpp"
#include "nego/qe.hpp"

namespace nego {

struct Token;
using TokenPtr = std::shared_ptr<const Token>;

// An offer formula paired with the token recording how it was derived.
struct ExtendedOffer {
    FormulaPtr formula;
    TokenPtr token;
};

// one recorded sub-offer of a rule: the server, its declared (unprefixed)
// type, and the sub's extended offer exactly as received
struct SubOfferRecord {
    std::string server_id;
    ConfigType type;
    ExtendedOffer offer;
};

// Token tree mirroring the policy structure that produced the offer: a
// policy-sum node per composition, a rule-offer node per rule, and opaque
// byte strings at base-case negotiators.
struct Token {
    enum class Kind { opaque, rule_offer, policy_sum };
    Kind kind = Kind::opaque;
    std::string opaque;                   // opaque
    FormulaPtr formula;                   // rule_offer / policy_sum: recorded offer
    FormulaPtr condition;                 // rule_offer: the rule condition backing the offer
    std::vector<SubOfferRecord> subs;     // rule_offer
    std::vector<TokenPtr> branches;       // policy_sum: rule-offer tokens
};

TokenPtr opaque_token(std::string bytes);
TokenPtr rule_offer_token(FormulaPtr formula, FormulaPtr condition, std::vector<SubOfferRecord> subs);
TokenPtr policy_sum_token(FormulaPtr formula, std::vector<TokenPtr> branches);

// canonical serialization and its keyed digest (the wire-opaque form)
std::string token_canonical_text(const Token& t);
std::string token_digest(const Token& t);
// process token key, settable once via the NEGO_TOKEN_KEY environment
// variable; random otherwise
void set_token_key(const std::string& key_material);

struct Invoice {
    std::string session_id;
    FormulaPtr accepted;
    TokenPtr token;
    std::vector<std::pair<std::string, FormulaPtr>> sub_acceptances;
};

struct TraceEvent {
    enum class Kind {
        query,        // query reaching a negotiator
        sub_query,    // rule -> sub-server
        sub_offer,    // sub-server -> rule
        sub_failure,  // sub-server unreachable / failed
        rule_skip,    // trigger not applicable
        rule_offer,   // rule result
        offer,        // negotiator's final offer
        preference,   // preference clause applied
    };
    Kind kind;
    std::string negotiator;
    std::string server_id;  // sub_query/sub_offer/sub_failure
    std::string text;
};
using TraceSink = std::function<void(const TraceEvent&)>;

struct EngineOptions {
    QeOptions qe;
    bool parallel = false;  // dispatch independent server groups concurrently
    TraceSink trace;
};

// A negotiation server: accepts queries over its config type and returns one
// offer per query. Implementations are safe to share across sessions.
class Negotiator {
public:
    virtual ~Negotiator() = default;
    virtual const std::string& name() const = 0;
    virtual const ConfigType& config_type() const = 0;
    // the type if known without doing I/O (remote handles may not know yet)
    virtual std::optional<ConfigType> known_config_type() const {
        return config_type();
    }
    virtual ExtendedOffer negotiate(const FormulaPtr& query) = 0;
    // Accept a previously issued offer. The acceptance must entail the offer
    // formula and fix every parameter of the config type.
    virtual Invoice accept(const ExtendedOffer& offer, const FormulaPtr& acceptance,
                           const std::string& session_id = "local") = 0;
    virtual std::optional<ExtendedOffer> find_issued(const std::string& digest) const = 0;
};

using NegotiatorPtr = std::shared_ptr<Negotiator>;
using Bindings = std::map<std::string, NegotiatorPtr>;

// --- rule semantics -------------------------------------------------------

bool trigger_applicable(const CoreRule& rule, const FormulaPtr& q, const QeOptions& opts = {});

// Query for the i-th server (1-based) given the query and the prefixed
// offers already received from servers 1..i-1. The result is over the
// prefixed i-th type; strip the prefix before sending.
FormulaPtr subquery(const CoreRule& rule, const FormulaPtr& q,
                    const std::vector<FormulaPtr>& prior_prefixed_offers, std::size_t i,
                    const QeOptions& opts = {});

// Offer assembled from the complete prefixed sub-offers.
FormulaPtr final_offer(const CoreRule& rule, const std::vector<FormulaPtr>& prefixed_offers,
                       const QeOptions& opts = {});

// Execute one rule against bound sub-negotiators: trigger check, sequential
// (or grouped-parallel) sub-queries, then the assembled offer. False
// sub-offers short-circuit to a false offer.
FormulaPtr run_rule(const CoreRule& rule, const FormulaPtr& q, const Bindings& subs,
                    const EngineOptions& opts = {});

// Execute a core policy: rules produce rule-offer tokens, compositions take
// the disjunction and a policy-sum token, and preference clauses strengthen
// the result (the strengthening is recorded through the token tree so it
// stays internally consistent).
ExtendedOffer run_policy(const CorePolicyPtr& p, const FormulaPtr& q, const Bindings& subs,
                         const std::vector<Preference>& preferences = {},
                         const EngineOptions& opts = {});

// Close a policy over sub-negotiators, yielding a negotiator that serves
// successive queries. Local bindings are type-checked now; remote ones on
// first use. Throws BindingMismatchError.
NegotiatorPtr close_policy(const CompiledPolicy& policy, Bindings bindings,
                           EngineOptions opts = {}, std::string name = "");

// Base-case negotiator answering from a fixed capability formula:
// offer = simplify(query && capability).
NegotiatorPtr leaf_negotiator(ConfigType ct, FormulaPtr capability, std::string name = "leaf",
                              QeOptions opts = {});

// Test double returning scripted offers in order regardless of the query.
NegotiatorPtr scripted_negotiator(ConfigType ct, std::vector<FormulaPtr> script,
                                  std::string name = "scripted");

// The two structural conditions on recorded tokens: a policy-sum formula is
// the disjunction of its branches, and a rule-offer formula is the projection
// of its recorded sub-offers conjoined with the rule condition.
bool validate_token(const ExtendedOffer& eo, const QeOptions& opts = {});

// Compile-time grouping of a rule's servers: two servers fall in the same
// group iff the rule condition (with the served parameters kept free) does
// not factor across them. Groups are ordered by first appearance and may be
// dispatched concurrently.
std::vector<std::vector<std::size_t>> analyze_parallel(const CoreRule& rule,
                                                       const QeOptions& opts = {});

// prefix/unprefix every variable of an offer or query
FormulaPtr prefix_formula(const FormulaPtr& f, const std::string& server_id);
FormulaPtr unprefix_formula(const FormulaPtr& f, const std::string& server_id);

}  // namespace nego
