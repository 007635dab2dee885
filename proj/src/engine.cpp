#include "nego/engine.hpp"

#include <sodium.h>

#include <atomic>
#include <future>
#include <stdexcept>

#include "nego/print.hpp"

namespace nego {

FormulaPtr prefix_formula(const FormulaPtr& f, const std::string& server_id) {
    return map_vars(f, [&](const Var& v) {
        return v.prefix.empty() ? make_var(server_id, v.name) : v;
    });
}

FormulaPtr unprefix_formula(const FormulaPtr& f, const std::string& server_id) {
    return map_vars(f, [&](const Var& v) {
        return v.prefix == server_id ? make_var(v.name) : v;
    });
}

namespace {

std::string nonce(const std::string& tag) {
    unsigned char raw[16];
    randombytes_buf(raw, sizeof raw);
    static const char* digits = "0123456789abcdef";
    std::string out = tag + ":";
    for (unsigned char b : raw) {
        out += digits[b >> 4];
        out += digits[b & 0xf];
    }
    return out;
}

void emit(const EngineOptions& opts, TraceEvent::Kind kind, std::string server_id,
          std::string text) {
    if (!opts.trace) return;
    TraceEvent e;
    e.kind = kind;
    e.server_id = std::move(server_id);
    e.text = std::move(text);
    opts.trace(e);
}

}  // namespace

bool trigger_applicable(const CoreRule& rule, const FormulaPtr& q, const QeOptions& opts) {
    return is_satisfiable(conj(q, rule.trigger), opts);
}

// sub-query over the prefixed i-th type; `priors` may be any subset of the
// already-received prefixed offers (sequential execution passes 1..i-1,
// parallel execution only the i-th group's earlier members)
static FormulaPtr subquery_with(const CoreRule& rule, const FormulaPtr& q,
                                const std::vector<FormulaPtr>& priors, std::size_t i,
                                const QeOptions& opts) {
    const VariableSets vs = variable_sets(rule);
    std::vector<FormulaPtr> parts{q, rule.psi};
    parts.insert(parts.end(), priors.begin(), priors.end());
    return eliminate_exists(conjunction(parts), vs.excluding_use[i - 1], opts);
}

FormulaPtr subquery(const CoreRule& rule, const FormulaPtr& q,
                    const std::vector<FormulaPtr>& prior_prefixed_offers, std::size_t i,
                    const QeOptions& opts) {
    if (i < 1 || i > rule.uses.size())
        throw std::invalid_argument("subquery: server index out of range");
    if (prior_prefixed_offers.size() != i - 1)
        throw std::invalid_argument("subquery: expected exactly i-1 prior offers");
    return subquery_with(rule, q, prior_prefixed_offers, i, opts);
}

FormulaPtr final_offer(const CoreRule& rule, const std::vector<FormulaPtr>& prefixed_offers,
                       const QeOptions& opts) {
    if (prefixed_offers.size() != rule.uses.size())
        throw std::invalid_argument("final_offer: one offer per used server required");
    const VariableSets vs = variable_sets(rule);
    std::vector<FormulaPtr> parts{rule.psi};
    parts.insert(parts.end(), prefixed_offers.begin(), prefixed_offers.end());
    return eliminate_exists(conjunction(parts), vs.subs_only, opts);
}

namespace {

struct MemberResult {
    bool collected = false;
    SubOfferRecord record;
    FormulaPtr prefixed;  // null on failure; false offers recorded as such
};

// query one server, folding failures and ill-typed replies into a false offer
MemberResult query_member(const CoreRule& rule, const FormulaPtr& q,
                          const std::vector<FormulaPtr>& local_priors, std::size_t idx,
                          const Bindings& subs, const EngineOptions& opts,
                          std::mutex& trace_m) {
    const CoreUse& use = rule.uses[idx];
    auto it = subs.find(use.server_id);
    if (it == subs.end())
        throw BindingMismatchError("run_rule: no binding for server '" + use.server_id + "'");

    auto traced = [&](TraceEvent::Kind k, const std::string& text) {
        std::lock_guard lock(trace_m);
        emit(opts, k, use.server_id, text);
    };

    FormulaPtr qi = subquery_with(rule, q, local_priors, idx + 1, opts.qe);
    FormulaPtr sent = unprefix_formula(qi, use.server_id);
    traced(TraceEvent::Kind::sub_query, to_text(sent));

    MemberResult r;
    r.collected = true;
    r.record.server_id = use.server_id;
    r.record.type = use.type;
    try {
        ExtendedOffer sub_offer = it->second->negotiate(sent);
        if (!sub_offer.formula || !sub_offer.token || !quantifier_free(*sub_offer.formula) ||
            !is_formula_over(sub_offer.formula, use.type)) {
            traced(TraceEvent::Kind::sub_failure, "ill-typed offer");
            r.record.offer = ExtendedOffer{false_formula(), opaque_token("")};
        } else {
            traced(TraceEvent::Kind::sub_offer, to_text(sub_offer.formula));
            r.record.offer = std::move(sub_offer);
        }
    } catch (const NegotiationFailure& e) {
        traced(TraceEvent::Kind::sub_failure, e.what());
        r.record.offer = ExtendedOffer{false_formula(), opaque_token("")};
    }
    r.prefixed = prefix_formula(r.record.offer.formula, use.server_id);
    return r;
}

// run one rule, returning the offer together with its rule-offer token
ExtendedOffer run_rule_ex(const CoreRule& rule, const FormulaPtr& q, const Bindings& subs,
                          const EngineOptions& opts) {
    std::mutex trace_m;
    if (!trigger_applicable(rule, q, opts.qe)) {
        std::lock_guard lock(trace_m);
        emit(opts, TraceEvent::Kind::rule_skip, "", "trigger not applicable");
        // nothing was queried; the token records a vacuous rule
        return {false_formula(), rule_offer_token(false_formula(), false_formula(), {})};
    }

    const std::size_t n = rule.uses.size();
    std::vector<MemberResult> results(n);

    std::vector<std::vector<std::size_t>> groups;
    if (opts.parallel) groups = analyze_parallel(rule, opts.qe);
    if (groups.size() <= 1) {
        // sequential per the rule semantics: await each offer before the
        // next query; a false sub-offer short-circuits the rule
        std::vector<FormulaPtr> priors;
        for (std::size_t i = 0; i < n; ++i) {
            results[i] = query_member(rule, q, priors, i, subs, opts, trace_m);
            if (is_false_atom(*results[i].record.offer.formula)) break;
            priors.push_back(results[i].prefixed);
        }
    } else {
        auto run_group = [&](const std::vector<std::size_t>& grp) {
            std::vector<std::pair<std::size_t, MemberResult>> out;
            std::vector<FormulaPtr> local_priors;
            for (std::size_t idx : grp) {
                MemberResult r = query_member(rule, q, local_priors, idx, subs, opts, trace_m);
                bool dead = is_false_atom(*r.record.offer.formula);
                local_priors.push_back(r.prefixed);
                out.emplace_back(idx, std::move(r));
                if (dead) break;
            }
            return out;
        };
        std::vector<std::future<std::vector<std::pair<std::size_t, MemberResult>>>> futures;
        futures.reserve(groups.size());
        for (const auto& grp : groups)
            futures.push_back(std::async(std::launch::async, run_group, grp));
        for (auto& f : futures)
            for (auto& [idx, r] : f.get()) results[idx] = std::move(r);
    }

    std::vector<SubOfferRecord> records;
    std::vector<FormulaPtr> offers;
    bool dead = false;
    bool complete = true;
    for (auto& r : results) {
        if (!r.collected) {
            complete = false;
            continue;
        }
        dead = dead || is_false_atom(*r.record.offer.formula);
        offers.push_back(r.prefixed);
        records.push_back(std::move(r.record));
    }

    FormulaPtr offer = (dead || !complete) ? false_formula() : final_offer(rule, offers, opts.qe);
    {
        std::lock_guard lock(trace_m);
        emit(opts, TraceEvent::Kind::rule_offer, "", to_text(offer));
    }
    return {offer, rule_offer_token(offer, rule.psi, std::move(records))};
}

ExtendedOffer run_policy_node(const CorePolicyPtr& p, const FormulaPtr& q, const Bindings& subs,
                              const EngineOptions& opts) {
    if (p->is_rule()) return run_rule_ex(p->rule(), q, subs, opts);
    ExtendedOffer l = run_policy_node(p->left(), q, subs, opts);
    ExtendedOffer r = run_policy_node(p->right(), q, subs, opts);
    FormulaPtr formula = simplify(disj(l.formula, r.formula), opts.qe);
    // policy sums flatten: a composition of compositions is one sum of rules
    std::vector<TokenPtr> branches;
    for (const auto& side : {l.token, r.token}) {
        if (side->kind == Token::Kind::policy_sum)
            branches.insert(branches.end(), side->branches.begin(), side->branches.end());
        else
            branches.push_back(side);
    }
    return {formula, policy_sum_token(formula, std::move(branches))};
}

// conjoin the preference-strengthening constraint through the token tree;
// the constraint only mentions served parameters, so every recorded
// projection stays exact
TokenPtr strengthen_token(const TokenPtr& t, const FormulaPtr& c, const QeOptions& opts) {
    switch (t->kind) {
        case Token::Kind::opaque: return t;
        case Token::Kind::rule_offer:
            return rule_offer_token(simplify(conj(t->formula, c), opts), conj(t->condition, c),
                                    t->subs);
        case Token::Kind::policy_sum: {
            std::vector<TokenPtr> branches;
            branches.reserve(t->branches.size());
            for (const auto& b : t->branches) branches.push_back(strengthen_token(b, c, opts));
            return policy_sum_token(simplify(conj(t->formula, c), opts), std::move(branches));
        }
    }
    return t;
}

}  // namespace

FormulaPtr run_rule(const CoreRule& rule, const FormulaPtr& q, const Bindings& subs,
                    const EngineOptions& opts) {
    return run_rule_ex(rule, q, subs, opts).formula;
}

ExtendedOffer run_policy(const CorePolicyPtr& p, const FormulaPtr& q, const Bindings& subs,
                         const std::vector<Preference>& preferences, const EngineOptions& opts) {
    ExtendedOffer eo = run_policy_node(p, q, subs, opts);
    if (preferences.empty()) return eo;

    std::vector<FormulaPtr> constraints;
    FormulaPtr running = eo.formula;
    for (const auto& pref : preferences) {
        const char* dir = pref.direction == Direction::minimize ? "minimize" : "maximize";
        if (!free_vars(*running).count(pref.param)) {
            emit(opts, TraceEvent::Kind::preference, "",
                 std::string(dir) + " " + pref.param.text() + ": parameter not free; no-op");
            continue;
        }
        FormulaPtr c = preference_constraint(running, pref.param, pref.direction, opts.qe);
        running = simplify(conj(running, c), opts.qe);
        constraints.push_back(c);
        emit(opts, TraceEvent::Kind::preference, "",
             std::string(dir) + " " + pref.param.text() + " -> " + to_text(running));
    }
    if (constraints.empty()) return eo;
    TokenPtr token = strengthen_token(eo.token, conjunction(constraints), opts.qe);
    return {token->formula, token};
}

// --- negotiators ------------------------------------------------------------

namespace {

// 1-d solution set of a constraint system whose variables are within {x}
struct VarInterval {
    bool empty = false;
    std::optional<Rational> lo, hi;
    bool lo_closed = false, hi_closed = false;

    void add_upper(const Rational& v, bool closed) {
        if (!hi || v < *hi || (v == *hi && !closed)) {
            hi = v;
            hi_closed = closed;
        }
    }
    void add_lower(const Rational& v, bool closed) {
        if (!lo || v > *lo || (v == *lo && !closed)) {
            lo = v;
            lo_closed = closed;
        }
    }
    void finish() {
        if (empty) return;
        if (lo && hi && (*lo > *hi || (*lo == *hi && !(lo_closed && hi_closed)))) empty = true;
    }
    bool is_point() const { return !empty && lo && hi && *lo == *hi && lo_closed && hi_closed; }
};

VarInterval interval_of(const ConstraintSystem& s, const Var& x) {
    VarInterval iv;
    for (const auto& c : s.constraints) {
        if (c.ground()) {
            if (!c.ground_true()) iv.empty = true;
            continue;
        }
        auto it = c.coeffs.find(x);
        if (it == c.coeffs.end() || c.coeffs.size() > 1)
            throw std::logic_error("interval_of: system not one-dimensional");
        Rational v = c.bound / it->second;
        bool positive = !it->second.is_negative();
        switch (c.cmp) {
            case Cmp::eq:
                iv.add_lower(v, true);
                iv.add_upper(v, true);
                break;
            case Cmp::le:
                positive ? iv.add_upper(v, true) : iv.add_lower(v, true);
                break;
            case Cmp::lt:
                positive ? iv.add_upper(v, false) : iv.add_lower(v, false);
                break;
        }
    }
    iv.finish();
    return iv;
}

// projection of a quantifier-free formula onto one variable
FormulaPtr project_onto(const FormulaPtr& f, const Var& x, const QeOptions& opts) {
    std::set<Var> others = free_vars(*f);
    others.erase(x);
    return eliminate_exists(f, others, opts);
}

// the unique value a satisfiable formula allows for x, if there is one
std::optional<Rational> fixed_value(const FormulaPtr& f, const Var& x, const QeOptions& opts) {
    FormulaPtr g = project_onto(f, x, opts);
    std::optional<Rational> point;
    bool any = false;
    for (const auto& clause : dnf_clauses(g, opts.dnf_cap)) {
        ConstraintSystem s = atoms_to_system(clause);
        if (!simplify_system(s)) continue;
        VarInterval iv = interval_of(s, x);
        if (iv.empty) continue;
        any = true;
        if (!iv.is_point()) return std::nullopt;
        if (point && !(*point == *iv.lo)) return std::nullopt;
        point = *iv.lo;
    }
    return any ? point : std::nullopt;
}

// some value inside the 1-d solution set of a satisfiable formula over {x}
std::optional<Rational> pick_value(const FormulaPtr& g, const Var& x, const QeOptions& opts) {
    for (const auto& clause : dnf_clauses(g, opts.dnf_cap)) {
        ConstraintSystem s = atoms_to_system(clause);
        if (!simplify_system(s)) continue;
        VarInterval iv = interval_of(s, x);
        if (iv.empty) continue;
        if (iv.lo && iv.lo_closed) return *iv.lo;
        if (iv.hi && iv.hi_closed) return *iv.hi;
        if (iv.lo && iv.hi) return (*iv.lo + *iv.hi) / Rational(2);
        if (iv.lo) return *iv.lo + Rational(1);
        if (iv.hi) return *iv.hi - Rational(1);
        return Rational(0);
    }
    return std::nullopt;
}

// a concrete rational model of a satisfiable quantifier-free formula,
// found by repeated single-variable projection and interval picking
Valuation choose_model(FormulaPtr theta, const QeOptions& opts) {
    Valuation model;
    std::set<Var> remaining = free_vars(*theta);
    while (!remaining.empty()) {
        Var x = *remaining.begin();
        remaining.erase(remaining.begin());
        auto v = pick_value(project_onto(theta, x, opts), x, opts);
        if (!v)
            throw std::logic_error("choose_model: inconsistent system while picking " + x.text());
        model.emplace(x, *v);
        theta = simplify(substitute(theta, x, constant(*v)), opts);
    }
    return model;
}

class BaseNegotiator : public Negotiator {
public:
    BaseNegotiator(std::string name, QeOptions qe) : name_(std::move(name)), qe_(qe) {}

    const std::string& name() const override { return name_; }

    std::optional<ExtendedOffer> find_issued(const std::string& digest) const override {
        std::lock_guard lock(store_m_);
        auto it = issued_.find(digest);
        if (it == issued_.end()) return std::nullopt;
        return it->second;
    }

    Invoice accept(const ExtendedOffer& offer, const FormulaPtr& acceptance,
                   const std::string& session_id) override {
        if (!offer.token) throw AcceptError(AcceptError::Kind::unknown_token, "offer has no token");
        auto stored = find_issued(token_digest(*offer.token));
        if (!stored)
            throw AcceptError(AcceptError::Kind::unknown_token,
                              "token was not issued by this negotiator");
        if (!quantifier_free(*acceptance))
            throw AcceptError(AcceptError::Kind::not_entailing,
                              "acceptance must be quantifier-free");
        if (!entails(acceptance, stored->formula, qe_))
            throw AcceptError(AcceptError::Kind::not_entailing,
                              "acceptance does not entail the offer");
        Valuation fixed;
        for (const auto& p : config_type().params) {
            auto v = fixed_value(acceptance, p, qe_);
            if (!v)
                throw AcceptError(AcceptError::Kind::under_specified,
                                  "acceptance does not fix parameter " + p.text());
            fixed.emplace(p, *v);
        }
        Invoice inv;
        inv.session_id = session_id;
        inv.accepted = acceptance;
        inv.token = stored->token;
        fill_sub_acceptances(*stored, acceptance, inv);
        return inv;
    }

protected:
    ExtendedOffer record_offer(ExtendedOffer eo) {
        std::lock_guard lock(store_m_);
        issued_.emplace(token_digest(*eo.token), eo);
        return eo;
    }

    virtual void fill_sub_acceptances(const ExtendedOffer&, const FormulaPtr&, Invoice&) {}

    std::string name_;
    QeOptions qe_;

private:
    mutable std::mutex store_m_;
    std::map<std::string, ExtendedOffer> issued_;
};

class LeafNegotiator final : public BaseNegotiator {
public:
    LeafNegotiator(ConfigType ct, FormulaPtr capability, std::string name, QeOptions qe)
        : BaseNegotiator(std::move(name), qe), ct_(std::move(ct)), cap_(std::move(capability)) {
        if (!quantifier_free(*cap_))
            throw ValidationError("leaf capability must be quantifier-free");
        if (!is_formula_over(cap_, ct_))
            throw ValidationError("leaf capability must be over the config type");
    }

    const ConfigType& config_type() const override { return ct_; }

    ExtendedOffer negotiate(const FormulaPtr& query) override {
        if (!quantifier_free(*query) || !is_formula_over(query, ct_))
            throw ValidationError("query is not a quantifier-free formula over the config type");
        // unsatisfiable conjunctions simplify to the false offer
        FormulaPtr offer = simplify(conj(query, cap_), qe_);
        return record_offer({offer, opaque_token(nonce(name_))});
    }

private:
    ConfigType ct_;
    FormulaPtr cap_;
};

class ScriptedNegotiator final : public BaseNegotiator {
public:
    ScriptedNegotiator(ConfigType ct, std::vector<FormulaPtr> script, std::string name)
        : BaseNegotiator(std::move(name), {}), ct_(std::move(ct)), script_(std::move(script)) {
        for (const auto& f : script_) {
            if (!quantifier_free(*f) || !is_formula_over(f, ct_))
                throw ValidationError("scripted offer is not over the config type");
        }
    }

    const ConfigType& config_type() const override { return ct_; }

    ExtendedOffer negotiate(const FormulaPtr&) override {
        std::lock_guard lock(m_);
        if (next_ >= script_.size())
            throw ScriptExhaustedError("scripted negotiator '" + name_ + "' ran out of offers");
        FormulaPtr offer = script_[next_++];
        return record_offer({offer, opaque_token(nonce(name_))});
    }

private:
    ConfigType ct_;
    std::vector<FormulaPtr> script_;
    std::mutex m_;
    std::size_t next_ = 0;
};

// defers the type check of a lazily-connecting binding to its first use
class CheckedNegotiator final : public Negotiator {
public:
    CheckedNegotiator(NegotiatorPtr inner, ConfigType expected)
        : inner_(std::move(inner)), expected_(std::move(expected)) {}

    const std::string& name() const override { return inner_->name(); }
    const ConfigType& config_type() const override { return expected_; }
    std::optional<ConfigType> known_config_type() const override { return expected_; }

    ExtendedOffer negotiate(const FormulaPtr& query) override {
        ensure_checked();
        return inner_->negotiate(query);
    }

    Invoice accept(const ExtendedOffer& offer, const FormulaPtr& acceptance,
                   const std::string& session_id) override {
        return inner_->accept(offer, acceptance, session_id);
    }

    std::optional<ExtendedOffer> find_issued(const std::string& digest) const override {
        return inner_->find_issued(digest);
    }

private:
    void ensure_checked() {
        if (checked_.load(std::memory_order_acquire)) return;
        const ConfigType& actual = inner_->config_type();  // may connect
        if (!same_signature(actual, expected_))
            throw BindingMismatchError("negotiator '" + inner_->name() +
                                       "' serves a different config type than the policy expects");
        checked_.store(true, std::memory_order_release);
    }

    NegotiatorPtr inner_;
    ConfigType expected_;
    std::atomic<bool> checked_{false};
};

class PolicyNegotiator final : public BaseNegotiator {
public:
    PolicyNegotiator(CompiledPolicy policy, Bindings bindings, EngineOptions opts,
                     std::string name)
        : BaseNegotiator(std::move(name), opts.qe),
          policy_(std::move(policy)),
          bindings_(std::move(bindings)),
          opts_(std::move(opts)) {}

    const ConfigType& config_type() const override { return policy_.core->config_type(); }

    ExtendedOffer negotiate(const FormulaPtr& query) override {
        if (!quantifier_free(*query) || !is_formula_over(query, config_type()))
            throw ValidationError("query is not a quantifier-free formula over the config type");
        EngineOptions opts = opts_;
        if (opts_.trace) {
            opts.trace = [this](const TraceEvent& e) {
                TraceEvent named = e;
                named.negotiator = name_;
                opts_.trace(named);
            };
            TraceEvent e;
            e.kind = TraceEvent::Kind::query;
            e.negotiator = name_;
            e.text = to_text(query);
            opts_.trace(e);
        }
        ExtendedOffer eo = run_policy(policy_.core, query, bindings_, policy_.preferences, opts);
        if (opts_.trace) {
            TraceEvent e;
            e.kind = TraceEvent::Kind::offer;
            e.negotiator = name_;
            e.text = to_text(eo.formula);
            opts_.trace(e);
        }
        return record_offer(std::move(eo));
    }

protected:
    void fill_sub_acceptances(const ExtendedOffer& offer, const FormulaPtr& acceptance,
                              Invoice& inv) override {
        walk(offer.token, acceptance, inv);
    }

private:
    void walk(const TokenPtr& tok, const FormulaPtr& acceptance, Invoice& inv) {
        if (tok->kind == Token::Kind::policy_sum) {
            for (const auto& b : tok->branches) {
                if (is_satisfiable(conj(acceptance, b->formula), qe_)) {
                    walk(b, acceptance, inv);
                    return;
                }
            }
            throw std::logic_error("accept: no policy branch is consistent with the acceptance");
        }
        if (tok->kind != Token::Kind::rule_offer) return;
        // pick one model of condition && sub-offers && acceptance, then read
        // off a point acceptance for each recorded sub-offer
        std::vector<FormulaPtr> parts{tok->condition, acceptance};
        for (const auto& s : tok->subs)
            parts.push_back(prefix_formula(s.offer.formula, s.server_id));
        Valuation model = choose_model(conjunction(parts), qe_);
        for (const auto& s : tok->subs) {
            std::vector<FormulaPtr> eqs;
            for (const auto& p : s.type.params) {
                auto it = model.find(make_var(s.server_id, p.name));
                if (it == model.end()) continue;  // parameter projected away entirely
                eqs.push_back(atom(variable(p), Rel::eq, constant(it->second)));
            }
            inv.sub_acceptances.emplace_back(s.server_id, conjunction(eqs));
        }
    }

    CompiledPolicy policy_;
    Bindings bindings_;
    EngineOptions opts_;
};

}  // namespace

NegotiatorPtr leaf_negotiator(ConfigType ct, FormulaPtr capability, std::string name,
                              QeOptions opts) {
    return std::make_shared<LeafNegotiator>(std::move(ct), std::move(capability), std::move(name),
                                            opts);
}

NegotiatorPtr scripted_negotiator(ConfigType ct, std::vector<FormulaPtr> script,
                                  std::string name) {
    return std::make_shared<ScriptedNegotiator>(std::move(ct), std::move(script),
                                                std::move(name));
}

NegotiatorPtr close_policy(const CompiledPolicy& policy, Bindings bindings, EngineOptions opts,
                           std::string name) {
    // expected type per server id, consistent across rules
    std::map<std::string, ConfigType> expected;
    std::function<void(const CorePolicy&)> collect = [&](const CorePolicy& p) {
        if (!p.is_rule()) {
            collect(*p.left());
            collect(*p.right());
            return;
        }
        for (const auto& u : p.rule().uses) {
            auto it = expected.find(u.server_id);
            if (it == expected.end())
                expected.emplace(u.server_id, u.type);
            else if (!same_signature(it->second, u.type))
                throw BindingMismatchError("server '" + u.server_id +
                                           "' is used with conflicting config types");
        }
    };
    collect(*policy.core);

    for (auto& [id, type] : expected) {
        auto it = bindings.find(id);
        if (it == bindings.end())
            throw BindingMismatchError("close: missing binding for server '" + id + "'");
        auto known = it->second->known_config_type();
        if (known) {
            if (!same_signature(*known, type))
                throw BindingMismatchError("close: binding for '" + id +
                                           "' serves a different config type");
        } else {
            it->second = std::make_shared<CheckedNegotiator>(it->second, type);
        }
    }
    return std::make_shared<PolicyNegotiator>(policy, std::move(bindings), std::move(opts),
                                              name.empty() ? policy.name : std::move(name));
}

bool validate_token(const ExtendedOffer& eo, const QeOptions& opts) {
    if (!eo.formula || !eo.token) return false;
    const Token& t = *eo.token;
    switch (t.kind) {
        case Token::Kind::opaque:
            return true;
        case Token::Kind::policy_sum: {
            if (!t.formula || !equivalent(eo.formula, t.formula, opts)) return false;
            std::vector<FormulaPtr> branch_formulas;
            for (const auto& b : t.branches) {
                if (!b || !b->formula) return false;
                branch_formulas.push_back(b->formula);
            }
            if (!equivalent(t.formula, disjunction(branch_formulas), opts)) return false;
            for (const auto& b : t.branches)
                if (!validate_token({b->formula, b}, opts)) return false;
            return true;
        }
        case Token::Kind::rule_offer: {
            if (!t.formula || !t.condition || !equivalent(eo.formula, t.formula, opts))
                return false;
            std::vector<FormulaPtr> parts{t.condition};
            std::set<Var> sub_vars;
            for (const auto& s : t.subs) {
                parts.push_back(prefix_formula(s.offer.formula, s.server_id));
                for (const auto& v : lang(prefix_params(s.type, s.server_id))) sub_vars.insert(v);
            }
            if (!equivalent(t.formula, eliminate_exists(conjunction(parts), sub_vars, opts),
                            opts))
                return false;
            for (const auto& s : t.subs)
                if (!validate_token(s.offer, opts)) return false;
            return true;
        }
    }
    return false;
}

std::vector<std::vector<std::size_t>> analyze_parallel(const CoreRule& rule,
                                                       const QeOptions& opts) {
    const std::size_t n = rule.uses.size();
    if (n == 0) return {};
    FormulaPtr psi = conjunction({rule.trigger, rule.psi});

    std::vector<std::set<Var>> langs(n);
    std::set<Var> all_sub_vars;
    for (std::size_t i = 0; i < n; ++i) {
        langs[i] = lang(prefix_params(rule.uses[i].type, rule.uses[i].server_id));
        all_sub_vars.insert(langs[i].begin(), langs[i].end());
    }
    // project onto the chosen servers' variables, keeping the served
    // parameters free: the query is unknown at analysis time and may relate
    // any of them
    auto project = [&](std::initializer_list<std::size_t> keep) {
        std::set<Var> elim = all_sub_vars;
        for (std::size_t k : keep)
            for (const auto& v : langs[k]) elim.erase(v);
        return eliminate_exists(psi, elim, opts);
    };

    std::vector<FormulaPtr> single(n);
    for (std::size_t i = 0; i < n; ++i) single[i] = project({i});

    std::vector<std::vector<bool>> coupled(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            bool factors =
                equivalent(project({i, j}), conj(single[i], single[j]), opts);
            coupled[i][j] = coupled[j][i] = !factors;
        }
    }

    // connected components, ordered by first appearance
    std::vector<std::vector<std::size_t>> groups;
    std::vector<bool> visited(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (visited[i]) continue;
        std::vector<std::size_t> group, stack{i};
        visited[i] = true;
        while (!stack.empty()) {
            std::size_t k = stack.back();
            stack.pop_back();
            group.push_back(k);
            for (std::size_t j = 0; j < n; ++j) {
                if (!visited[j] && coupled[k][j]) {
                    visited[j] = true;
                    stack.push_back(j);
                }
            }
        }
        std::sort(group.begin(), group.end());
        groups.push_back(std::move(group));
    }
    return groups;
}

}  // namespace nego
