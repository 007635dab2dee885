#include "nego/scenario.hpp"

#include <chrono>
#include <map>

#include "nego/errors.hpp"
#include "nego/print.hpp"
#include "nego/protocol.hpp"
#include "textscan.hpp"

namespace nego {

namespace {

class ScenarioParser : public detail::Parser {
public:
    using detail::Parser::Parser;

    Scenario parse() {
        Scenario sc;
        while (!at_end()) {
            if (peek_ident("type")) {
                ++pos_;
                SourceLoc l = loc();
                std::string id = name();
                expect_punct("=");
                ConfigType ct = config_type();
                ct.name = id;
                check_config_type(ct, &sc.warnings);
                if (!sc.registry.types.emplace(id, std::move(ct)).second)
                    throw ParseError("duplicate type '" + id + "'", l.line, l.column);
                continue;
            }
            if (peek_ident("policy")) {
                sc.policies.push_back(policy());
                continue;
            }
            if (peek_ident("negotiator")) {
                ++pos_;
                sc.negotiators.push_back(negotiator_decl());
                continue;
            }
            if (peek_ident("query")) {
                ++pos_;
                ScenarioStep step;
                step.loc = loc();
                step.target = name();
                expect_punct(":");
                step.query = formula();
                sc.steps.push_back(std::move(step));
                continue;
            }
            fail("expected 'type', 'policy', 'negotiator', or 'query'");
        }
        return sc;
    }

private:
    NegotiatorDecl negotiator_decl() {
        NegotiatorDecl d;
        d.loc = loc();
        d.name = name();
        expect_punct("=");
        if (accept_ident("leaf")) {
            d.kind = NegotiatorDecl::Kind::leaf;
            d.type_id = name();
            expect_punct("{");
            d.capability = formula();
            expect_punct("}");
            return d;
        }
        if (accept_ident("scripted")) {
            d.kind = NegotiatorDecl::Kind::scripted;
            d.type_id = name();
            expect_punct("[");
            while (!peek_punct("]")) {
                d.script.push_back(formula());
                if (!accept_punct(",")) break;
            }
            expect_punct("]");
            return d;
        }
        if (accept_ident("close")) {
            d.kind = NegotiatorDecl::Kind::close;
            d.policy_id = name();
            expect_punct("{");
            while (!peek_punct("}")) {
                std::string server = name();
                expect_punct("=");
                d.bindings.emplace_back(server, name());
                if (!accept_punct(",")) break;
            }
            expect_punct("}");
            return d;
        }
        if (accept_ident("remote")) {
            d.kind = NegotiatorDecl::Kind::remote;
            // host:port; host may itself be dotted / hyphenated
            std::string host = name();
            while (accept_punct(".")) host += "." + name_or_number();
            expect_punct(":");
            d.endpoint = host + ":" + name_or_number();
            return d;
        }
        fail("expected 'leaf', 'scripted', 'close', or 'remote'");
    }

    std::string name_or_number() {
        if (peek().kind == detail::Token::Kind::number) {
            std::string t = peek().text;
            ++pos_;
            return t;
        }
        return name();
    }
};

}  // namespace

Scenario parse_scenario(std::string_view text) {
    ScenarioParser p(text);
    return p.parse();
}

ScenarioReport run_scenario(const Scenario& sc, const EngineOptions& opts,
                            std::chrono::milliseconds remote_timeout) {
    std::map<std::string, CompiledPolicy> compiled;
    for (const auto& p : sc.policies) {
        auto diags = validate(p, sc.registry);
        if (!diags.empty())
            throw ValidationError("policy '" + p.name + "': " + diags[0].message);
        compiled.emplace(p.name, compile_policy(p, sc.registry));
    }

    std::map<std::string, NegotiatorPtr> negotiators;
    for (const auto& d : sc.negotiators) {
        if (negotiators.count(d.name))
            throw ValidationError("duplicate negotiator '" + d.name + "'");
        switch (d.kind) {
            case NegotiatorDecl::Kind::leaf: {
                const ConfigType* ct = sc.registry.find(d.type_id);
                if (!ct) throw ValidationError("unknown type '" + d.type_id + "'");
                negotiators.emplace(d.name, leaf_negotiator(*ct, d.capability, d.name, opts.qe));
                break;
            }
            case NegotiatorDecl::Kind::scripted: {
                const ConfigType* ct = sc.registry.find(d.type_id);
                if (!ct) throw ValidationError("unknown type '" + d.type_id + "'");
                negotiators.emplace(d.name, scripted_negotiator(*ct, d.script, d.name));
                break;
            }
            case NegotiatorDecl::Kind::close: {
                auto it = compiled.find(d.policy_id);
                if (it == compiled.end())
                    throw ValidationError("unknown policy '" + d.policy_id + "'");
                Bindings binds;
                for (const auto& [server, negotiator] : d.bindings) {
                    auto nit = negotiators.find(negotiator);
                    if (nit == negotiators.end())
                        throw ValidationError("unknown negotiator '" + negotiator +
                                              "' in bindings of '" + d.name + "'");
                    binds.emplace(server, nit->second);
                }
                negotiators.emplace(d.name, close_policy(it->second, std::move(binds), opts,
                                                         d.name));
                break;
            }
            case NegotiatorDecl::Kind::remote: {
                auto [host, port] = parse_endpoint(d.endpoint);
                negotiators.emplace(d.name, std::make_shared<RemoteNegotiator>(
                                                host, port, remote_timeout, d.name));
                break;
            }
        }
    }

    ScenarioReport report;
    auto t0 = std::chrono::steady_clock::now();
    for (const auto& step : sc.steps) {
        auto it = negotiators.find(step.target);
        if (it == negotiators.end())
            throw ValidationError("query targets unknown negotiator '" + step.target + "'");
        StepReport row;
        row.target = step.target;
        row.query_text = to_text(step.query);
        auto s0 = std::chrono::steady_clock::now();
        try {
            ExtendedOffer eo = it->second->negotiate(step.query);
            row.offer_text = to_text(eo.formula);
            row.token_valid = validate_token(eo, opts.qe);
        } catch (const NegotiationFailure& e) {
            row.failed = true;
            row.failure = e.what();
            ++report.failures;
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - s0)
                          .count();
        report.steps.push_back(std::move(row));
    }
    report.total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace nego
