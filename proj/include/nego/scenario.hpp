#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "nego/engine.hpp"
#include "nego/policy.hpp"

namespace nego {

// A scenario file wires a complete negotiation setup: the type registry,
// policies, negotiators (leaf, scripted, closed policies, remote endpoints),
// and the query steps to run against them.
//
//   type storage = {capacity: decimal, price: decimal; capacity >= 0 && price >= 0}
//   policy storage-brokering { ... }
//   negotiator sub1 = scripted storage [capacity = 50 && price = 3]
//   negotiator sub2 = leaf storage {true}
//   negotiator broker = close storage-brokering {s1 = sub1, s2 = sub2}
//   negotiator far  = remote 127.0.0.1:7471
//   query broker: capacity = 100 && price <= 5

struct NegotiatorDecl {
    enum class Kind { leaf, scripted, close, remote };
    Kind kind;
    std::string name;
    std::string type_id;                     // leaf/scripted
    FormulaPtr capability;                   // leaf
    std::vector<FormulaPtr> script;          // scripted
    std::string policy_id;                   // close
    std::vector<std::pair<std::string, std::string>> bindings;  // close: server id -> negotiator
    std::string endpoint;                    // remote: host:port
    SourceLoc loc;
};

struct ScenarioStep {
    std::string target;
    FormulaPtr query;
    SourceLoc loc;
};

struct Scenario {
    Registry registry;
    std::vector<Policy> policies;
    std::vector<NegotiatorDecl> negotiators;
    std::vector<ScenarioStep> steps;
    std::vector<std::string> warnings;
};

Scenario parse_scenario(std::string_view text);

struct StepReport {
    std::string target;
    std::string query_text;
    std::string offer_text;  // empty when failed
    bool token_valid = false;
    bool failed = false;
    std::string failure;
    double wall_ms = 0;
};

struct ScenarioReport {
    std::vector<StepReport> steps;
    std::size_t failures = 0;
    double total_ms = 0;
};

// Builds the negotiator graph and runs every step. Negotiation failures are
// recorded per step; anything structurally wrong (unknown names, bad
// bindings) throws ValidationError.
ScenarioReport run_scenario(const Scenario& sc, const EngineOptions& opts = {},
                            std::chrono::milliseconds remote_timeout = std::chrono::seconds(10));

}  // namespace nego
