// nego: command-line front end for the negotiation engine. Exit codes:
// 0 ok, 1 I/O or bind failure, 2 parse error, 3 resource limit,
// 4 validation failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "nego/engine.hpp"
#include "nego/parse.hpp"
#include "nego/print.hpp"
#include "nego/protocol.hpp"
#include "nego/qe.hpp"
#include "nego/scenario.hpp"

using nlohmann::json;
using namespace nego;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitParse = 2;
constexpr int kExitResource = 3;
constexpr int kExitValidation = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::atomic<bool> g_interrupted{false};
void on_sigint(int) { g_interrupted = true; }

struct TracePrinter {
    void operator()(const TraceEvent& e) const {
        switch (e.kind) {
            case TraceEvent::Kind::query:
                std::cout << "> query " << e.negotiator << ": " << e.text << "\n";
                break;
            case TraceEvent::Kind::sub_query:
                std::cout << "  -> " << e.server_id << ": " << e.text << "\n";
                break;
            case TraceEvent::Kind::sub_offer:
                std::cout << "  <- " << e.server_id << ": " << e.text << "\n";
                break;
            case TraceEvent::Kind::sub_failure:
                std::cout << "  !! " << e.server_id << ": " << e.text << "\n";
                break;
            case TraceEvent::Kind::rule_skip:
                std::cout << "  .. rule skipped: " << e.text << "\n";
                break;
            case TraceEvent::Kind::rule_offer:
                std::cout << "  = rule offer: " << e.text << "\n";
                break;
            case TraceEvent::Kind::preference:
                std::cout << "  ~ preference: " << e.text << "\n";
                break;
            case TraceEvent::Kind::offer:
                std::cout << "< offer " << e.negotiator << ": " << e.text << "\n";
                break;
        }
    }
};

void print_report(const ScenarioReport& report, const std::string& format) {
    if (format == "structured") {
        json steps = json::array();
        for (const auto& s : report.steps) {
            steps.push_back({{"target", s.target},
                             {"query", s.query_text},
                             {"offer", s.offer_text},
                             {"token_valid", s.token_valid},
                             {"failed", s.failed},
                             {"failure", s.failure},
                             {"wall_ms", s.wall_ms}});
        }
        json doc = {{"steps", steps},
                    {"failures", report.failures},
                    {"total_ms", report.total_ms}};
        std::cout << doc.dump(2) << "\n";
        return;
    }
    for (const auto& s : report.steps) {
        if (s.failed) {
            std::cout << s.target << " <- " << s.query_text << "\n  negotiation-failure: "
                      << s.failure << "\n";
        } else {
            std::cout << s.target << " <- " << s.query_text << "\n  offer: " << s.offer_text
                      << "\n  token: " << (s.token_valid ? "valid" : "INVALID") << "  ("
                      << s.wall_ms << " ms)\n";
        }
    }
    std::cout << report.steps.size() << " step(s), " << report.failures << " failure(s), "
              << report.total_ms << " ms total\n";
}

void print_diagnostics(const std::vector<Diagnostic>& diags, const std::string& format) {
    if (format == "structured") {
        json arr = json::array();
        for (const auto& d : diags)
            arr.push_back({{"code", d.code},
                           {"message", d.message},
                           {"line", d.loc.line},
                           {"column", d.loc.column}});
        std::cout << arr.dump(2) << "\n";
        return;
    }
    for (const auto& d : diags)
        std::cout << d.code << " at " << d.loc.line << ":" << d.loc.column << ": " << d.message
                  << "\n";
}

const char* kDemoScenario = R"(# storage brokering demo: a broker resells the combined capacity of two
# sub-providers at a 10% markup
type storage = {capacity: decimal, price: decimal; capacity >= 0 && price >= 0}

policy storage-brokering {
  serves: storage
  rules: [
   { trigger: true,
     uses: [s1:storage, s2:storage],
     offer: { capacity := s1.capacity + s2.capacity,
              price := 1.1*(s1.price + s2.price) },
     constraint:true},
  ]
}

negotiator sub1 = scripted storage [capacity = 50 && price = 3, capacity = 50 && price = 3]
negotiator sub2 = leaf storage {true}
negotiator broker = close storage-brokering {s1 = sub1, s2 = sub2}

query broker: capacity = 100 && price <= 5
)";

int run_demo(bool trace, const QeOptions& qopts, const std::string& format) {
    Scenario sc = parse_scenario(kDemoScenario);
    EngineOptions opts;
    opts.qe = qopts;
    if (trace) opts.trace = TracePrinter{};
    ScenarioReport report = run_scenario(sc, opts);
    print_report(report, format);

    // accept the offer at the lowest admitted price and show the invoice
    Registry reg = sc.registry;
    auto compiled = compile_policy(sc.policies.at(0), reg);
    const ConfigType& ct = reg.types.at("storage");
    Bindings binds{
        {"s1", scripted_negotiator(ct, {parse_formula("capacity = 50 && price = 3")}, "sub1")},
        {"s2", leaf_negotiator(ct, true_formula(), "sub2", qopts)}};
    EngineOptions eopts;
    eopts.qe = qopts;
    auto broker = close_policy(compiled, binds, eopts, "broker");
    ExtendedOffer eo = broker->negotiate(parse_formula("capacity = 100 && price <= 5"));
    FormulaPtr acceptance = parse_formula("capacity = 100 && price = 33/10");
    Invoice inv = broker->accept(eo, acceptance, "demo");
    std::cout << "\naccepting: " << to_text(acceptance) << "\ninvoice:\n";
    for (const auto& [id, f] : inv.sub_acceptances)
        std::cout << "  " << id << " <- " << to_text(f) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical service negotiation engine"};
    app.require_subcommand(1);

    std::size_t dnf_cap = 4096;
    std::string format = "text";
    double timeout_s = 10.0;
    app.add_option("--dnf-cap", dnf_cap, "disjunct cap for quantifier elimination")
        ->capture_default_str();
    app.add_option("--format", format, "output format")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
    app.add_option("--timeout", timeout_s, "remote query timeout in seconds")
        ->capture_default_str();

    std::string formula_text, formula_text2;
    auto* cmd_qe = app.add_subcommand("qe", "eliminate quantifiers from a formula");
    cmd_qe->add_option("formula", formula_text)->required();
    auto* cmd_simplify = app.add_subcommand("simplify", "simplify a quantifier-free formula");
    cmd_simplify->add_option("formula", formula_text)->required();
    auto* cmd_sat = app.add_subcommand("sat", "decide satisfiability");
    cmd_sat->add_option("formula", formula_text)->required();
    auto* cmd_entails = app.add_subcommand("entails", "decide entailment between two formulas");
    cmd_entails->add_option("formula", formula_text)->required();
    cmd_entails->add_option("other", formula_text2)->required();

    std::string policy_path, registry_path, scenario_path;
    auto* cmd_check = app.add_subcommand("check", "validate a policy against a type registry");
    cmd_check->add_option("policy", policy_path)->required();
    cmd_check->add_option("registry", registry_path)->required();

    bool trace = false;
    bool parallel = false;
    auto* cmd_negotiate = app.add_subcommand("negotiate", "run a scenario file");
    cmd_negotiate->add_option("scenario", scenario_path)->required();
    cmd_negotiate->add_flag("--trace", trace, "print every sub-query/sub-offer exchange");
    cmd_negotiate->add_flag("--parallel", parallel,
                            "dispatch independent server groups concurrently");

    std::string bind_endpoint;
    std::vector<std::string> use_specs;
    auto* cmd_serve = app.add_subcommand("serve", "serve a policy on a TCP endpoint");
    cmd_serve->add_option("policy", policy_path)->required();
    cmd_serve->add_option("registry", registry_path)->required();
    cmd_serve->add_option("--bind", bind_endpoint, "host:port to listen on")->required();
    cmd_serve->add_option("--use", use_specs,
                          "binding: id=host:port (remote) or id=leaf:<formula>");
    cmd_serve->add_flag("--parallel", parallel,
                        "dispatch independent server groups concurrently");

    auto* cmd_demo = app.add_subcommand("demo", "run the built-in storage brokering demo");
    cmd_demo->add_flag("--trace", trace, "print every sub-query/sub-offer exchange");

    CLI11_PARSE(app, argc, argv);

    QeOptions qopts{dnf_cap};
    try {
        if (cmd_qe->parsed()) {
            std::cout << to_text(simplify(qe(parse_formula(formula_text), qopts), qopts)) << "\n";
            return kExitOk;
        }
        if (cmd_simplify->parsed()) {
            std::cout << to_text(simplify(parse_formula(formula_text), qopts)) << "\n";
            return kExitOk;
        }
        if (cmd_sat->parsed()) {
            bool sat = is_satisfiable(parse_formula(formula_text), qopts);
            std::cout << (sat ? "sat" : "unsat") << "\n";
            return kExitOk;
        }
        if (cmd_entails->parsed()) {
            bool yes =
                entails(parse_formula(formula_text), parse_formula(formula_text2), qopts);
            std::cout << (yes ? "yes" : "no") << "\n";
            return kExitOk;
        }
        if (cmd_check->parsed()) {
            std::vector<std::string> warnings;
            Registry reg = parse_registry(read_file(registry_path), &warnings);
            Policy pol = parse_policy(read_file(policy_path));
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            auto diags = validate(pol, reg);
            print_diagnostics(diags, format);
            return diags.empty() ? kExitOk : kExitValidation;
        }
        if (cmd_negotiate->parsed()) {
            Scenario sc = parse_scenario(read_file(scenario_path));
            for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
            EngineOptions opts;
            opts.qe = qopts;
            opts.parallel = parallel;
            if (trace) opts.trace = TracePrinter{};
            ScenarioReport report = run_scenario(
                sc, opts,
                std::chrono::milliseconds(static_cast<long>(timeout_s * 1000)));
            print_report(report, format);
            return kExitOk;
        }
        if (cmd_serve->parsed()) {
            std::vector<std::string> warnings;
            Registry reg = parse_registry(read_file(registry_path), &warnings);
            Policy pol = parse_policy(read_file(policy_path));
            auto diags = validate(pol, reg);
            if (!diags.empty()) {
                print_diagnostics(diags, format);
                return kExitValidation;
            }
            CompiledPolicy compiled = compile_policy(pol, reg);

            // expected config type per server id, for leaf bindings
            std::map<std::string, ConfigType> expected;
            std::function<void(const CorePolicy&)> collect = [&](const CorePolicy& node) {
                if (node.is_rule()) {
                    for (const auto& u : node.rule().uses) expected.emplace(u.server_id, u.type);
                } else {
                    collect(*node.left());
                    collect(*node.right());
                }
            };
            collect(*compiled.core);

            Bindings binds;
            for (const auto& spec : use_specs) {
                auto eq = spec.find('=');
                if (eq == std::string::npos)
                    throw ValidationError("--use expects id=endpoint or id=leaf:<formula>");
                std::string id = spec.substr(0, eq);
                std::string rest = spec.substr(eq + 1);
                if (!expected.count(id))
                    throw ValidationError("--use names unknown server '" + id + "'");
                if (rest.rfind("leaf:", 0) == 0) {
                    binds.emplace(id, leaf_negotiator(expected.at(id),
                                                      parse_formula(rest.substr(5)), id, qopts));
                } else {
                    auto [host, port] = parse_endpoint(rest);
                    binds.emplace(
                        id, std::make_shared<RemoteNegotiator>(
                                host, port,
                                std::chrono::milliseconds(static_cast<long>(timeout_s * 1000)),
                                id));
                }
            }
            EngineOptions opts;
            opts.qe = qopts;
            opts.parallel = parallel;
            auto negotiator = close_policy(compiled, binds, opts);

            auto [host, port] = parse_endpoint(bind_endpoint);
            Server server(negotiator, host, port);
            server.set_logger([](const std::string& line) { std::cerr << line << "\n"; });
            server.start();
            std::cerr << "serving '" << pol.name << "' on " << host << ":" << server.port()
                      << "\n";
            std::signal(SIGINT, on_sigint);
            std::signal(SIGTERM, on_sigint);
            while (!g_interrupted)
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            std::cerr << "draining sessions\n";
            server.stop();
            return kExitOk;
        }
        if (cmd_demo->parsed()) {
            return run_demo(trace, qopts, format);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return kExitResource;
    } catch (const BindingMismatchError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
