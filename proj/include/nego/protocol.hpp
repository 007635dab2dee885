#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nego/engine.hpp"

namespace nego {

// Wire frames, one per line:  NEGO/1 <TYPE> <session-id> <payload...>
// Payload fields are tab-separated; formulas and config types use the
// canonical text grammar; token blobs are hex.
struct Message {
    enum class Type { init, terms, query, offer, accept, invoice, reject, terminate };
    Type type = Type::init;
    std::string session_id;
    std::string formula;  // query/offer/accept: formula text; terms: config-type text
    std::string token;    // offer/accept: hex token blob
    std::string reason;   // reject/terminate
    // invoice: accepted formula in `formula`, sub acceptances here
    std::vector<std::pair<std::string, std::string>> sub_acceptances;

    friend bool operator==(const Message&, const Message&) = default;
};

// encode omits the trailing newline; decode takes one line without it and
// throws ProtocolError on malformed frames
std::string encode(const Message& m);
Message decode(std::string_view line);

// Serves a negotiator on a TCP endpoint. Sessions run concurrently, one per
// connection, each following Init -> Terms -> (Query -> Offer)* ->
// (Accept -> Invoice|Reject | Terminate). stop() drains in-flight sessions.
class Server {
public:
    Server(NegotiatorPtr negotiator, std::string host, uint16_t port);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start();  // throws Error on bind failure
    void stop();
    uint16_t port() const;  // actual port after start (useful with port 0)
    // optional session log sink (called from session threads)
    void set_logger(std::function<void(const std::string&)> log);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// A negotiator transported over the protocol. Connects lazily: the first
// query (or config_type()) performs the Init/Terms handshake and caches the
// terms. Connection and timeout problems surface as NegotiationFailure.
class RemoteNegotiator final : public Negotiator {
public:
    RemoteNegotiator(std::string host, uint16_t port,
                     std::chrono::milliseconds timeout = std::chrono::seconds(10),
                     std::string name = "");
    ~RemoteNegotiator() override;

    const std::string& name() const override { return name_; }
    const ConfigType& config_type() const override;  // may connect
    std::optional<ConfigType> known_config_type() const override;
    ExtendedOffer negotiate(const FormulaPtr& query) override;
    // Sends Accept over the wire; the offer must carry the opaque token blob
    // received from this endpoint.
    Invoice accept(const ExtendedOffer& offer, const FormulaPtr& acceptance,
                   const std::string& session_id = "") override;
    std::optional<ExtendedOffer> find_issued(const std::string&) const override {
        return std::nullopt;  // tokens are issued (and kept) server-side
    }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string name_;
};

// "host:port" -> pair; throws Error on malformed input
std::pair<std::string, uint16_t> parse_endpoint(const std::string& text);

}  // namespace nego
