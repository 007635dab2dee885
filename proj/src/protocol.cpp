#include "nego/protocol.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <iostream>
#include <mutex>
#include <sodium.h>
#include <thread>

#include "nego/parse.hpp"
#include "nego/print.hpp"

namespace nego {

namespace {

const char* kMagic = "NEGO/1";

const char* type_name(Message::Type t) {
    switch (t) {
        case Message::Type::init: return "INIT";
        case Message::Type::terms: return "TERMS";
        case Message::Type::query: return "QUERY";
        case Message::Type::offer: return "OFFER";
        case Message::Type::accept: return "ACCEPT";
        case Message::Type::invoice: return "INVOICE";
        case Message::Type::reject: return "REJECT";
        case Message::Type::terminate: return "TERMINATE";
    }
    return "?";
}

bool type_of(std::string_view name, Message::Type* out) {
    static const std::pair<const char*, Message::Type> table[] = {
        {"INIT", Message::Type::init},       {"TERMS", Message::Type::terms},
        {"QUERY", Message::Type::query},     {"OFFER", Message::Type::offer},
        {"ACCEPT", Message::Type::accept},   {"INVOICE", Message::Type::invoice},
        {"REJECT", Message::Type::reject},   {"TERMINATE", Message::Type::terminate},
    };
    for (const auto& [n, t] : table) {
        if (name == n) {
            *out = t;
            return true;
        }
    }
    return false;
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return s;
}

std::vector<std::string> split_tabs(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = s.find('\t', start);
        if (tab == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, tab - start));
        start = tab + 1;
    }
}

bool valid_session_id(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    }
    return true;
}

std::string random_session_id() {
    unsigned char raw[8];
    randombytes_buf(raw, sizeof raw);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned char b : raw) {
        out += digits[b >> 4];
        out += digits[b & 0xf];
    }
    return out;
}

}  // namespace

std::string encode(const Message& m) {
    std::string payload;
    switch (m.type) {
        case Message::Type::init:
            break;
        case Message::Type::terms:
        case Message::Type::query:
            payload = sanitize(m.formula);
            break;
        case Message::Type::offer:
        case Message::Type::accept:
            payload = sanitize(m.formula) + "\t" + m.token;
            break;
        case Message::Type::invoice: {
            payload = sanitize(m.formula);
            for (const auto& [id, f] : m.sub_acceptances)
                payload += "\t" + id + "=" + sanitize(f);
            break;
        }
        case Message::Type::reject:
        case Message::Type::terminate:
            payload = sanitize(m.reason);
            break;
    }
    std::string line = std::string(kMagic) + " " + type_name(m.type) + " " + m.session_id;
    if (!payload.empty()) line += " " + payload;
    return line;
}

Message decode(std::string_view line) {
    auto need = [&](bool cond, const char* what) {
        if (!cond) throw ProtocolError(std::string("malformed frame (") + what + "): " +
                                       std::string(line.substr(0, 200)));
    };
    std::size_t sp1 = line.find(' ');
    need(sp1 != std::string_view::npos, "missing type");
    need(line.substr(0, sp1) == kMagic, "bad magic");
    std::size_t sp2 = line.find(' ', sp1 + 1);
    need(sp2 != std::string_view::npos, "missing session id");
    Message m;
    need(type_of(line.substr(sp1 + 1, sp2 - sp1 - 1), &m.type), "unknown type");
    std::size_t sp3 = line.find(' ', sp2 + 1);
    std::string_view sid = sp3 == std::string_view::npos ? line.substr(sp2 + 1)
                                                         : line.substr(sp2 + 1, sp3 - sp2 - 1);
    need(valid_session_id(sid), "bad session id");
    m.session_id = std::string(sid);
    std::string_view payload =
        sp3 == std::string_view::npos ? std::string_view{} : line.substr(sp3 + 1);

    switch (m.type) {
        case Message::Type::init:
            need(payload.empty(), "unexpected payload");
            break;
        case Message::Type::terms:
        case Message::Type::query:
            need(!payload.empty(), "missing formula");
            m.formula = std::string(payload);
            break;
        case Message::Type::offer:
        case Message::Type::accept: {
            auto fields = split_tabs(payload);
            need(fields.size() == 2 && !fields[0].empty(), "expected formula and token");
            m.formula = fields[0];
            m.token = fields[1];
            break;
        }
        case Message::Type::invoice: {
            auto fields = split_tabs(payload);
            need(!fields.empty() && !fields[0].empty(), "missing accepted formula");
            m.formula = fields[0];
            for (std::size_t i = 1; i < fields.size(); ++i) {
                std::size_t eq = fields[i].find('=');
                need(eq != std::string::npos && eq > 0, "bad sub-acceptance field");
                m.sub_acceptances.emplace_back(fields[i].substr(0, eq), fields[i].substr(eq + 1));
            }
            break;
        }
        case Message::Type::reject:
        case Message::Type::terminate:
            m.reason = std::string(payload);
            break;
    }
    return m;
}

// --- sockets ----------------------------------------------------------------

namespace {

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd(o.fd) { o.fd = -1; }
    Fd& operator=(Fd&& o) noexcept {
        reset();
        std::swap(fd, o.fd);
        return *this;
    }
    ~Fd() { reset(); }
    void reset() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
    explicit operator bool() const { return fd >= 0; }
};

// line-buffered reader with a poll deadline per line
class LineReader {
public:
    explicit LineReader(int fd) : fd_(fd) {}

    // false on EOF; throws NegotiationFailure on timeout when deadline_ms>=0
    bool read_line(std::string& out, int deadline_ms, const std::atomic<bool>* stop = nullptr) {
        while (true) {
            std::size_t nl = buf_.find('\n');
            if (nl != std::string::npos) {
                out = buf_.substr(0, nl);
                if (!out.empty() && out.back() == '\r') out.pop_back();
                buf_.erase(0, nl + 1);
                return true;
            }
            struct pollfd p{fd_, POLLIN, 0};
            int tick = deadline_ms < 0 ? 250 : std::min(250, deadline_ms);
            int rc = ::poll(&p, 1, tick);
            if (stop && stop->load()) return false;
            if (rc < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            if (rc == 0) {
                if (deadline_ms < 0) continue;
                deadline_ms -= tick;
                if (deadline_ms <= 0)
                    throw NegotiationFailure("timed out waiting for a protocol frame");
                continue;
            }
            char chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) return false;
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buf_;
};

bool send_all(int fd, std::string_view data) {
    while (!data.empty()) {
        ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n <= 0) return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

bool send_message(int fd, const Message& m) { return send_all(fd, encode(m) + "\n"); }

Fd connect_to(const std::string& host, uint16_t port, int timeout_ms) {
    struct addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* res = nullptr;
    std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
        throw NegotiationFailure("cannot resolve " + host + ":" + service);
    Fd fd;
    for (auto* ai = res; ai; ai = ai->ai_next) {
        Fd candidate(::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK, ai->ai_protocol));
        if (!candidate) continue;
        int rc = ::connect(candidate.fd, ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno != EINPROGRESS) continue;
        if (rc != 0) {
            struct pollfd p{candidate.fd, POLLOUT, 0};
            if (::poll(&p, 1, timeout_ms) <= 0) continue;
            int err = 0;
            socklen_t len = sizeof err;
            if (::getsockopt(candidate.fd, SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0)
                continue;
        }
        // back to blocking; reads are poll-driven anyway
        int flags = ::fcntl(candidate.fd, F_GETFL, 0);
        ::fcntl(candidate.fd, F_SETFL, flags & ~O_NONBLOCK);
        fd = std::move(candidate);
        break;
    }
    ::freeaddrinfo(res);
    if (!fd) throw NegotiationFailure("cannot connect to " + host + ":" + service);
    return fd;
}

}  // namespace

// --- server -----------------------------------------------------------------

struct Server::Impl {
    NegotiatorPtr negotiator;
    std::string host;
    uint16_t requested_port;
    uint16_t actual_port = 0;
    Fd listener;
    std::atomic<bool> stopping{false};
    std::thread accept_thread;
    std::mutex sessions_m;
    std::vector<std::thread> sessions;
    std::function<void(const std::string&)> log;

    void say(const std::string& line) {
        if (log) log(line);
    }

    void session(Fd fd) {
        LineReader reader(fd.fd);
        std::string line;
        std::string sid;
        std::string last_token;
        enum class Phase { awaiting_init, negotiating, done } phase = Phase::awaiting_init;

        auto reject = [&](const std::string& reason) {
            Message r;
            r.type = Message::Type::reject;
            r.session_id = sid.empty() ? "0" : sid;
            r.reason = reason;
            send_message(fd.fd, r);
        };

        while (phase != Phase::done && reader.read_line(line, -1, &stopping)) {
            Message m;
            try {
                m = decode(line);
            } catch (const ProtocolError& e) {
                reject(e.what());
                break;
            }
            if (phase == Phase::awaiting_init) {
                if (m.type != Message::Type::init) {
                    reject("expected INIT");
                    break;
                }
                sid = m.session_id;
                say("session " + sid + ": opened");
                Message t;
                t.type = Message::Type::terms;
                t.session_id = sid;
                t.formula = to_text(negotiator->config_type());
                if (!send_message(fd.fd, t)) break;
                phase = Phase::negotiating;
                continue;
            }
            if (m.session_id != sid) {
                reject("unknown session id");
                break;
            }
            switch (m.type) {
                case Message::Type::query: {
                    say("session " + sid + ": query " + m.formula);
                    Message reply;
                    reply.session_id = sid;
                    try {
                        FormulaPtr q = parse_formula(m.formula);
                        ExtendedOffer eo = negotiator->negotiate(q);
                        reply.type = Message::Type::offer;
                        reply.formula = to_text(eo.formula);
                        reply.token = token_digest(*eo.token);
                        last_token = reply.token;
                    } catch (const ParseError& e) {
                        reply.type = Message::Type::reject;
                        reply.reason = std::string("bad query: ") + e.what();
                        phase = Phase::done;
                    } catch (const std::exception& e) {
                        // negotiation failure on our side ends the session
                        reply.type = Message::Type::terminate;
                        reply.reason = std::string("negotiation-failure: ") + e.what();
                        phase = Phase::done;
                    }
                    if (!send_message(fd.fd, reply)) phase = Phase::done;
                    break;
                }
                case Message::Type::accept: {
                    say("session " + sid + ": accept " + m.formula);
                    Message reply;
                    reply.session_id = sid;
                    if (m.token.empty() || m.token != last_token) {
                        reply.type = Message::Type::reject;
                        reply.reason = "stale or unknown token";
                    } else {
                        try {
                            auto stored = negotiator->find_issued(m.token);
                            if (!stored) throw AcceptError(AcceptError::Kind::unknown_token,
                                                           "token not found");
                            FormulaPtr acc = parse_formula(m.formula);
                            Invoice inv = negotiator->accept(*stored, acc, sid);
                            reply.type = Message::Type::invoice;
                            reply.formula = to_text(inv.accepted);
                            for (const auto& [id, f] : inv.sub_acceptances)
                                reply.sub_acceptances.emplace_back(id, to_text(f));
                        } catch (const std::exception& e) {
                            reply.type = Message::Type::reject;
                            reply.reason = e.what();
                        }
                    }
                    send_message(fd.fd, reply);
                    phase = Phase::done;  // accept concludes the session either way
                    break;
                }
                case Message::Type::terminate:
                    say("session " + sid + ": terminated by client");
                    phase = Phase::done;
                    break;
                default:
                    reject("unexpected frame in this state");
                    phase = Phase::done;
                    break;
            }
        }
        if (!sid.empty()) say("session " + sid + ": closed");
    }

    void accept_loop() {
        while (!stopping.load()) {
            struct pollfd p{listener.fd, POLLIN, 0};
            int rc = ::poll(&p, 1, 250);
            if (rc <= 0) continue;
            int cfd = ::accept(listener.fd, nullptr, nullptr);
            if (cfd < 0) continue;
            std::lock_guard lock(sessions_m);
            sessions.emplace_back([this, cfd] { session(Fd(cfd)); });
        }
    }
};

Server::Server(NegotiatorPtr negotiator, std::string host, uint16_t port)
    : impl_(std::make_unique<Impl>()) {
    impl_->negotiator = std::move(negotiator);
    impl_->host = std::move(host);
    impl_->requested_port = port;
}

Server::~Server() { stop(); }

void Server::start() {
    struct addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    struct addrinfo* res = nullptr;
    std::string service = std::to_string(impl_->requested_port);
    if (::getaddrinfo(impl_->host.empty() ? nullptr : impl_->host.c_str(), service.c_str(),
                      &hints, &res) != 0 ||
        !res)
        throw Error("cannot resolve bind address " + impl_->host);
    Fd fd;
    std::string err = "no usable address";
    for (auto* ai = res; ai; ai = ai->ai_next) {
        Fd candidate(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!candidate) continue;
        int one = 1;
        ::setsockopt(candidate.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(candidate.fd, ai->ai_addr, ai->ai_addrlen) != 0) {
            err = std::strerror(errno);
            continue;
        }
        if (::listen(candidate.fd, 64) != 0) {
            err = std::strerror(errno);
            continue;
        }
        struct sockaddr_storage ss{};
        socklen_t len = sizeof ss;
        ::getsockname(candidate.fd, reinterpret_cast<struct sockaddr*>(&ss), &len);
        impl_->actual_port = ss.ss_family == AF_INET
                                 ? ntohs(reinterpret_cast<struct sockaddr_in*>(&ss)->sin_port)
                                 : ntohs(reinterpret_cast<struct sockaddr_in6*>(&ss)->sin6_port);
        fd = std::move(candidate);
        break;
    }
    ::freeaddrinfo(res);
    if (!fd) throw Error("bind failed: " + err);
    impl_->listener = std::move(fd);
    impl_->stopping = false;
    impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void Server::stop() {
    if (!impl_ || impl_->stopping.exchange(true)) return;
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    impl_->listener.reset();
    std::vector<std::thread> sessions;
    {
        std::lock_guard lock(impl_->sessions_m);
        sessions.swap(impl_->sessions);
    }
    for (auto& t : sessions)
        if (t.joinable()) t.join();
}

uint16_t Server::port() const { return impl_->actual_port; }

void Server::set_logger(std::function<void(const std::string&)> log) {
    impl_->log = std::move(log);
}

// --- remote negotiator --------------------------------------------------------

struct RemoteNegotiator::Impl {
    std::string host;
    uint16_t port;
    int timeout_ms;
    std::mutex m;
    Fd fd;
    std::string sid;
    std::optional<ConfigType> terms;
    std::string last_token;

    // callers hold the mutex
    void ensure_session() {
        if (fd) return;
        Fd conn = connect_to(host, port, timeout_ms);
        std::string new_sid = random_session_id();
        Message init;
        init.type = Message::Type::init;
        init.session_id = new_sid;
        if (!send_message(conn.fd, init))
            throw NegotiationFailure("connection lost during handshake");
        Message terms_msg = await(conn.fd, Message::Type::terms);
        try {
            ConfigType ct = parse_config_type(terms_msg.formula);
            terms = std::move(ct);
        } catch (const ParseError& e) {
            throw NegotiationFailure(std::string("unparseable terms: ") + e.what());
        }
        fd = std::move(conn);
        sid = std::move(new_sid);
    }

    Message await(int on_fd, Message::Type want) {
        LineReader reader(on_fd);
        std::string line;
        if (!reader.read_line(line, timeout_ms))
            throw NegotiationFailure("connection closed by remote negotiator");
        Message m = decode(line);
        if (m.type == Message::Type::reject || m.type == Message::Type::terminate)
            throw NegotiationFailure("remote negotiator declined: " + m.reason);
        if (m.type != want) throw NegotiationFailure("unexpected frame from remote negotiator");
        return m;
    }

    void drop() {
        fd.reset();
        sid.clear();
    }
};

RemoteNegotiator::RemoteNegotiator(std::string host, uint16_t port,
                                   std::chrono::milliseconds timeout, std::string name)
    : impl_(std::make_unique<Impl>()) {
    impl_->host = std::move(host);
    impl_->port = port;
    impl_->timeout_ms = static_cast<int>(timeout.count());
    name_ = name.empty() ? impl_->host + ":" + std::to_string(port) : std::move(name);
}

RemoteNegotiator::~RemoteNegotiator() = default;

const ConfigType& RemoteNegotiator::config_type() const {
    std::lock_guard lock(impl_->m);
    if (!impl_->terms) {
        try {
            impl_->ensure_session();
        } catch (...) {
            impl_->drop();
            throw;
        }
    }
    return *impl_->terms;
}

std::optional<ConfigType> RemoteNegotiator::known_config_type() const {
    std::lock_guard lock(impl_->m);
    return impl_->terms;
}

ExtendedOffer RemoteNegotiator::negotiate(const FormulaPtr& query) {
    std::lock_guard lock(impl_->m);
    try {
        impl_->ensure_session();
        Message q;
        q.type = Message::Type::query;
        q.session_id = impl_->sid;
        q.formula = to_text(query);
        if (!send_message(impl_->fd.fd, q)) throw NegotiationFailure("connection lost");
        Message offer = impl_->await(impl_->fd.fd, Message::Type::offer);
        impl_->last_token = offer.token;
        return {parse_formula(offer.formula), opaque_token(offer.token)};
    } catch (const NegotiationFailure&) {
        impl_->drop();
        throw;
    } catch (const std::exception& e) {
        impl_->drop();
        throw NegotiationFailure(std::string("remote negotiation failed: ") + e.what());
    }
}

Invoice RemoteNegotiator::accept(const ExtendedOffer& offer, const FormulaPtr& acceptance,
                                 const std::string&) {
    std::lock_guard lock(impl_->m);
    if (!impl_->fd) throw AcceptError(AcceptError::Kind::unknown_token, "no active session");
    if (!offer.token || offer.token->kind != Token::Kind::opaque)
        throw AcceptError(AcceptError::Kind::unknown_token, "offer token is not a wire token");
    Message a;
    a.type = Message::Type::accept;
    a.session_id = impl_->sid;
    a.formula = to_text(acceptance);
    a.token = offer.token->opaque;
    if (!send_message(impl_->fd.fd, a)) {
        impl_->drop();
        throw NegotiationFailure("connection lost");
    }
    std::string line;
    LineReader reader(impl_->fd.fd);
    if (!reader.read_line(line, impl_->timeout_ms)) {
        impl_->drop();
        throw NegotiationFailure("connection closed by remote negotiator");
    }
    Message m = decode(line);
    impl_->drop();  // accept concludes the session
    if (m.type == Message::Type::reject)
        throw AcceptError(AcceptError::Kind::not_entailing, "rejected: " + m.reason);
    if (m.type != Message::Type::invoice)
        throw NegotiationFailure("unexpected frame from remote negotiator");
    Invoice inv;
    inv.session_id = m.session_id;
    inv.accepted = parse_formula(m.formula);
    inv.token = offer.token;
    for (const auto& [id, f] : m.sub_acceptances)
        inv.sub_acceptances.emplace_back(id, parse_formula(f));
    return inv;
}

std::pair<std::string, uint16_t> parse_endpoint(const std::string& text) {
    std::size_t colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size())
        throw Error("expected host:port, got '" + text + "'");
    int port = 0;
    for (std::size_t i = colon + 1; i < text.size(); ++i) {
        char c = text[i];
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw Error("bad port in '" + text + "'");
        port = port * 10 + (c - '0');
        if (port > 65535) throw Error("bad port in '" + text + "'");
    }
    return {text.substr(0, colon), static_cast<uint16_t>(port)};
}

}  // namespace nego
