#pragma once

#include <stdexcept>
#include <string>

namespace nego {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Source text could not be tokenized or parsed.
struct ParseError : Error {
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line(line),
          column(column) {}
    int line;
    int column;
};

// substitute() would move a variable of the replacement term under a binder.
struct CaptureError : Error {
    using Error::Error;
};

// evaluate() met a free variable the valuation does not cover.
struct MissingVariableError : Error {
    using Error::Error;
};

// The DNF disjunct cap was exceeded during quantifier elimination.
struct ResourceLimitError : Error {
    using Error::Error;
};

// A config type, policy, or scenario failed its load-time checks.
struct ValidationError : Error {
    using Error::Error;
};

// close() bindings do not match the policy's declared servers or types.
struct BindingMismatchError : Error {
    using Error::Error;
};

// A sub-negotiator could not be reached or did not produce an offer.
struct NegotiationFailure : Error {
    using Error::Error;
};

struct ScriptExhaustedError : NegotiationFailure {
    using NegotiationFailure::NegotiationFailure;
};

struct AcceptError : Error {
    enum class Kind { not_entailing, under_specified, unknown_token };
    AcceptError(Kind kind, const std::string& msg) : Error(msg), kind(kind) {}
    Kind kind;
};

// Malformed wire frame or state-machine violation.
struct ProtocolError : Error {
    using Error::Error;
};

}  // namespace nego
