#include <sodium.h>

#include <array>
#include <cstring>

#include "nego/engine.hpp"
#include "nego/print.hpp"

namespace nego {

TokenPtr opaque_token(std::string bytes) {
    auto t = std::make_shared<Token>();
    t->kind = Token::Kind::opaque;
    t->opaque = std::move(bytes);
    return t;
}

TokenPtr rule_offer_token(FormulaPtr formula, FormulaPtr condition,
                          std::vector<SubOfferRecord> subs) {
    auto t = std::make_shared<Token>();
    t->kind = Token::Kind::rule_offer;
    t->formula = std::move(formula);
    t->condition = std::move(condition);
    t->subs = std::move(subs);
    return t;
}

TokenPtr policy_sum_token(FormulaPtr formula, std::vector<TokenPtr> branches) {
    auto t = std::make_shared<Token>();
    t->kind = Token::Kind::policy_sum;
    t->formula = std::move(formula);
    t->branches = std::move(branches);
    return t;
}

namespace {

void append_field(std::string& out, const std::string& s) {
    out += std::to_string(s.size());
    out += ":";
    out += s;
}

std::array<unsigned char, crypto_generichash_KEYBYTES>& token_key() {
    static std::array<unsigned char, crypto_generichash_KEYBYTES> key = [] {
        std::array<unsigned char, crypto_generichash_KEYBYTES> k{};
        if (sodium_init() < 0) throw Error("libsodium initialization failed");
        const char* env = std::getenv("NEGO_TOKEN_KEY");
        if (env && *env) {
            crypto_generichash(k.data(), k.size(),
                               reinterpret_cast<const unsigned char*>(env), std::strlen(env),
                               nullptr, 0);
        } else {
            randombytes_buf(k.data(), k.size());
        }
        return k;
    }();
    return key;
}

std::string hex(const unsigned char* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out += digits[data[i] >> 4];
        out += digits[data[i] & 0xf];
    }
    return out;
}

}  // namespace

void set_token_key(const std::string& key_material) {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
    crypto_generichash(token_key().data(), token_key().size(),
                       reinterpret_cast<const unsigned char*>(key_material.data()),
                       key_material.size(), nullptr, 0);
}

std::string token_canonical_text(const Token& t) {
    std::string out;
    switch (t.kind) {
        case Token::Kind::opaque:
            out += "O";
            append_field(out, t.opaque);
            break;
        case Token::Kind::rule_offer:
            out += "R";
            append_field(out, to_text(t.formula));
            append_field(out, to_text(t.condition));
            out += std::to_string(t.subs.size());
            for (const auto& s : t.subs) {
                append_field(out, s.server_id);
                append_field(out, to_text(s.type));
                append_field(out, to_text(s.offer.formula));
                append_field(out, token_canonical_text(*s.offer.token));
            }
            break;
        case Token::Kind::policy_sum:
            out += "S";
            append_field(out, to_text(t.formula));
            out += std::to_string(t.branches.size());
            for (const auto& b : t.branches) append_field(out, token_canonical_text(*b));
            break;
    }
    return out;
}

std::string token_digest(const Token& t) {
    std::string text = token_canonical_text(t);
    unsigned char mac[crypto_generichash_BYTES];
    crypto_generichash(mac, sizeof mac, reinterpret_cast<const unsigned char*>(text.data()),
                       text.size(), token_key().data(), token_key().size());
    return hex(mac, sizeof mac);
}

}  // namespace nego
