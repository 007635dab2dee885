#include "nego/parse.hpp"

#include <cctype>

#include "textscan.hpp"

namespace nego::detail {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

const char* kPuncts[] = {":=", "&&", "||", "->", "!=", "<=", ">=", "(", ")", "{", "}",
                         "[",  "]",  ",",  ";",  ":",  ".",  "+",  "-", "*", "/", "=",
                         "<",  ">",  "!"};

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == '#') {  // comment to end of line
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        t.offset = i;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            t.kind = Token::Kind::ident;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            t.kind = Token::Kind::number;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        bool matched = false;
        for (const char* p : kPuncts) {
            std::string_view pv(p);
            if (src.substr(i, pv.size()) == pv) {
                t.kind = Token::Kind::punct;
                t.text = std::string(pv);
                advance(pv.size());
                out.push_back(std::move(t));
                matched = true;
                break;
            }
        }
        if (!matched)
            throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    Token end;
    end.kind = Token::Kind::end;
    end.line = line;
    end.column = col;
    end.offset = src.size();
    out.push_back(std::move(end));
    return out;
}

void Parser::fail(const std::string& msg) const {
    throw ParseError(msg, peek().line, peek().column);
}

bool Parser::peek_punct(std::string_view p) const {
    return peek().kind == Token::Kind::punct && peek().text == p;
}

bool Parser::peek_ident(std::string_view w) const {
    return peek().kind == Token::Kind::ident && peek().text == w;
}

bool Parser::accept_punct(std::string_view p) {
    if (!peek_punct(p)) return false;
    ++pos_;
    return true;
}

bool Parser::accept_ident(std::string_view w) {
    if (!peek_ident(w)) return false;
    ++pos_;
    return true;
}

void Parser::expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'");
}

void Parser::expect_ident(std::string_view w) {
    if (!accept_ident(w)) fail("expected '" + std::string(w) + "'");
}

void Parser::expect_end() {
    if (!at_end()) fail("unexpected trailing input '" + peek().text + "'");
}

std::string Parser::name() {
    if (peek().kind != Token::Kind::ident) fail("expected a name");
    std::string out = peek().text;
    std::size_t end_offset = peek().offset + peek().text.size();
    ++pos_;
    // absorb immediately adjacent "-ident" runs: storage-brokering
    while (peek_punct("-") && peek().offset == end_offset) {
        const Token& dash = peek();
        const Token& next = toks_[pos_ + 1];
        if (next.kind != Token::Kind::ident || next.offset != dash.offset + 1) break;
        out += "-" + next.text;
        end_offset = next.offset + next.text.size();
        pos_ += 2;
    }
    return out;
}

Var Parser::var_name() {
    if (peek().kind != Token::Kind::ident) fail("expected a variable");
    std::string first = peek().text;
    if (first == "true" || first == "false" || first == "exists")
        fail("'" + first + "' is reserved");
    ++pos_;
    if (peek_punct(".") && toks_[pos_ + 1].kind == Token::Kind::ident) {
        std::string second = toks_[pos_ + 1].text;
        pos_ += 2;
        return make_var(first, second);
    }
    return make_var(first);
}

Rational Parser::number() {
    if (peek().kind != Token::Kind::number) fail("expected a number");
    std::string text = peek().text;
    ++pos_;
    if (peek_punct("/")) {
        if (text.find('.') != std::string::npos) fail("fraction parts must be integers");
        ++pos_;
        if (peek().kind != Token::Kind::number || peek().text.find('.') != std::string::npos)
            fail("expected an integer denominator");
        std::string den = peek().text;
        ++pos_;
        return Rational::from_text(text + "/" + den);
    }
    return Rational::from_text(text);
}

TermPtr Parser::factor() {
    if (accept_punct("-")) return negated_term(factor());
    if (accept_punct("(")) {
        TermPtr t = term();
        expect_punct(")");
        return t;
    }
    if (peek().kind == Token::Kind::number) return constant(number());
    if (peek().kind == Token::Kind::ident) return variable(var_name());
    fail("expected a term");
}

TermPtr Parser::addend() {
    TermPtr left = factor();
    while (accept_punct("*")) {
        TermPtr right = factor();
        if (left->kind == Term::Kind::constant)
            left = scale(left->value, right);
        else if (right->kind == Term::Kind::constant)
            left = scale(right->value, left);
        else
            fail("product of two non-constant terms");
    }
    return left;
}

TermPtr Parser::term() {
    TermPtr t = addend();
    while (true) {
        if (accept_punct("+"))
            t = sum(t, addend());
        else if (accept_punct("-"))
            t = sum(t, negated_term(addend()));
        else
            return t;
    }
}

static bool is_rel(const Token& t, Rel* out) {
    if (t.kind != Token::Kind::punct) return false;
    if (t.text == "=") *out = Rel::eq;
    else if (t.text == "!=") *out = Rel::ne;
    else if (t.text == "<=") *out = Rel::le;
    else if (t.text == ">=") *out = Rel::ge;
    else if (t.text == "<") *out = Rel::lt;
    else if (t.text == ">") *out = Rel::gt;
    else return false;
    return true;
}

FormulaPtr Parser::primary_formula() {
    if (accept_ident("true")) return true_formula();
    if (accept_ident("false")) return false_formula();
    std::size_t m = mark();
    std::optional<ParseError> attempt;
    try {
        TermPtr lhs = term();
        Rel rel;
        if (!is_rel(peek(), &rel)) fail("expected a relation");
        ++pos_;
        TermPtr rhs = term();
        return atom(lhs, rel, rhs);
    } catch (const ParseError& e) {
        attempt = e;
        rewind(m);
    }
    if (accept_punct("(")) {
        FormulaPtr f = formula();
        expect_punct(")");
        return f;
    }
    if (attempt) throw *attempt;  // the atom attempt got further; its message is better
    fail("expected a formula");
}

FormulaPtr Parser::unary_formula() {
    if (accept_punct("!")) return neg(unary_formula());
    if (accept_ident("exists")) {
        std::vector<Var> binders;
        binders.push_back(var_name());
        while (accept_punct(",")) binders.push_back(var_name());
        expect_punct(".");
        FormulaPtr body = formula();  // quantifier scope extends maximally
        for (auto it = binders.rbegin(); it != binders.rend(); ++it)
            body = exists(*it, body);
        return body;
    }
    return primary_formula();
}

FormulaPtr Parser::and_expr() {
    FormulaPtr f = unary_formula();
    while (accept_punct("&&")) f = conj(f, unary_formula());
    return f;
}

FormulaPtr Parser::or_expr() {
    FormulaPtr f = and_expr();
    while (accept_punct("||")) f = disj(f, and_expr());
    return f;
}

FormulaPtr Parser::formula() {
    FormulaPtr f = or_expr();
    if (accept_punct("->")) return implies(f, formula());
    return f;
}

ConfigType Parser::config_type() {
    ConfigType ct;
    SourceLoc start = loc();
    expect_punct("{");
    while (!peek_punct(";")) {
        if (peek().kind != Token::Kind::ident) fail("expected a parameter name");
        SourceLoc ploc = loc();
        std::string pname = peek().text;
        ++pos_;
        expect_punct(":");
        expect_ident("decimal");
        for (const auto& existing : ct.params)
            if (existing.name == pname)
                throw ParseError("duplicate parameter '" + pname + "'", ploc.line, ploc.column);
        ct.params.push_back(make_var(pname));
        if (!accept_punct(",")) break;
    }
    expect_punct(";");
    ct.constraint = formula();
    expect_punct("}");
    std::set<Var> params = lang(ct);
    for (const auto& v : free_vars(*ct.constraint)) {
        if (!params.count(v))
            throw ParseError("constraint mentions '" + v.text() + "' which is not a parameter",
                             start.line, start.column);
    }
    return ct;
}

TypeExpr Parser::type_expr() {
    TypeExpr te;
    te.loc = loc();
    if (peek_punct("{")) {
        te.inline_type = config_type();
    } else {
        te.id = name();
    }
    return te;
}

std::vector<std::string> Parser::ident_list() {
    std::vector<std::string> out;
    expect_punct("[");
    while (!peek_punct("]")) {
        out.push_back(name());
        if (!accept_punct(",")) break;
    }
    expect_punct("]");
    return out;
}

Rule Parser::rule() {
    Rule r;
    r.loc = loc();
    expect_punct("{");
    expect_ident("trigger");
    expect_punct(":");
    r.trigger_loc = loc();
    r.trigger = formula();
    accept_punct(",");

    expect_ident("uses");
    expect_punct(":");
    expect_punct("[");
    while (!peek_punct("]")) {
        UseDecl u;
        u.loc = loc();
        u.server_id = name();
        expect_punct(":");
        u.type = type_expr();
        r.uses.push_back(std::move(u));
        if (!accept_punct(",")) break;
    }
    expect_punct("]");
    accept_punct(",");

    expect_ident("offer");
    expect_punct(":");
    expect_punct("{");
    while (!peek_punct("}")) {
        OfferAssignment a;
        a.loc = loc();
        a.param = name();
        expect_punct(":=");
        a.value = term();
        r.offer.push_back(std::move(a));
        if (!accept_punct(",")) break;
    }
    expect_punct("}");
    accept_punct(",");

    expect_ident("constraint");
    expect_punct(":");
    r.constraint_loc = loc();
    r.constraint = formula();
    accept_punct(",");
    expect_punct("}");
    return r;
}

Policy Parser::policy() {
    Policy p;
    expect_ident("policy");
    p.name = name();
    expect_punct("{");
    expect_ident("serves");
    expect_punct(":");
    p.serves = type_expr();
    accept_punct(",");
    while (peek_ident("minimize") || peek_ident("maximize")) {
        bool is_min = peek_ident("minimize");
        SourceLoc l = loc();
        ++pos_;
        expect_punct(":");
        auto ids = ident_list();
        if (is_min) {
            if (!p.minimize.empty()) fail("duplicate minimize clause");
            p.minimize = ids;
            p.minimize_loc = l;
        } else {
            if (!p.maximize.empty()) fail("duplicate maximize clause");
            p.maximize = ids;
            p.maximize_loc = l;
        }
        accept_punct(",");
    }
    expect_ident("rules");
    expect_punct(":");
    expect_punct("[");
    while (!peek_punct("]")) {
        p.rules.push_back(rule());
        if (!accept_punct(",")) break;
    }
    expect_punct("]");
    if (p.rules.empty()) fail("policy must declare at least one rule");
    accept_punct(",");
    expect_punct("}");
    return p;
}

Registry Parser::registry(std::vector<std::string>* warnings) {
    Registry reg;
    while (!at_end()) {
        SourceLoc l = loc();
        std::string id = name();
        expect_punct("=");
        ConfigType ct = config_type();
        ct.name = id;
        check_config_type(ct, warnings);
        if (!reg.types.emplace(id, std::move(ct)).second)
            throw ParseError("duplicate type '" + id + "'", l.line, l.column);
        accept_punct(",");
    }
    return reg;
}

}  // namespace nego::detail

namespace nego {

FormulaPtr parse_formula(std::string_view text) {
    detail::Parser p(text);
    FormulaPtr f = p.formula();
    p.expect_end();
    return f;
}

TermPtr parse_term(std::string_view text) {
    detail::Parser p(text);
    TermPtr t = p.term();
    p.expect_end();
    return t;
}

ConfigType parse_config_type(std::string_view text) {
    detail::Parser p(text);
    ConfigType ct = p.config_type();
    p.expect_end();
    return ct;
}

Policy parse_policy(std::string_view text) {
    detail::Parser p(text);
    Policy pol = p.policy();
    p.expect_end();
    return pol;
}

Registry parse_registry(std::string_view text, std::vector<std::string>* warnings) {
    detail::Parser p(text);
    return p.registry(warnings);
}

}  // namespace nego
