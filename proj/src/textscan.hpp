#pragma once

// Internal tokenizer and recursive-descent parser shared by the formula,
// config-type, policy, registry, and scenario grammars.

#include <string>
#include <string_view>
#include <vector>

#include "nego/config_type.hpp"
#include "nego/errors.hpp"
#include "nego/logic.hpp"
#include "nego/policy.hpp"

namespace nego::detail {

struct Token {
    enum class Kind { ident, number, punct, end };
    Kind kind = Kind::end;
    std::string text;
    int line = 1;
    int column = 1;
    std::size_t offset = 0;  // byte offset, for adjacency checks
};

std::vector<Token> tokenize(std::string_view src);

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    FormulaPtr formula();
    TermPtr term();
    ConfigType config_type();
    Policy policy();
    Registry registry(std::vector<std::string>* warnings);

    // identifier, merging adjacent '-' runs (policy and type names may be
    // hyphenated; in formulas '-' is always subtraction)
    std::string name();
    Var var_name();

    const Token& peek() const { return toks_[pos_]; }
    bool at_end() const { return peek().kind == Token::Kind::end; }
    bool peek_punct(std::string_view p) const;
    bool peek_ident(std::string_view w) const;
    bool accept_punct(std::string_view p);
    bool accept_ident(std::string_view w);
    void expect_punct(std::string_view p);
    void expect_ident(std::string_view w);
    void expect_end();
    SourceLoc loc() const { return SourceLoc{peek().line, peek().column}; }

    [[noreturn]] void fail(const std::string& msg) const;

protected:
    std::size_t mark() const { return pos_; }
    void rewind(std::size_t m) { pos_ = m; }

    FormulaPtr or_expr();
    FormulaPtr and_expr();
    FormulaPtr unary_formula();
    FormulaPtr primary_formula();
    TermPtr addend();
    TermPtr factor();
    Rational number();
    Rule rule();
    TypeExpr type_expr();
    std::vector<std::string> ident_list();

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace nego::detail
