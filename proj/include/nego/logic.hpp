#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "nego/errors.hpp"
#include "nego/rational.hpp"

namespace nego {

// A negotiable parameter, optionally qualified by the server it belongs to.
// Rendered "name" or "prefix.name"; equality is componentwise.
struct Var {
    std::string prefix;  // empty = unprefixed
    std::string name;

    friend auto operator<=>(const Var&, const Var&) = default;
    std::string text() const { return prefix.empty() ? name : prefix + "." + name; }
};

inline Var make_var(std::string name) { return Var{"", std::move(name)}; }
inline Var make_var(std::string prefix, std::string name) {
    return Var{std::move(prefix), std::move(name)};
}

enum class Rel { eq, ne, le, ge, lt, gt };

// relation under logical negation: = <-> !=, <= <-> >, >= <-> <
Rel negated(Rel r);
const char* rel_text(Rel r);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

// Linear terms: variables, exact rational constants, sums, and scaling by a
// constant. Immutable; subtrees are shared freely.
struct Term {
    enum class Kind { variable, constant, sum, scale };
    Kind kind;
    Var var;         // variable
    Rational value;  // constant, or scale factor
    TermPtr lhs;     // sum: lhs + rhs; scale: value * lhs
    TermPtr rhs;
};

TermPtr variable(Var v);
TermPtr constant(Rational c);
TermPtr sum(TermPtr a, TermPtr b);
TermPtr scale(Rational c, TermPtr t);
// a - b, folding the sign into constants/scales so printing stays tidy
TermPtr difference(TermPtr a, TermPtr b);
TermPtr negated_term(const TermPtr& t);

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Quantified linear-constraint formulas. Disjunction is structural (negation
// normal form and DNF are unrepresentable without it); implication and
// universal quantification expand at construction, and true/false are the
// canonical ground atoms 0 = 0 and 0 = 1.
struct Formula {
    enum class Kind { atom, conj, disj, neg, exists };
    Kind kind;
    TermPtr lhs;  // atom
    TermPtr rhs;
    Rel rel = Rel::eq;
    FormulaPtr a;  // conj/disj: a, b; neg/exists: a
    FormulaPtr b;
    Var var;  // exists
};

FormulaPtr atom(TermPtr lhs, Rel rel, TermPtr rhs);
FormulaPtr conj(FormulaPtr a, FormulaPtr b);
FormulaPtr disj(FormulaPtr a, FormulaPtr b);
FormulaPtr neg(FormulaPtr a);
FormulaPtr exists(Var v, FormulaPtr body);
FormulaPtr exists_all(const std::set<Var>& vars, FormulaPtr body);
FormulaPtr implies(FormulaPtr a, FormulaPtr b);  // !a || b
FormulaPtr forall(Var v, FormulaPtr body);       // !(exists v. !body)

FormulaPtr true_formula();   // 0 = 0
FormulaPtr false_formula();  // 0 = 1
bool is_true_atom(const Formula& f);
bool is_false_atom(const Formula& f);

// n-ary connectives; literal true/false units are folded away, chains are
// left-associated
FormulaPtr conjunction(const std::vector<FormulaPtr>& fs);
FormulaPtr disjunction(const std::vector<FormulaPtr>& fs);

bool equal(const Term& a, const Term& b);
bool equal(const Formula& a, const Formula& b);
inline bool equal(const TermPtr& a, const TermPtr& b) { return equal(*a, *b); }
inline bool equal(const FormulaPtr& a, const FormulaPtr& b) { return equal(*a, *b); }

std::set<Var> term_vars(const Term& t);
std::set<Var> free_vars(const Formula& f);
std::set<Var> bound_vars(const Formula& f);
bool quantifier_free(const Formula& f);

// Replace free occurrences of x by t. Throws CaptureError if t mentions a
// variable bound anywhere in f.
FormulaPtr substitute(const FormulaPtr& f, const Var& x, const TermPtr& t);
TermPtr substitute(const TermPtr& term, const Var& x, const TermPtr& t);

// Rename every variable (free and bound) through fn. Only safe for injective
// renamings such as server prefixing.
FormulaPtr map_vars(const FormulaPtr& f, const std::function<Var(const Var&)>& fn);
TermPtr map_vars(const TermPtr& t, const std::function<Var(const Var&)>& fn);

using Valuation = std::map<Var, Rational>;

// Throws MissingVariableError if the valuation misses a variable; the
// formula overload requires a quantifier-free input.
Rational evaluate(const Term& t, const Valuation& v);
bool evaluate(const Formula& f, const Valuation& v);

// Negation normal form for quantifier-free formulas: negations vanish by
// flipping atom relations.
FormulaPtr to_nnf(const FormulaPtr& f);

// Disjunctive normal form; != atoms split into < / >. Throws
// ResourceLimitError when more than `cap` disjuncts would be produced.
FormulaPtr to_dnf(const FormulaPtr& f, std::size_t cap = 4096);

// DNF as a list of conjuncts of atoms (the form the eliminator consumes).
std::vector<std::vector<FormulaPtr>> dnf_clauses(const FormulaPtr& f, std::size_t cap = 4096);

// Every term denotes coeffs . vars + constant; this computes that map.
struct LinearForm {
    std::map<Var, Rational> coeffs;  // no zero entries
    Rational constant;
};
LinearForm linear_form(const Term& t);

}  // namespace nego
