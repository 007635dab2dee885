#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nego/logic.hpp"

namespace nego {

struct QeOptions {
    std::size_t dnf_cap = 4096;  // disjunct cap per elimination step
};

enum class Cmp { le, lt, eq };

// One normalized constraint: coeffs . vars <one-of <=,<,=> bound.
// >= and > are flipped into this form by negating both sides; zero
// coefficients are never stored.
struct LinearConstraint {
    std::map<Var, Rational> coeffs;
    Rational bound;
    Cmp cmp = Cmp::le;

    bool ground() const { return coeffs.empty(); }
    bool ground_true() const;
    bool contains(const Var& x) const { return coeffs.count(x) != 0; }

    // scale so the leading coefficient has magnitude one (sign preserved for
    // inequalities, made positive for equalities)
    void normalize();

    friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
    friend auto operator<=>(const LinearConstraint&, const LinearConstraint&) = default;
};

// conjunction of constraints; one DNF disjunct after !=-splitting
struct ConstraintSystem {
    std::vector<LinearConstraint> constraints;
};

// Linearize a conjunction of atoms (relations =, <=, >=, <, >; != must have
// been split away by DNF first).
ConstraintSystem atoms_to_system(const FormulaPtr& conjunct);
ConstraintSystem atoms_to_system(const std::vector<FormulaPtr>& atoms);
LinearConstraint constraint_from_atom(const Formula& a);

// Fourier-Motzkin projection of the system along x. Equalities containing x
// substitute exactly; remaining lower/upper pairs combine, any strict operand
// keeping the result strict.
ConstraintSystem eliminate_var(const ConstraintSystem& s, const Var& x);

// In-place cleanup: drops ground-true and single-constraint-redundant rows,
// merges opposing non-strict bounds into equalities, detects one-pair
// contradictions. Returns false when the system is unsatisfiable on its
// face; the system is then the canonical false row {0 <= -1}.
bool simplify_system(ConstraintSystem& s);

FormulaPtr system_to_formula(const ConstraintSystem& s);

// decides satisfiability by eliminating every variable
bool system_satisfiable(ConstraintSystem s);

// Quantifier elimination over the rationals, innermost-out. The result is
// quantifier-free and logically equivalent to f.
FormulaPtr qe(const FormulaPtr& f, const QeOptions& opts = {});

// Eliminate a set of variables from a quantifier-free body in one DNF pass.
FormulaPtr eliminate_exists(const FormulaPtr& qf_body, const std::set<Var>& vars,
                            const QeOptions& opts = {});

bool is_satisfiable(const FormulaPtr& f, const QeOptions& opts = {});
bool entails(const FormulaPtr& f, const FormulaPtr& g, const QeOptions& opts = {});
bool equivalent(const FormulaPtr& f, const FormulaPtr& g, const QeOptions& opts = {});

// Heuristic rewriting: DNF, per-disjunct cleanup, dead-disjunct removal,
// deduplication. The result is equivalent to the input.
FormulaPtr simplify(const FormulaPtr& f, const QeOptions& opts = {});

enum class Direction { minimize, maximize };

// Strengthen f so the named parameter takes its least (greatest) value
// admitted by f: f && !(exists x'. f[x'/x] && x' < x), quantifier-eliminated
// and simplified. When x has no attained optimum (an open bound) the result
// is false. No-op with a warning when x is not free in f.
FormulaPtr apply_preference(const FormulaPtr& f, const Var& x, Direction dir,
                            const QeOptions& opts = {}, std::string* warning = nullptr);

// The strengthening conjunct alone (quantifier-free); apply_preference
// returns simplify(f && preference_constraint(f, x, dir)).
FormulaPtr preference_constraint(const FormulaPtr& f, const Var& x, Direction dir,
                                 const QeOptions& opts = {});

}  // namespace nego
