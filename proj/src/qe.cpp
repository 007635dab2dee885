#include "nego/qe.hpp"

#include <algorithm>
#include <map>

#include "nego/print.hpp"

namespace nego {

namespace {

LinearConstraint false_row() {
    LinearConstraint c;
    c.bound = Rational(-1);
    c.cmp = Cmp::le;
    return c;
}

void set_false(ConstraintSystem& s) { s.constraints = {false_row()}; }

// lower/upper bound view of a constraint on x: x >= value (strict?) or
// x <= value where "value" is an affine form over the other variables
struct Bound {
    std::map<Var, Rational> coeffs;  // of the residual form
    Rational bound;
    bool strict;
};

}  // namespace

bool LinearConstraint::ground_true() const {
    switch (cmp) {
        case Cmp::le: return Rational(0) <= bound;
        case Cmp::lt: return Rational(0) < bound;
        case Cmp::eq: return bound.is_zero();
    }
    return false;
}

void LinearConstraint::normalize() {
    if (coeffs.empty()) {
        // canonical ground rows: 0 <= 0 / 0 <= -1 style already minimal
        return;
    }
    Rational lead = coeffs.begin()->second;
    Rational factor = lead.abs().reciprocal();
    if (cmp == Cmp::eq && lead.is_negative()) factor = -factor;
    if (factor == Rational(1)) return;
    for (auto& [v, c] : coeffs) c *= factor;
    bound *= factor;
}

LinearConstraint constraint_from_atom(const Formula& a) {
    if (a.kind != Formula::Kind::atom)
        throw std::logic_error("constraint_from_atom: not an atom");
    if (a.rel == Rel::ne)
        throw std::logic_error("constraint_from_atom: '!=' must be split by DNF first");
    LinearForm diff = linear_form(*difference(a.lhs, a.rhs));  // lhs - rhs <rel> 0
    LinearConstraint c;
    bool flip = (a.rel == Rel::ge || a.rel == Rel::gt);
    for (auto& [v, k] : diff.coeffs) c.coeffs.emplace(v, flip ? -k : k);
    c.bound = flip ? diff.constant : -diff.constant;
    switch (a.rel) {
        case Rel::eq: c.cmp = Cmp::eq; break;
        case Rel::le:
        case Rel::ge: c.cmp = Cmp::le; break;
        case Rel::lt:
        case Rel::gt: c.cmp = Cmp::lt; break;
        default: break;
    }
    return c;
}

static void collect_atoms(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
    if (f->kind == Formula::Kind::conj) {
        collect_atoms(f->a, out);
        collect_atoms(f->b, out);
        return;
    }
    if (f->kind != Formula::Kind::atom)
        throw std::logic_error("atoms_to_system: input is not a conjunction of atoms");
    out.push_back(f);
}

ConstraintSystem atoms_to_system(const std::vector<FormulaPtr>& atoms) {
    ConstraintSystem s;
    s.constraints.reserve(atoms.size());
    for (const auto& a : atoms) s.constraints.push_back(constraint_from_atom(*a));
    return s;
}

ConstraintSystem atoms_to_system(const FormulaPtr& conjunct) {
    std::vector<FormulaPtr> atoms;
    collect_atoms(conjunct, atoms);
    return atoms_to_system(atoms);
}

namespace {

// c1 makes c2 redundant? Only comparable rows (identical coefficient maps
// after normalization) are considered.
bool implies_same_coeffs(const LinearConstraint& c1, const LinearConstraint& c2) {
    if (c1.coeffs != c2.coeffs) return false;
    switch (c1.cmp) {
        case Cmp::eq:
            switch (c2.cmp) {
                case Cmp::eq: return c1.bound == c2.bound;
                case Cmp::le: return c1.bound <= c2.bound;
                case Cmp::lt: return c1.bound < c2.bound;
            }
            break;
        case Cmp::le:
            switch (c2.cmp) {
                case Cmp::eq: return false;
                case Cmp::le: return c1.bound <= c2.bound;
                case Cmp::lt: return c1.bound < c2.bound;
            }
            break;
        case Cmp::lt:
            switch (c2.cmp) {
                case Cmp::eq: return false;
                case Cmp::le: return c1.bound <= c2.bound;
                case Cmp::lt: return c1.bound <= c2.bound;
            }
            break;
    }
    return false;
}

std::map<Var, Rational> negated_coeffs(const std::map<Var, Rational>& m) {
    std::map<Var, Rational> out;
    for (const auto& [v, c] : m) out.emplace(v, -c);
    return out;
}

// contradiction or equality-merge between a row and its mirrored-coefficient
// counterpart: sum gives a ground constraint 0 <cmp> b1+b2
bool pair_contradicts(const LinearConstraint& c1, const LinearConstraint& c2) {
    Rational total = c1.bound + c2.bound;
    bool strict = c1.cmp == Cmp::lt || c2.cmp == Cmp::lt;
    if (c1.cmp == Cmp::eq || c2.cmp == Cmp::eq) {
        // eq + (le/lt/eq) on mirrored coeffs: 0 <cmp> total must hold
        if (c1.cmp == Cmp::eq && c2.cmp == Cmp::eq) return !total.is_zero();
        return strict ? !(Rational(0) < total) : !(Rational(0) <= total);
    }
    return strict ? !(Rational(0) < total) : !(Rational(0) <= total);
}

}  // namespace

bool simplify_system(ConstraintSystem& s) {
    std::vector<LinearConstraint> rows;
    rows.reserve(s.constraints.size());
    for (auto c : s.constraints) {
        c.normalize();
        if (c.ground()) {
            if (!c.ground_true()) {
                set_false(s);
                return false;
            }
            continue;  // ground-true rows vanish
        }
        rows.push_back(std::move(c));
    }

    // merge x <= b with -x <= -b into x = b; detect empty pairs
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            if (rows[j].coeffs != negated_coeffs(rows[i].coeffs)) continue;
            if (pair_contradicts(rows[i], rows[j])) {
                set_false(s);
                return false;
            }
            if (rows[i].cmp == Cmp::le && rows[j].cmp == Cmp::le &&
                rows[i].bound == -rows[j].bound) {
                LinearConstraint merged = rows[i];
                merged.cmp = Cmp::eq;
                merged.normalize();
                rows[i] = std::move(merged);
                rows.erase(rows.begin() + j);
                --j;
            }
        }
    }

    // equalities absorb every comparable row (same or mirrored coefficients)
    std::vector<bool> dropped(rows.size(), false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (dropped[i] || rows[i].cmp != Cmp::eq) continue;
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (i == j || dropped[j]) continue;
            Rational value;
            if (rows[j].coeffs == rows[i].coeffs)
                value = rows[i].bound;
            else if (rows[j].coeffs == negated_coeffs(rows[i].coeffs))
                value = -rows[i].bound;
            else
                continue;
            bool ok = rows[j].cmp == Cmp::eq   ? value == rows[j].bound
                      : rows[j].cmp == Cmp::le ? value <= rows[j].bound
                                               : value < rows[j].bound;
            if (!ok) {
                set_false(s);
                return false;
            }
            dropped[j] = true;
        }
    }

    // drop rows implied by another row over the same coefficients
    std::vector<LinearConstraint> kept;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (dropped[i]) continue;
        bool redundant = false;
        for (std::size_t j = 0; j < rows.size() && !redundant; ++j) {
            if (i == j || dropped[j]) continue;
            if (!implies_same_coeffs(rows[j], rows[i])) continue;
            // among mutually implying duplicates keep the first
            if (implies_same_coeffs(rows[i], rows[j]) && i < j) continue;
            redundant = true;
        }
        if (!redundant) kept.push_back(rows[i]);
    }

    s.constraints = std::move(kept);
    return true;
}

namespace {

// substitute x := (bound - rest)/coeff_x from an equality into a constraint
LinearConstraint substitute_equality(const LinearConstraint& target, const LinearConstraint& eq,
                                     const Var& x) {
    Rational cx = target.coeffs.at(x);
    Rational ex = eq.coeffs.at(x);
    Rational factor = cx / ex;  // target - factor*eq removes x
    LinearConstraint out;
    out.cmp = target.cmp;
    out.coeffs = target.coeffs;
    out.coeffs.erase(x);
    for (const auto& [v, c] : eq.coeffs) {
        if (v == x) continue;
        auto [it, inserted] = out.coeffs.emplace(v, -factor * c);
        if (!inserted) {
            it->second -= factor * c;
            if (it->second.is_zero()) out.coeffs.erase(it);
        } else if (it->second.is_zero()) {
            out.coeffs.erase(it);
        }
    }
    out.bound = target.bound - factor * eq.bound;
    return out;
}

Bound bound_on(const LinearConstraint& c, const Var& x) {
    // c: cx*x + rest <cmp> b  ->  x <cmp> (b - rest)/cx when cx > 0
    Rational cx = c.coeffs.at(x);
    Bound b;
    b.strict = c.cmp == Cmp::lt;
    Rational inv = cx.reciprocal();
    for (const auto& [v, k] : c.coeffs) {
        if (v == x) continue;
        b.coeffs.emplace(v, -(k * inv));
    }
    b.bound = c.bound * inv;
    return b;
}

// lower <= x and x <= upper combine to lower <= upper
LinearConstraint combine(const Bound& lower, const Bound& upper) {
    LinearConstraint out;
    out.cmp = (lower.strict || upper.strict) ? Cmp::lt : Cmp::le;
    out.coeffs = lower.coeffs;
    for (const auto& [v, k] : upper.coeffs) {
        auto [it, inserted] = out.coeffs.emplace(v, -k);
        if (!inserted) {
            it->second -= k;
            if (it->second.is_zero()) out.coeffs.erase(it);
        }
    }
    // lower.form <= upper.form  ->  lower.coeffs - upper.coeffs <= ub - lb
    out.bound = upper.bound - lower.bound;
    return out;
}

}  // namespace

ConstraintSystem eliminate_var(const ConstraintSystem& s, const Var& x) {
    ConstraintSystem out;
    std::vector<LinearConstraint> with_x;
    for (const auto& c : s.constraints) {
        if (c.contains(x))
            with_x.push_back(c);
        else
            out.constraints.push_back(c);
    }
    if (with_x.empty()) return out;

    // Gaussian step: an equality containing x substitutes exactly
    auto eq_it = std::find_if(with_x.begin(), with_x.end(),
                              [](const LinearConstraint& c) { return c.cmp == Cmp::eq; });
    if (eq_it != with_x.end()) {
        LinearConstraint eq = *eq_it;
        for (const auto& c : with_x) {
            if (&c == &*eq_it) continue;
            out.constraints.push_back(substitute_equality(c, eq, x));
        }
        return out;
    }

    std::vector<Bound> lowers, uppers;
    for (const auto& c : with_x) {
        if (c.coeffs.at(x).is_negative()) {
            // cx < 0: dividing flips into a lower bound
            lowers.push_back(bound_on(c, x));
        } else {
            uppers.push_back(bound_on(c, x));
        }
    }
    for (const auto& lo : lowers)
        for (const auto& up : uppers) out.constraints.push_back(combine(lo, up));
    return out;
}

namespace {

std::size_t occurrence_count(const ConstraintSystem& s, const Var& x) {
    std::size_t n = 0;
    for (const auto& c : s.constraints) n += c.contains(x) ? 1 : 0;
    return n;
}

std::set<Var> system_vars(const ConstraintSystem& s) {
    std::set<Var> out;
    for (const auto& c : s.constraints)
        for (const auto& [v, k] : c.coeffs) out.insert(v);
    return out;
}

// eliminate every variable in `vars` from the system, cheapest-looking
// variable first, simplifying between steps; false = unsatisfiable
bool project_system(ConstraintSystem& s, std::set<Var> vars) {
    if (!simplify_system(s)) return false;
    while (true) {
        std::optional<Var> next;
        std::size_t best = 0;
        for (const auto& v : vars) {
            std::size_t n = occurrence_count(s, v);
            if (n == 0) continue;
            if (!next || n < best) {
                next = v;
                best = n;
            }
        }
        if (!next) return true;
        s = eliminate_var(s, *next);
        vars.erase(*next);
        if (!simplify_system(s)) return false;
    }
}

}  // namespace

bool system_satisfiable(ConstraintSystem s) { return project_system(s, system_vars(s)); }

FormulaPtr system_to_formula(const ConstraintSystem& s) {
    std::vector<FormulaPtr> parts;
    for (auto c : s.constraints) {
        c.normalize();
        if (c.ground()) {
            parts.push_back(c.ground_true() ? true_formula() : false_formula());
            continue;
        }
        // move negative-coefficient terms to the right-hand side; flip the
        // whole row when nothing would remain on the left
        bool any_positive = false;
        for (const auto& [v, k] : c.coeffs) any_positive |= !k.is_negative();
        Rel rel = c.cmp == Cmp::eq ? Rel::eq : c.cmp == Cmp::le ? Rel::le : Rel::lt;
        if (!any_positive) {
            for (auto& [v, k] : c.coeffs) k = -k;
            c.bound = -c.bound;
            rel = c.cmp == Cmp::eq ? Rel::eq : c.cmp == Cmp::le ? Rel::ge : Rel::gt;
        }
        TermPtr left, right;
        for (const auto& [v, k] : c.coeffs) {
            if (k.is_negative()) {
                TermPtr piece = k == Rational(-1) ? variable(v) : scale(-k, variable(v));
                right = right ? sum(right, piece) : piece;
            } else {
                TermPtr piece = k == Rational(1) ? variable(v) : scale(k, variable(v));
                left = left ? sum(left, piece) : piece;
            }
        }
        if (!c.bound.is_zero() || !right) {
            TermPtr b = constant(c.bound);
            right = right ? sum(right, b) : b;
        }
        parts.push_back(atom(left, rel, right));
    }
    return conjunction(parts);
}

namespace {

std::string system_key(ConstraintSystem s) {
    for (auto& c : s.constraints) c.normalize();
    std::sort(s.constraints.begin(), s.constraints.end());
    std::string key;
    for (const auto& c : s.constraints) {
        key += c.cmp == Cmp::eq ? "E" : c.cmp == Cmp::le ? "L" : "S";
        key += c.bound.text();
        for (const auto& [v, k] : c.coeffs) key += "|" + v.text() + ":" + k.text();
        key += ";";
    }
    return key;
}

// DNF view of a quantifier-free formula as constraint systems
std::vector<ConstraintSystem> dnf_systems(const FormulaPtr& f, const QeOptions& opts) {
    std::vector<ConstraintSystem> out;
    for (const auto& clause : dnf_clauses(f, opts.dnf_cap)) out.push_back(atoms_to_system(clause));
    return out;
}

FormulaPtr assemble(std::vector<ConstraintSystem> systems) {
    std::vector<FormulaPtr> parts;
    std::set<std::string> seen;
    for (auto& s : systems) {
        if (!simplify_system(s)) continue;  // false disjunct
        if (s.constraints.empty()) return true_formula();
        if (!seen.insert(system_key(s)).second) continue;
        parts.push_back(system_to_formula(s));
    }
    return disjunction(parts);
}

}  // namespace

FormulaPtr eliminate_exists(const FormulaPtr& qf_body, const std::set<Var>& vars,
                            const QeOptions& opts) {
    std::vector<ConstraintSystem> projected;
    for (auto& s : dnf_systems(qf_body, opts)) {
        if (!project_system(s, vars)) continue;
        projected.push_back(std::move(s));
    }
    return assemble(std::move(projected));
}

FormulaPtr qe(const FormulaPtr& f, const QeOptions& opts) {
    switch (f->kind) {
        case Formula::Kind::atom: return f;
        case Formula::Kind::conj: return conj(qe(f->a, opts), qe(f->b, opts));
        case Formula::Kind::disj: return disj(qe(f->a, opts), qe(f->b, opts));
        case Formula::Kind::neg: return neg(qe(f->a, opts));
        case Formula::Kind::exists: {
            FormulaPtr body = qe(f->a, opts);  // innermost-out
            return eliminate_exists(body, {f->var}, opts);
        }
    }
    return f;
}

bool is_satisfiable(const FormulaPtr& f, const QeOptions& opts) {
    FormulaPtr g = quantifier_free(*f) ? f : qe(f, opts);
    for (auto& s : dnf_systems(g, opts)) {
        if (project_system(s, system_vars(s))) return true;
    }
    return false;
}

bool entails(const FormulaPtr& f, const FormulaPtr& g, const QeOptions& opts) {
    return !is_satisfiable(conj(f, neg(g)), opts);
}

bool equivalent(const FormulaPtr& f, const FormulaPtr& g, const QeOptions& opts) {
    return entails(f, g, opts) && entails(g, f, opts);
}

FormulaPtr simplify(const FormulaPtr& f, const QeOptions& opts) {
    return assemble(dnf_systems(f, opts));
}

FormulaPtr preference_constraint(const FormulaPtr& f, const Var& x, Direction dir,
                                 const QeOptions& opts) {
    std::set<Var> used = free_vars(*f);
    Var fresh = x;
    do {
        fresh.name += "'";
    } while (used.count(fresh));
    FormulaPtr shifted = substitute(f, x, variable(fresh));
    Rel cmp = dir == Direction::minimize ? Rel::lt : Rel::gt;
    FormulaPtr better = atom(variable(fresh), cmp, variable(x));
    FormulaPtr none_better = neg(exists(fresh, conj(shifted, better)));
    return simplify(qe(none_better, opts), opts);
}

FormulaPtr apply_preference(const FormulaPtr& f, const Var& x, Direction dir,
                            const QeOptions& opts, std::string* warning) {
    if (!free_vars(*f).count(x)) {
        if (warning)
            *warning = "preference parameter " + x.text() + " is not free in the formula; no-op";
        return f;
    }
    return simplify(conj(f, preference_constraint(f, x, dir, opts)), opts);
}

}  // namespace nego
