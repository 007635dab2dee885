#include "nego/logic.hpp"

#include <algorithm>

namespace nego {

Rel negated(Rel r) {
    switch (r) {
        case Rel::eq: return Rel::ne;
        case Rel::ne: return Rel::eq;
        case Rel::le: return Rel::gt;
        case Rel::gt: return Rel::le;
        case Rel::ge: return Rel::lt;
        case Rel::lt: return Rel::ge;
    }
    return Rel::eq;
}

const char* rel_text(Rel r) {
    switch (r) {
        case Rel::eq: return "=";
        case Rel::ne: return "!=";
        case Rel::le: return "<=";
        case Rel::ge: return ">=";
        case Rel::lt: return "<";
        case Rel::gt: return ">";
    }
    return "=";
}

TermPtr variable(Var v) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::variable;
    t->var = std::move(v);
    return t;
}

TermPtr constant(Rational c) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::constant;
    t->value = std::move(c);
    return t;
}

TermPtr sum(TermPtr a, TermPtr b) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::sum;
    t->lhs = std::move(a);
    t->rhs = std::move(b);
    return t;
}

TermPtr scale(Rational c, TermPtr inner) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::scale;
    t->value = std::move(c);
    t->lhs = std::move(inner);
    return t;
}

TermPtr negated_term(const TermPtr& t) {
    if (t->kind == Term::Kind::constant) return constant(-t->value);
    if (t->kind == Term::Kind::scale) return scale(-t->value, t->lhs);
    return scale(Rational(-1), t);
}

TermPtr difference(TermPtr a, TermPtr b) { return sum(std::move(a), negated_term(b)); }

FormulaPtr atom(TermPtr lhs, Rel rel, TermPtr rhs) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::atom;
    f->lhs = std::move(lhs);
    f->rhs = std::move(rhs);
    f->rel = rel;
    return f;
}

FormulaPtr conj(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::conj;
    f->a = std::move(a);
    f->b = std::move(b);
    return f;
}

FormulaPtr disj(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::disj;
    f->a = std::move(a);
    f->b = std::move(b);
    return f;
}

FormulaPtr neg(FormulaPtr a) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::neg;
    f->a = std::move(a);
    return f;
}

FormulaPtr exists(Var v, FormulaPtr body) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::exists;
    f->var = std::move(v);
    f->a = std::move(body);
    return f;
}

FormulaPtr exists_all(const std::set<Var>& vars, FormulaPtr body) {
    // innermost binder = last in iteration order
    FormulaPtr f = std::move(body);
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) f = exists(*it, f);
    return f;
}

FormulaPtr implies(FormulaPtr a, FormulaPtr b) { return disj(neg(std::move(a)), std::move(b)); }

FormulaPtr forall(Var v, FormulaPtr body) { return neg(exists(std::move(v), neg(std::move(body)))); }

FormulaPtr true_formula() {
    static const FormulaPtr t = atom(constant(Rational(0)), Rel::eq, constant(Rational(0)));
    return t;
}

FormulaPtr false_formula() {
    static const FormulaPtr f = atom(constant(Rational(0)), Rel::eq, constant(Rational(1)));
    return f;
}

static bool is_const(const TermPtr& t, long v) {
    return t->kind == Term::Kind::constant && t->value == Rational(v);
}

bool is_true_atom(const Formula& f) {
    return f.kind == Formula::Kind::atom && f.rel == Rel::eq && is_const(f.lhs, 0) &&
           is_const(f.rhs, 0);
}

bool is_false_atom(const Formula& f) {
    return f.kind == Formula::Kind::atom && f.rel == Rel::eq && is_const(f.lhs, 0) &&
           is_const(f.rhs, 1);
}

FormulaPtr conjunction(const std::vector<FormulaPtr>& fs) {
    FormulaPtr out;
    for (const auto& f : fs) {
        if (is_true_atom(*f)) continue;
        if (is_false_atom(*f)) return false_formula();
        out = out ? conj(out, f) : f;
    }
    return out ? out : true_formula();
}

FormulaPtr disjunction(const std::vector<FormulaPtr>& fs) {
    FormulaPtr out;
    for (const auto& f : fs) {
        if (is_false_atom(*f)) continue;
        if (is_true_atom(*f)) return true_formula();
        out = out ? disj(out, f) : f;
    }
    return out ? out : false_formula();
}

bool equal(const Term& a, const Term& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Term::Kind::variable: return a.var == b.var;
        case Term::Kind::constant: return a.value == b.value;
        case Term::Kind::sum: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
        case Term::Kind::scale: return a.value == b.value && equal(*a.lhs, *b.lhs);
    }
    return false;
}

bool equal(const Formula& a, const Formula& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Formula::Kind::atom:
            return a.rel == b.rel && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
        case Formula::Kind::conj:
        case Formula::Kind::disj:
            return equal(*a.a, *b.a) && equal(*a.b, *b.b);
        case Formula::Kind::neg:
            return equal(*a.a, *b.a);
        case Formula::Kind::exists:
            return a.var == b.var && equal(*a.a, *b.a);
    }
    return false;
}

static void collect_term_vars(const Term& t, std::set<Var>& out) {
    switch (t.kind) {
        case Term::Kind::variable: out.insert(t.var); break;
        case Term::Kind::constant: break;
        case Term::Kind::sum:
            collect_term_vars(*t.lhs, out);
            collect_term_vars(*t.rhs, out);
            break;
        case Term::Kind::scale: collect_term_vars(*t.lhs, out); break;
    }
}

std::set<Var> term_vars(const Term& t) {
    std::set<Var> out;
    collect_term_vars(t, out);
    return out;
}

static void collect_free(const Formula& f, std::set<Var>& bound, std::set<Var>& out) {
    switch (f.kind) {
        case Formula::Kind::atom: {
            std::set<Var> vs;
            collect_term_vars(*f.lhs, vs);
            collect_term_vars(*f.rhs, vs);
            for (const auto& v : vs)
                if (!bound.count(v)) out.insert(v);
            break;
        }
        case Formula::Kind::conj:
        case Formula::Kind::disj:
            collect_free(*f.a, bound, out);
            collect_free(*f.b, bound, out);
            break;
        case Formula::Kind::neg: collect_free(*f.a, bound, out); break;
        case Formula::Kind::exists: {
            bool fresh = bound.insert(f.var).second;
            collect_free(*f.a, bound, out);
            if (fresh) bound.erase(f.var);
            break;
        }
    }
}

std::set<Var> free_vars(const Formula& f) {
    std::set<Var> bound, out;
    collect_free(f, bound, out);
    return out;
}

static void collect_bound(const Formula& f, std::set<Var>& out) {
    switch (f.kind) {
        case Formula::Kind::atom: break;
        case Formula::Kind::conj:
        case Formula::Kind::disj:
            collect_bound(*f.a, out);
            collect_bound(*f.b, out);
            break;
        case Formula::Kind::neg: collect_bound(*f.a, out); break;
        case Formula::Kind::exists:
            out.insert(f.var);
            collect_bound(*f.a, out);
            break;
    }
}

std::set<Var> bound_vars(const Formula& f) {
    std::set<Var> out;
    collect_bound(f, out);
    return out;
}

bool quantifier_free(const Formula& f) {
    switch (f.kind) {
        case Formula::Kind::atom: return true;
        case Formula::Kind::conj:
        case Formula::Kind::disj: return quantifier_free(*f.a) && quantifier_free(*f.b);
        case Formula::Kind::neg: return quantifier_free(*f.a);
        case Formula::Kind::exists: return false;
    }
    return true;
}

TermPtr substitute(const TermPtr& term, const Var& x, const TermPtr& t) {
    switch (term->kind) {
        case Term::Kind::variable: return term->var == x ? t : term;
        case Term::Kind::constant: return term;
        case Term::Kind::sum: {
            auto l = substitute(term->lhs, x, t);
            auto r = substitute(term->rhs, x, t);
            return (l == term->lhs && r == term->rhs) ? term : sum(l, r);
        }
        case Term::Kind::scale: {
            auto l = substitute(term->lhs, x, t);
            return l == term->lhs ? term : scale(term->value, l);
        }
    }
    return term;
}

static FormulaPtr substitute_checked(const FormulaPtr& f, const Var& x, const TermPtr& t) {
    switch (f->kind) {
        case Formula::Kind::atom: {
            auto l = substitute(f->lhs, x, t);
            auto r = substitute(f->rhs, x, t);
            return (l == f->lhs && r == f->rhs) ? f : atom(l, f->rel, r);
        }
        case Formula::Kind::conj: {
            auto a = substitute_checked(f->a, x, t);
            auto b = substitute_checked(f->b, x, t);
            return (a == f->a && b == f->b) ? f : conj(a, b);
        }
        case Formula::Kind::disj: {
            auto a = substitute_checked(f->a, x, t);
            auto b = substitute_checked(f->b, x, t);
            return (a == f->a && b == f->b) ? f : disj(a, b);
        }
        case Formula::Kind::neg: {
            auto a = substitute_checked(f->a, x, t);
            return a == f->a ? f : neg(a);
        }
        case Formula::Kind::exists: {
            if (f->var == x) return f;  // x bound below; untouched
            auto a = substitute_checked(f->a, x, t);
            return a == f->a ? f : exists(f->var, a);
        }
    }
    return f;
}

FormulaPtr substitute(const FormulaPtr& f, const Var& x, const TermPtr& t) {
    std::set<Var> bound = bound_vars(*f);
    for (const auto& v : term_vars(*t)) {
        if (bound.count(v))
            throw CaptureError("substitute: replacement term mentions bound variable " + v.text());
    }
    return substitute_checked(f, x, t);
}

TermPtr map_vars(const TermPtr& t, const std::function<Var(const Var&)>& fn) {
    switch (t->kind) {
        case Term::Kind::variable: {
            Var v = fn(t->var);
            return v == t->var ? t : variable(v);
        }
        case Term::Kind::constant: return t;
        case Term::Kind::sum: return sum(map_vars(t->lhs, fn), map_vars(t->rhs, fn));
        case Term::Kind::scale: return scale(t->value, map_vars(t->lhs, fn));
    }
    return t;
}

FormulaPtr map_vars(const FormulaPtr& f, const std::function<Var(const Var&)>& fn) {
    switch (f->kind) {
        case Formula::Kind::atom:
            return atom(map_vars(f->lhs, fn), f->rel, map_vars(f->rhs, fn));
        case Formula::Kind::conj: return conj(map_vars(f->a, fn), map_vars(f->b, fn));
        case Formula::Kind::disj: return disj(map_vars(f->a, fn), map_vars(f->b, fn));
        case Formula::Kind::neg: return neg(map_vars(f->a, fn));
        case Formula::Kind::exists: return exists(fn(f->var), map_vars(f->a, fn));
    }
    return f;
}

Rational evaluate(const Term& t, const Valuation& v) {
    switch (t.kind) {
        case Term::Kind::variable: {
            auto it = v.find(t.var);
            if (it == v.end())
                throw MissingVariableError("evaluate: no value for variable " + t.var.text());
            return it->second;
        }
        case Term::Kind::constant: return t.value;
        case Term::Kind::sum: return evaluate(*t.lhs, v) + evaluate(*t.rhs, v);
        case Term::Kind::scale: return t.value * evaluate(*t.lhs, v);
    }
    return Rational(0);
}

static bool holds(Rel rel, const Rational& a, const Rational& b) {
    switch (rel) {
        case Rel::eq: return a == b;
        case Rel::ne: return !(a == b);
        case Rel::le: return a <= b;
        case Rel::ge: return a >= b;
        case Rel::lt: return a < b;
        case Rel::gt: return a > b;
    }
    return false;
}

bool evaluate(const Formula& f, const Valuation& v) {
    switch (f.kind) {
        case Formula::Kind::atom: return holds(f.rel, evaluate(*f.lhs, v), evaluate(*f.rhs, v));
        case Formula::Kind::conj: return evaluate(*f.a, v) && evaluate(*f.b, v);
        case Formula::Kind::disj: return evaluate(*f.a, v) || evaluate(*f.b, v);
        case Formula::Kind::neg: return !evaluate(*f.a, v);
        case Formula::Kind::exists:
            throw std::logic_error("evaluate: formula is not quantifier-free");
    }
    return false;
}

static FormulaPtr nnf(const FormulaPtr& f, bool positive) {
    switch (f->kind) {
        case Formula::Kind::atom:
            return positive ? f : atom(f->lhs, negated(f->rel), f->rhs);
        case Formula::Kind::conj:
            return positive ? conj(nnf(f->a, true), nnf(f->b, true))
                            : disj(nnf(f->a, false), nnf(f->b, false));
        case Formula::Kind::disj:
            return positive ? disj(nnf(f->a, true), nnf(f->b, true))
                            : conj(nnf(f->a, false), nnf(f->b, false));
        case Formula::Kind::neg: return nnf(f->a, !positive);
        case Formula::Kind::exists:
            throw std::logic_error("to_nnf: formula is not quantifier-free");
    }
    return f;
}

FormulaPtr to_nnf(const FormulaPtr& f) { return nnf(f, true); }

using Clause = std::vector<FormulaPtr>;

static void check_cap(std::size_t n, std::size_t cap) {
    if (n > cap)
        throw ResourceLimitError("DNF disjunct cap exceeded (" + std::to_string(n) + " > " +
                                 std::to_string(cap) + ")");
}

static std::vector<Clause> clauses_of(const FormulaPtr& f, std::size_t cap) {
    switch (f->kind) {
        case Formula::Kind::atom: {
            if (f->rel == Rel::ne)  // x != y  ->  x < y  or  x > y
                return {{atom(f->lhs, Rel::lt, f->rhs)}, {atom(f->lhs, Rel::gt, f->rhs)}};
            return {{f}};
        }
        case Formula::Kind::disj: {
            auto l = clauses_of(f->a, cap);
            auto r = clauses_of(f->b, cap);
            check_cap(l.size() + r.size(), cap);
            l.insert(l.end(), r.begin(), r.end());
            return l;
        }
        case Formula::Kind::conj: {
            auto l = clauses_of(f->a, cap);
            auto r = clauses_of(f->b, cap);
            check_cap(l.size() * r.size(), cap);
            std::vector<Clause> out;
            out.reserve(l.size() * r.size());
            for (const auto& cl : l)
                for (const auto& cr : r) {
                    Clause c = cl;
                    c.insert(c.end(), cr.begin(), cr.end());
                    out.push_back(std::move(c));
                }
            return out;
        }
        default:
            throw std::logic_error("dnf: input not in negation normal form");
    }
}

std::vector<std::vector<FormulaPtr>> dnf_clauses(const FormulaPtr& f, std::size_t cap) {
    return clauses_of(to_nnf(f), cap);
}

FormulaPtr to_dnf(const FormulaPtr& f, std::size_t cap) {
    auto clauses = dnf_clauses(f, cap);
    std::vector<FormulaPtr> parts;
    parts.reserve(clauses.size());
    for (const auto& c : clauses) parts.push_back(conjunction(c));
    return disjunction(parts);
}

static void accumulate(LinearForm& lf, const Term& t, const Rational& factor) {
    switch (t.kind) {
        case Term::Kind::variable: {
            auto [it, inserted] = lf.coeffs.emplace(t.var, factor);
            if (!inserted) it->second += factor;
            if (it->second.is_zero()) lf.coeffs.erase(it);
            break;
        }
        case Term::Kind::constant: lf.constant += factor * t.value; break;
        case Term::Kind::sum:
            accumulate(lf, *t.lhs, factor);
            accumulate(lf, *t.rhs, factor);
            break;
        case Term::Kind::scale: accumulate(lf, *t.lhs, factor * t.value); break;
    }
}

LinearForm linear_form(const Term& t) {
    LinearForm lf;
    accumulate(lf, t, Rational(1));
    return lf;
}

}  // namespace nego
