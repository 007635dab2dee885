#pragma once

// Shared test helpers: deterministic generators for terms, formulas, and
// valuations, plus an elimination-independent one-variable oracle.

#include <random>
#include <string>
#include <vector>

#include "nego/logic.hpp"
#include "nego/parse.hpp"
#include "nego/print.hpp"
#include "nego/qe.hpp"

namespace testsupport {

using namespace nego;

inline FormulaPtr F(const std::string& text) { return parse_formula(text); }
inline TermPtr T(const std::string& text) { return parse_term(text); }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    int int_in(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    bool chance(double p) { return std::uniform_real_distribution<>(0, 1)(eng_) < p; }

    Rational coeff(int mag = 5) {  // nonzero integer in [-mag, mag]
        int c = int_in(1, mag);
        return Rational(chance(0.5) ? c : -c);
    }

    Rational rational(int mag = 10) {  // small rational, halves and thirds included
        int den = int_in(1, 3);
        return Rational(int_in(-mag * den, mag * den), den);
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(int_in(0, static_cast<int>(v.size()) - 1))];
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

// linear term over a subset of vars with integer coefficients
inline TermPtr gen_term(Rng& rng, const std::vector<Var>& vars, int max_vars = 3) {
    TermPtr t;
    int n = rng.int_in(0, max_vars);
    for (int i = 0; i < n; ++i) {
        Rational c = rng.coeff();
        TermPtr piece = c == Rational(1) ? variable(rng.pick(vars)) : scale(c, variable(rng.pick(vars)));
        t = t ? sum(t, piece) : piece;
    }
    TermPtr k = constant(Rational(rng.int_in(-5, 5)));
    return t ? (rng.chance(0.5) ? sum(t, k) : t) : k;
}

inline Rel gen_rel(Rng& rng, bool allow_ne = true) {
    switch (rng.int_in(0, allow_ne ? 5 : 4)) {
        case 0: return Rel::le;
        case 1: return Rel::lt;
        case 2: return Rel::ge;
        case 3: return Rel::gt;
        case 4: return Rel::eq;
        default: return Rel::ne;
    }
}

inline FormulaPtr gen_atom(Rng& rng, const std::vector<Var>& vars, bool allow_ne = true) {
    return atom(gen_term(rng, vars), gen_rel(rng, allow_ne), gen_term(rng, vars));
}

// quantifier-free formula of bounded depth
inline FormulaPtr gen_formula(Rng& rng, const std::vector<Var>& vars, int depth,
                              bool allow_ne = true) {
    if (depth <= 0 || rng.chance(0.4)) return gen_atom(rng, vars, allow_ne);
    switch (rng.int_in(0, 2)) {
        case 0: return conj(gen_formula(rng, vars, depth - 1, allow_ne),
                            gen_formula(rng, vars, depth - 1, allow_ne));
        case 1: return disj(gen_formula(rng, vars, depth - 1, allow_ne),
                            gen_formula(rng, vars, depth - 1, allow_ne));
        default: return neg(gen_formula(rng, vars, depth - 1, allow_ne));
    }
}

inline Valuation gen_valuation(Rng& rng, const std::set<Var>& vars) {
    Valuation v;
    for (const auto& x : vars) v.emplace(x, rng.rational());
    return v;
}

// --- one-variable oracle ----------------------------------------------------
//
// Decides exists x. f at a valuation of the remaining variables by sampling:
// every atom is affine in x, so its truth only changes at its root. Checking
// all roots, the midpoints between adjacent roots, and points beyond the
// extremes decides the formula exactly. Shares nothing with the
// Fourier-Motzkin path.

struct AffineInX {
    Rational slope;
    Rational intercept;
};

inline AffineInX affine_in(const Term& t, const Var& x, const Valuation& v) {
    switch (t.kind) {
        case Term::Kind::variable: {
            if (t.var == x) return {Rational(1), Rational(0)};
            return {Rational(0), v.at(t.var)};
        }
        case Term::Kind::constant:
            return {Rational(0), t.value};
        case Term::Kind::sum: {
            AffineInX a = affine_in(*t.lhs, x, v);
            AffineInX b = affine_in(*t.rhs, x, v);
            return {a.slope + b.slope, a.intercept + b.intercept};
        }
        case Term::Kind::scale: {
            AffineInX a = affine_in(*t.lhs, x, v);
            return {t.value * a.slope, t.value * a.intercept};
        }
    }
    return {Rational(0), Rational(0)};
}

inline void collect_roots(const Formula& f, const Var& x, const Valuation& v,
                          std::vector<Rational>& roots) {
    switch (f.kind) {
        case Formula::Kind::atom: {
            AffineInX lhs = affine_in(*f.lhs, x, v);
            AffineInX rhs = affine_in(*f.rhs, x, v);
            Rational slope = lhs.slope - rhs.slope;
            if (!slope.is_zero()) roots.push_back((rhs.intercept - lhs.intercept) / slope);
            break;
        }
        case Formula::Kind::conj:
        case Formula::Kind::disj:
            collect_roots(*f.a, x, v, roots);
            collect_roots(*f.b, x, v, roots);
            break;
        case Formula::Kind::neg:
            collect_roots(*f.a, x, v, roots);
            break;
        case Formula::Kind::exists:
            throw std::logic_error("oracle: formula must be quantifier-free");
    }
}

inline bool oracle_exists(const FormulaPtr& f, const Var& x, const Valuation& others) {
    std::vector<Rational> roots;
    collect_roots(*f, x, others, roots);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

    std::vector<Rational> samples;
    if (roots.empty()) {
        samples.push_back(Rational(0));
    } else {
        samples.push_back(roots.front() - Rational(1));
        for (std::size_t i = 0; i < roots.size(); ++i) {
            samples.push_back(roots[i]);
            if (i + 1 < roots.size())
                samples.push_back((roots[i] + roots[i + 1]) / Rational(2));
        }
        samples.push_back(roots.back() + Rational(1));
    }
    for (const auto& s : samples) {
        Valuation v = others;
        v.insert_or_assign(x, s);
        if (evaluate(*f, v)) return true;
    }
    return false;
}

}  // namespace testsupport
