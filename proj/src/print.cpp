#include "nego/print.hpp"

namespace nego {

namespace {

std::string term_text(const Term& t);

// rendering as a '*' operand or after a binary '-': sums and scales need
// parens so the left-associative grammar reparses to the identical tree
std::string operand_text(const Term& t) {
    std::string s = term_text(t);
    if (t.kind == Term::Kind::sum || t.kind == Term::Kind::scale) s = "(" + s + ")";
    return s;
}

std::string term_text(const Term& t) {
    switch (t.kind) {
        case Term::Kind::variable: return t.var.text();
        case Term::Kind::constant: return t.value.text();
        case Term::Kind::scale: return t.value.text() + "*" + operand_text(*t.lhs);
        case Term::Kind::sum: {
            std::string left = term_text(*t.lhs);
            const Term& r = *t.rhs;
            if (r.kind == Term::Kind::constant && r.value.is_negative())
                return left + " - " + (-r.value).text();
            if (r.kind == Term::Kind::scale && r.value.is_negative()) {
                Rational mag = -r.value;
                if (mag == Rational(1)) return left + " - " + operand_text(*r.lhs);
                return left + " - " + mag.text() + "*" + operand_text(*r.lhs);
            }
            if (r.kind == Term::Kind::sum) return left + " + (" + term_text(r) + ")";
            return left + " + " + term_text(r);
        }
    }
    return {};
}

enum class Ctx { top, or_left, or_right, and_left, and_right };

std::string formula_text(const Formula& f, Ctx ctx) {
    switch (f.kind) {
        case Formula::Kind::atom:
            if (is_true_atom(f)) return "true";
            if (is_false_atom(f)) return "false";
            return term_text(*f.lhs) + " " + rel_text(f.rel) + " " + term_text(*f.rhs);
        case Formula::Kind::neg:
            return "!(" + formula_text(*f.a, Ctx::top) + ")";
        case Formula::Kind::exists: {
            std::string s = "exists " + f.var.text() + ". (" + formula_text(*f.a, Ctx::top) + ")";
            if (ctx != Ctx::top) s = "(" + s + ")";
            return s;
        }
        case Formula::Kind::conj: {
            std::string s =
                formula_text(*f.a, Ctx::and_left) + " && " + formula_text(*f.b, Ctx::and_right);
            if (ctx == Ctx::and_right) s = "(" + s + ")";
            return s;
        }
        case Formula::Kind::disj: {
            std::string s =
                formula_text(*f.a, Ctx::or_left) + " || " + formula_text(*f.b, Ctx::or_right);
            if (ctx == Ctx::or_right || ctx == Ctx::and_left || ctx == Ctx::and_right)
                s = "(" + s + ")";
            return s;
        }
    }
    return {};
}

}  // namespace

std::string to_text(const Term& t) { return term_text(t); }

std::string to_text(const Formula& f) { return formula_text(f, Ctx::top); }

}  // namespace nego
