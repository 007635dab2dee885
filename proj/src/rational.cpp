#include "nego/rational.hpp"

#include <stdexcept>

#include "nego/errors.hpp"

namespace nego {

Rational::Rational(long n, long d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    v_ = mpq_class(n, d);
    v_.canonicalize();
}

Rational Rational::from_text(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("Rational: empty literal");
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        mpq_class v;
        if (v.set_str(text, 10) != 0)
            throw std::invalid_argument("Rational: bad literal '" + text + "'");
        if (v.get_den() == 0) throw std::invalid_argument("Rational: zero denominator");
        v.canonicalize();
        Rational r;
        r.v_ = v;
        return r;
    }
    // decimal literal: digits '.' digits, exact conversion
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::size_t frac_len = text.size() - dot - 1;
    if (digits.empty() || frac_len == 0)
        throw std::invalid_argument("Rational: bad decimal literal '" + text + "'");
    mpz_class num;
    if (num.set_str(digits, 10) != 0)
        throw std::invalid_argument("Rational: bad decimal literal '" + text + "'");
    mpz_class den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    mpq_class v(num, den);
    v.canonicalize();
    Rational r;
    r.v_ = v;
    return r;
}

Rational Rational::reciprocal() const {
    if (is_zero()) throw std::invalid_argument("Rational: reciprocal of zero");
    mpq_class inv;
    mpq_inv(inv.get_mpq_t(), v_.get_mpq_t());
    return Rational(inv);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.is_zero()) throw std::invalid_argument("Rational: division by zero");
    return Rational(mpq_class(a.v_ / b.v_));
}

std::string Rational::text() const {
    std::string s = v_.get_num().get_str();
    if (v_.get_den() != 1) s += "/" + v_.get_den().get_str();
    return s;
}

}  // namespace nego
