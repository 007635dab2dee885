#pragma once

#include <gmpxx.h>

#include <compare>
#include <string>

namespace nego {

// Exact arbitrary-precision rational. Always canonical: the denominator is
// positive and gcd(|numerator|, denominator) = 1. All arithmetic is exact;
// there is no floating point anywhere in the engine.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(long n, long d);

    // "123" (integer), "11/10" (fraction), "1.1" (decimal, converted
    // exactly: 1.1 -> 11/10).
    static Rational from_text(const std::string& text);

    mpz_class numerator() const { return v_.get_num(); }
    mpz_class denominator() const { return v_.get_den(); }

    bool is_zero() const { return sgn(v_) == 0; }
    bool is_negative() const { return sgn(v_) < 0; }
    bool is_integer() const { return v_.get_den() == 1; }
    int sign() const { return sgn(v_); }

    Rational operator-() const { return Rational(-v_); }
    Rational abs() const { return is_negative() ? -*this : *this; }
    Rational reciprocal() const;

    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(a.v_ + b.v_); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(a.v_ - b.v_); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(a.v_ * b.v_); }
    friend Rational operator/(const Rational& a, const Rational& b);

    Rational& operator+=(const Rational& b) { v_ += b.v_; return *this; }
    Rational& operator-=(const Rational& b) { v_ -= b.v_; return *this; }
    Rational& operator*=(const Rational& b) { v_ *= b.v_; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.v_, b.v_) == 0; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        int c = cmp(a.v_, b.v_);
        return c < 0 ? std::strong_ordering::less
             : c > 0 ? std::strong_ordering::greater
                     : std::strong_ordering::equal;
    }

    // "7", "-3", "11/10"
    std::string text() const;

private:
    explicit Rational(mpq_class v) : v_(std::move(v)) { /* gmp ops keep canonical form */ }
    mpq_class v_;
};

}  // namespace nego
