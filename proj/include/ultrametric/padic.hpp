#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <climits>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ultrametric {

// Expression templates off: `auto d = a - b` must own its value.
using Integer = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                              boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

inline constexpr int kDefaultPrecision = 24;
inline constexpr int kInfiniteValuation = INT_MAX;

// p-adic valuation; kInfiniteValuation for zero.
int valuation(const Integer& n, int p);
int valuation(const Rational& x, int p);

Integer integer_power(int p, int exponent);
// p^exponent for any sign of exponent.
Rational rational_power(int p, int exponent);
double real_power(int p, double exponent);

bool is_prime(int p);
// Smallest positive quadratic non-residue mod an odd prime.
int smallest_nonresidue(int p);

// Residue of a p-integral rational modulo p^m, in [0, p^m).
Integer residue(const Rational& x, int p, int m);

// |x|_p carried as an exponent: |x|_p = p^exponent, or zero.
struct NormExponent {
    bool zero = true;
    int exponent = 0;

    static NormExponent of_zero() { return {}; }
    static NormExponent power(int e) { return {false, e}; }
    double value(int p) const;
    Rational exact(int p) const;
    friend bool operator==(const NormExponent&, const NormExponent&) = default;
};

// max of two norms, honouring zero
NormExponent max_norm(const NormExponent& a, const NormExponent& b);
bool norm_less_equal(const NormExponent& a, const NormExponent& b);

// Element of Q_p as p^v times a unit with N base-p digits (least significant first).
class PadicScalar {
public:
    PadicScalar(int p, int precision = kDefaultPrecision);

    static PadicScalar from_rational(const Rational& x, int p,
                                     int precision = kDefaultPrecision);
    // Unit part given as a residue mod p^precision (must be prime to p).
    static PadicScalar from_unit_residue(const Integer& unit, int valuation, int p,
                                         int precision);

    int prime() const { return prime_; }
    int precision() const { return precision_; }
    bool is_zero() const { return zero_; }
    int valuation() const { return zero_ ? kInfiniteValuation : valuation_; }
    const std::vector<int>& unit_digits() const { return digits_; }

    // Unit part as an integer in [0, p^N).
    Integer unit_residue() const;
    // The finite expansion p^v * sum d_i p^i as an exact rational.
    Rational to_rational() const;

    friend PadicScalar operator*(const PadicScalar& a, const PadicScalar& b);
    friend PadicScalar operator+(const PadicScalar& a, const PadicScalar& b);
    friend bool operator==(const PadicScalar& a, const PadicScalar& b);

private:
    int prime_;
    int precision_;
    bool zero_ = true;
    int valuation_ = 0;
    std::vector<int> digits_;
};

// a/b in Q_p to N significant digits.
PadicScalar padic_from_rational(const Integer& a, const Integer& b, int p,
                                int precision = kDefaultPrecision);

NormExponent norm(const PadicScalar& x);
NormExponent norm(const Rational& x, int p);

// {x}_p in [0,1): the part of the expansion with negative powers of p.
Rational fractional_part(const PadicScalar& x);
Rational fractional_part(const Rational& x, int p);

struct SquareClass {
    PadicScalar epsilon;  // one of 1, u0, p, p*u0
    PadicScalar root;     // mu with lambda = epsilon * mu^2
    int class_index;      // 0..3 in the order 1, u0, p, p*u0
};

SquareClass square_class(const PadicScalar& lambda);
SquareClass square_class(const Rational& lambda, int p, int precision = kDefaultPrecision);

// Representatives of G_{L_in} in G_{L_out}: coordinate k is p^{w_k L_out} n_k with
// 0 <= n_k < p^{w_k (L_in - L_out)}. The first coordinate varies fastest.
std::vector<std::vector<Rational>> enumerate_cosets(int p, const std::vector<int>& weights,
                                                    int outer, int inner);

}  // namespace ultrametric
