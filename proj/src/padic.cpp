#include "ultrametric/padic.hpp"

#include <cmath>

namespace ultrametric {

namespace {

Integer mod_floor(const Integer& a, const Integer& m) {
    Integer r = a % m;
    if (r < 0) r += m;
    return r;
}

Integer mod_inverse(const Integer& a, const Integer& m) {
    Integer old_r = mod_floor(a, m), r = m, old_s = 1, s = 0;
    while (r != 0) {
        Integer q = old_r / r;
        Integer tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s;
        old_s = s;
        s = tmp;
    }
    if (old_r != 1) throw DomainError("mod_inverse: not invertible");
    return mod_floor(old_s, m);
}

Integer strip_p(Integer n, int p) {
    while (n != 0 && n % p == 0) n /= p;
    return n;
}

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

int valuation(const Integer& n, int p) {
    if (p < 2) throw DomainError("valuation: p must be at least 2");
    if (n == 0) return kInfiniteValuation;
    int v = 0;
    Integer m = n;
    while (m % p == 0) {
        m /= p;
        ++v;
    }
    return v;
}

int valuation(const Rational& x, int p) {
    if (x == 0) return kInfiniteValuation;
    return valuation(Integer(numerator(x)), p) - valuation(Integer(denominator(x)), p);
}

Integer integer_power(int p, int exponent) {
    if (exponent < 0) throw DomainError("integer_power: negative exponent");
    return boost::multiprecision::pow(Integer(p), static_cast<unsigned>(exponent));
}

Rational rational_power(int p, int exponent) {
    if (exponent >= 0) return Rational(integer_power(p, exponent));
    return Rational(Integer(1), integer_power(p, -exponent));
}

double real_power(int p, double exponent) { return std::pow(static_cast<double>(p), exponent); }

bool is_prime(int p) {
    if (p < 2) return false;
    for (int k = 2; static_cast<long long>(k) * k <= p; ++k)
        if (p % k == 0) return false;
    return true;
}

int smallest_nonresidue(int p) {
    if (p == 2 || !is_prime(p)) throw DomainError("smallest_nonresidue: odd prime required");
    for (int u = 2; u < p; ++u) {
        Integer e = boost::multiprecision::powm(Integer(u), Integer((p - 1) / 2), Integer(p));
        if (e == p - 1) return u;
    }
    throw DomainError("smallest_nonresidue: none found");
}

Integer residue(const Rational& x, int p, int m) {
    Integer modulus = integer_power(p, m);
    Integer num = numerator(x), den = denominator(x);
    if (den % p == 0) throw DomainError("residue: rational is not p-integral");
    return mod_floor(num * mod_inverse(den, modulus), modulus);
}

double NormExponent::value(int p) const { return zero ? 0.0 : real_power(p, exponent); }

Rational NormExponent::exact(int p) const { return zero ? Rational(0) : rational_power(p, exponent); }

NormExponent max_norm(const NormExponent& a, const NormExponent& b) {
    if (a.zero) return b;
    if (b.zero) return a;
    return a.exponent >= b.exponent ? a : b;
}

bool norm_less_equal(const NormExponent& a, const NormExponent& b) {
    if (a.zero) return true;
    if (b.zero) return false;
    return a.exponent <= b.exponent;
}

PadicScalar::PadicScalar(int p, int precision) : prime_(p), precision_(precision) {
    if (p < 2) throw DomainError("PadicScalar: prime must be >= 2");
    if (precision < 1) throw DomainError("PadicScalar: precision must be positive");
    digits_.assign(static_cast<std::size_t>(precision), 0);
}

PadicScalar PadicScalar::from_unit_residue(const Integer& unit, int valuation, int p,
                                           int precision) {
    PadicScalar out(p, precision);
    Integer u = mod_floor(unit, integer_power(p, precision));
    if (u % p == 0) throw DomainError("PadicScalar: unit residue divisible by p");
    out.zero_ = false;
    out.valuation_ = valuation;
    for (int i = 0; i < precision; ++i) {
        out.digits_[static_cast<std::size_t>(i)] = static_cast<int>(u % p);
        u /= p;
    }
    return out;
}

PadicScalar padic_from_rational(const Integer& a, const Integer& b, int p, int precision) {
    if (b == 0) throw DomainError("padic_from_rational: zero denominator");
    if (a == 0) return PadicScalar(p, precision);
    int v = valuation(a, p) - valuation(b, p);
    Integer modulus = integer_power(p, precision);
    Integer unit = mod_floor(strip_p(a, p) * mod_inverse(strip_p(b, p), modulus), modulus);
    return PadicScalar::from_unit_residue(unit, v, p, precision);
}

PadicScalar PadicScalar::from_rational(const Rational& x, int p, int precision) {
    return padic_from_rational(Integer(numerator(x)), Integer(denominator(x)), p, precision);
}

Integer PadicScalar::unit_residue() const {
    Integer u = 0;
    for (int i = precision_ - 1; i >= 0; --i) u = u * prime_ + digits_[static_cast<std::size_t>(i)];
    return u;
}

Rational PadicScalar::to_rational() const {
    if (zero_) return Rational(0);
    return Rational(unit_residue()) * rational_power(prime_, valuation_);
}

PadicScalar operator*(const PadicScalar& a, const PadicScalar& b) {
    if (a.prime_ != b.prime_) throw DomainError("PadicScalar: prime mismatch");
    int n = std::min(a.precision_, b.precision_);
    if (a.zero_ || b.zero_) return PadicScalar(a.prime_, n);
    return PadicScalar::from_unit_residue(a.unit_residue() * b.unit_residue(),
                                          a.valuation_ + b.valuation_, a.prime_, n);
}

PadicScalar operator+(const PadicScalar& a, const PadicScalar& b) {
    if (a.prime_ != b.prime_) throw DomainError("PadicScalar: prime mismatch");
    int n = std::min(a.precision_, b.precision_);
    return PadicScalar::from_rational(a.to_rational() + b.to_rational(), a.prime_, n);
}

bool operator==(const PadicScalar& a, const PadicScalar& b) {
    if (a.prime_ != b.prime_ || a.zero_ != b.zero_) return false;
    if (a.zero_) return true;
    return a.valuation_ == b.valuation_ && a.digits_ == b.digits_;
}

NormExponent norm(const PadicScalar& x) {
    return x.is_zero() ? NormExponent::of_zero() : NormExponent::power(-x.valuation());
}

NormExponent norm(const Rational& x, int p) {
    return x == 0 ? NormExponent::of_zero() : NormExponent::power(-valuation(x, p));
}

Rational fractional_part(const PadicScalar& x) {
    if (x.is_zero() || x.valuation() >= 0) return Rational(0);
    int p = x.prime();
    Rational sum = 0;
    const auto& digits = x.unit_digits();
    for (int i = 0; i < x.precision() && x.valuation() + i < 0; ++i)
        sum += Rational(digits[static_cast<std::size_t>(i)]) * rational_power(p, x.valuation() + i);
    return sum;
}

Rational fractional_part(const Rational& x, int p) {
    int v = valuation(x, p);
    if (v >= 0) return Rational(0);
    // x = a / (p^k b) with p not dividing b; {x} = (a b^{-1} mod p^k) / p^k.
    int k = -v;
    Integer den = denominator(x);
    Integer pk = integer_power(p, k);
    Integer b = den / pk;
    Integer a = numerator(x);
    Integer r = mod_floor(a * mod_inverse(b, pk), pk);
    return Rational(r, pk);
}

SquareClass square_class(const PadicScalar& lambda) {
    int p = lambda.prime();
    if (p == 2) throw DomainError("square_class: p = 2 unsupported");
    if (lambda.is_zero()) throw DomainError("square_class: lambda = 0");
    int n = lambda.precision();
    Integer modulus = integer_power(p, n);
    Integer unit = lambda.unit_residue();
    int u0 = smallest_nonresidue(p);

    bool residue_class =
        boost::multiprecision::powm(unit % p, Integer((p - 1) / 2), Integer(p)) == 1;
    Integer eps_unit = residue_class ? Integer(1) : Integer(u0);
    Integer target = mod_floor(unit * mod_inverse(eps_unit, modulus), modulus);

    Integer root = 0;
    for (int r = 1; r < p; ++r) {
        if ((Integer(r) * r - target) % p == 0) {
            root = r;
            break;
        }
    }
    // Newton/Hensel lift; doubling precision each step.
    for (int reached = 1; reached < n; reached *= 2) {
        Integer step = mod_floor((root * root - target) * mod_inverse(2 * root, modulus), modulus);
        root = mod_floor(root - step, modulus);
    }

    int v = lambda.valuation();
    int half = floor_div(v, 2);
    int odd = v - 2 * half;
    return SquareClass{PadicScalar::from_unit_residue(eps_unit, odd, p, n),
                       PadicScalar::from_unit_residue(root, half, p, n),
                       (odd ? 2 : 0) + (residue_class ? 0 : 1)};
}

SquareClass square_class(const Rational& lambda, int p, int precision) {
    return square_class(PadicScalar::from_rational(lambda, p, precision));
}

std::vector<std::vector<Rational>> enumerate_cosets(int p, const std::vector<int>& weights,
                                                    int outer, int inner) {
    if (outer > inner) throw DomainError("enumerate_cosets: L_out > L_in");
    int depth = inner - outer;
    std::vector<long long> radix;
    long long total = 1;
    for (int w : weights) {
        long long r = 1;
        for (int i = 0; i < w * depth; ++i) r *= p;
        radix.push_back(r);
        total *= r;
        if (total > (1LL << 28)) throw DomainError("enumerate_cosets: window too large");
    }
    std::vector<Rational> scale;
    for (int w : weights) scale.push_back(rational_power(p, w * outer));

    std::vector<std::vector<Rational>> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<long long> digit(weights.size(), 0);
    for (long long c = 0; c < total; ++c) {
        std::vector<Rational> coords(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k) coords[k] = scale[k] * digit[k];
        out.push_back(std::move(coords));
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (++digit[k] < radix[k]) break;
            digit[k] = 0;
        }
    }
    return out;
}

}  // namespace ultrametric
