#ifndef PSTIRLING_TWOADIC_HPP
#define PSTIRLING_TWOADIC_HPP

// Exact and truncated 2-adic arithmetic: valuations, digit counts, odd
// parts, binomials, modular powers, and the TwoAdic value type the rest
// of the library builds on.

#include <gmpxx.h>

#include <limits>
#include <stdexcept>
#include <string>

namespace pstirling {

using BigInt = mpz_class;

constexpr long kNuInfinity = std::numeric_limits<long>::max();

// nu(n): exponent of the largest power of 2 dividing n. n must be nonzero.
inline long nu(const BigInt& n) {
    if (n == 0) throw std::invalid_argument("nu: zero input");
    // mpz_scan1 uses two's complement for negatives; low zero bits agree
    // with the valuation either way.
    return static_cast<long>(mpz_scan1(n.get_mpz_t(), 0));
}

inline long nu(long n) { return nu(BigInt(n)); }

// alpha(n): number of 1-bits of n >= 0.
inline long alpha(const BigInt& n) {
    if (n < 0) throw std::invalid_argument("alpha: negative input");
    return static_cast<long>(mpz_popcount(n.get_mpz_t()));
}

inline long alpha(unsigned long n) { return __builtin_popcountll(n); }

// nu(n!) = n - alpha(n).
inline long nu_factorial(const BigInt& n) {
    if (n < 0) throw std::invalid_argument("nu_factorial: negative input");
    return static_cast<long>(BigInt(n - alpha(n)).get_si());
}

inline long nu_factorial(unsigned long n) {
    return static_cast<long>(n) - alpha(n);
}

// nu C(m,k) = alpha(k) + alpha(m-k) - alpha(m), for 0 <= k <= m.
inline long nu_binomial(const BigInt& m, const BigInt& k) {
    if (k < 0 || k > m) throw std::invalid_argument("nu_binomial: need 0 <= k <= m");
    return alpha(k) + alpha(BigInt(m - k)) - alpha(m);
}

// Valuation of the polynomial binomial C(t,k) = t(t-1)...(t-k+1)/k! for any
// integer t; kNuInfinity when the product vanishes (0 <= t < k).
inline long nu_binomial_poly(const BigInt& t, unsigned long k) {
    if (t >= 0) {
        if (t < static_cast<long>(k)) return kNuInfinity;
        return nu_binomial(t, BigInt(k));
    }
    // C(t,k) = (-1)^k C(k-t-1, k)
    return nu_binomial(BigInt(k - t - 1), BigInt(k));
}

// U(n) = n / 2^nu(n).
inline BigInt odd_part(const BigInt& n) {
    if (n == 0) throw std::invalid_argument("odd_part: zero input");
    BigInt r;
    mpz_tdiv_q_2exp(r.get_mpz_t(), n.get_mpz_t(), static_cast<mp_bitcnt_t>(nu(n)));
    return r;
}

// x mod 2^bits, result in [0, 2^bits).
inline BigInt mod_pow2(const BigInt& x, long bits) {
    if (bits < 0) throw std::invalid_argument("mod_pow2: negative bit count");
    BigInt r;
    mpz_fdiv_r_2exp(r.get_mpz_t(), x.get_mpz_t(), static_cast<mp_bitcnt_t>(bits));
    return r;
}

// Valuation of a truncated value: either exactly known or only bounded
// below by the truncation precision (all observed bits zero).
class Valuation {
  public:
    static Valuation finite(long v) { return Valuation(v, true); }
    static Valuation at_least(long b) { return Valuation(b, false); }
    static Valuation infinity() { return Valuation(kNuInfinity, false); }

    bool is_finite() const { return finite_; }
    bool is_infinite() const { return !finite_ && v_ == kNuInfinity; }
    long value() const {
        if (!finite_) throw std::logic_error("Valuation: not finite");
        return v_;
    }
    // For AtLeast(b): the bound b. For Finite(v): v.
    long lower_bound() const { return v_; }

    bool known_ge(long t) const { return v_ >= t; }
    bool known_eq(long t) const { return finite_ && v_ == t; }

    friend bool operator==(const Valuation& a, const Valuation& b) {
        return a.finite_ == b.finite_ && a.v_ == b.v_;
    }
    friend bool operator!=(const Valuation& a, const Valuation& b) { return !(a == b); }

    std::string str() const {
        if (is_infinite()) return "inf";
        if (!finite_) return ">=" + std::to_string(v_);
        return std::to_string(v_);
    }

  private:
    Valuation(long v, bool f) : v_(v), finite_(f) {}
    long v_;
    bool finite_;
};

// A truncated 2-adic integer: residue mod 2^prec plus the precision.
struct TwoAdic {
    BigInt residue;  // 0 <= residue < 2^prec
    long prec;       // > 0

    TwoAdic() : residue(0), prec(1) {}
    TwoAdic(BigInt r, long p) : residue(mod_pow2(r, p)), prec(p) {
        if (p <= 0) throw std::invalid_argument("TwoAdic: prec must be positive");
    }

    TwoAdic truncated(long p) const {
        if (p > prec) throw std::invalid_argument("TwoAdic::truncated: cannot gain precision");
        return TwoAdic(mod_pow2(residue, p), p);
    }
};

inline TwoAdic operator+(const TwoAdic& a, const TwoAdic& b) {
    long p = std::min(a.prec, b.prec);
    return TwoAdic(a.residue + b.residue, p);
}

inline TwoAdic operator-(const TwoAdic& a, const TwoAdic& b) {
    long p = std::min(a.prec, b.prec);
    return TwoAdic(a.residue - b.residue, p);
}

inline TwoAdic operator*(const TwoAdic& a, const TwoAdic& b) {
    long p = std::min(a.prec, b.prec);
    return TwoAdic(a.residue * b.residue, p);
}

inline Valuation valuation_of(const TwoAdic& z) {
    if (z.residue == 0) return Valuation::at_least(z.prec);
    return Valuation::finite(nu(z.residue));
}

// Inverse of an odd unit mod 2^prec.
inline BigInt inv_mod_pow2(const BigInt& u, long prec) {
    if (mpz_even_p(u.get_mpz_t())) throw std::invalid_argument("inv_mod_pow2: even unit");
    BigInt mod = BigInt(1) << prec;
    BigInt r;
    if (!mpz_invert(r.get_mpz_t(), u.get_mpz_t(), mod.get_mpz_t()))
        throw std::logic_error("inv_mod_pow2: inversion failed");
    return r;
}

// base^exp mod 2^prec. Negative exponents require an odd base.
inline BigInt pow_mod(const BigInt& base, const BigInt& exp, long prec) {
    if (exp < 0 && mpz_even_p(base.get_mpz_t()))
        throw std::invalid_argument("pow_mod: negative exponent with even base");
    BigInt mod = BigInt(1) << prec;
    BigInt r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
    return r;
}

// Exact division of the truncation by 2^s (drops s bits of precision).
inline TwoAdic shift_down(const TwoAdic& z, long s) {
    if (s < 0 || s >= z.prec) throw std::invalid_argument("shift_down: bad shift");
    if (mod_pow2(z.residue, s) != 0)
        throw std::domain_error("shift_down: value not divisible by 2^s");
    BigInt r;
    mpz_tdiv_q_2exp(r.get_mpz_t(), z.residue.get_mpz_t(), static_cast<mp_bitcnt_t>(s));
    return TwoAdic(r, z.prec - s);
}

// Divide by an odd unit (full precision kept).
inline TwoAdic div_unit(const TwoAdic& z, const BigInt& u) {
    return TwoAdic(z.residue * inv_mod_pow2(u, z.prec), z.prec);
}

// C(m,k) mod 2^prec, computed as a product of k factors with the even
// parts tracked separately so the unit part never loses precision.
// k is bounded (the library never needs more than ~2^12 factors).
inline TwoAdic binomial_mod(const BigInt& m, unsigned long k, long prec) {
    if (m < 0) throw std::invalid_argument("binomial_mod: negative top");
    if (k > (1ul << 13)) throw std::invalid_argument("binomial_mod: k too large");
    if (m < static_cast<long>(k)) return TwoAdic(0, prec);
    BigInt mod = BigInt(1) << prec;
    BigInt num_u = 1, den_u = 1;
    long v = 0;
    for (unsigned long i = 0; i < k; ++i) {
        BigInt f = m - static_cast<long>(i);
        long vf = nu(f);
        v += vf;
        num_u = num_u * odd_part(f) % mod;
        BigInt g(i + 1);
        v -= nu(g);
        den_u = den_u * odd_part(g) % mod;
    }
    if (v != nu_binomial(m, BigInt(k)))
        throw std::logic_error("binomial_mod: valuation mismatch");
    if (v >= prec) return TwoAdic(0, prec);
    BigInt unit = num_u * inv_mod_pow2(den_u, prec) % mod;
    return TwoAdic(unit << v, prec);
}

// Low-order-bit-first rendering of the bottom `bits` bits.
inline std::string backwards_binary(const TwoAdic& z, long bits) {
    if (bits > z.prec) throw std::invalid_argument("backwards_binary: bits > prec");
    if (bits < 0) throw std::invalid_argument("backwards_binary: negative bits");
    std::string s;
    s.reserve(static_cast<std::size_t>(bits));
    for (long i = 0; i < bits; ++i)
        s.push_back(mpz_tstbit(z.residue.get_mpz_t(), static_cast<mp_bitcnt_t>(i)) ? '1' : '0');
    return s;
}

inline TwoAdic parse_backwards_binary(const std::string& s) {
    BigInt r = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1')
            mpz_setbit(r.get_mpz_t(), static_cast<mp_bitcnt_t>(i));
        else if (s[i] != '0')
            throw std::invalid_argument("parse_backwards_binary: bad digit");
    }
    return TwoAdic(r, static_cast<long>(s.size() ? s.size() : 1));
}

}  // namespace pstirling

#endif
