#ifndef PSTIRLING_STIRLING_HPP
#define PSTIRLING_STIRLING_HPP

// Evaluators for the partial Stirling functions and their relatives:
// P_n, T_n, S(x,n), the even-offset kernel Phi_n, the all-j sums, the odd
// parts U(2^e!) with their 2-adic limit, and the large-index limit of
// P_{2^e+D}.

#include <pstirling/twoadic.hpp>

#include <cstdint>
#include <functional>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace pstirling {

// floor(log2 n) for n >= 1.
inline long lg(const BigInt& n) {
    if (n < 1) throw std::invalid_argument("lg: need n >= 1");
    return static_cast<long>(mpz_sizeinbase(n.get_mpz_t(), 2)) - 1;
}
inline long lg(unsigned long n) { return lg(BigInt(n)); }

namespace detail {

inline long nu_u64(std::uint64_t v) { return __builtin_ctzll(v); }
inline std::uint64_t odd_u64(std::uint64_t v) { return v >> nu_u64(v); }

// Sum over odd j <= n of C(n,j) * pow(j) mod 2^Q, for a batch of power
// providers evaluated per j. C(n,j) is maintained incrementally as
// 2^{nuC} * num_u / U(j!) with the denominator deferred: the accumulator
// is kept scaled by the running U(j!) so only one inversion happens at
// the end. pows(j, out) must fill out[i] with base(j)^{x_i} mod 2^Q.
template <class PowProvider>
std::vector<BigInt> odd_binomial_sum(unsigned long n, long Q, std::size_t nx,
                                     PowProvider&& pows) {
    if (n < 1) throw std::invalid_argument("odd_binomial_sum: need n >= 1");
    BigInt mod = BigInt(1) << Q;
    std::vector<BigInt> acc(nx, BigInt(0));
    std::vector<BigInt> jx(nx);
    BigInt num_u = odd_part(BigInt(n));
    long nuC = nu(BigInt(n));
    BigInt den_u = 1;
    BigInt tmp;
    for (unsigned long j = 1; j <= n; j += 2) {
        if (j > 1) {
            // C(n,j) = C(n,j-2) * (n-j+2)(n-j+1) / ((j-1) j)
            std::uint64_t a = static_cast<std::uint64_t>(n - j + 2) * (n - j + 1);
            std::uint64_t b = static_cast<std::uint64_t>(j - 1) * j;
            nuC += nu_u64(a) - nu_u64(b);
            num_u *= odd_u64(a);
            mpz_fdiv_r_2exp(num_u.get_mpz_t(), num_u.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
            std::uint64_t bu = odd_u64(b);
            den_u *= bu;
            mpz_fdiv_r_2exp(den_u.get_mpz_t(), den_u.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
            for (auto& a_i : acc) {
                a_i *= bu;
                mpz_fdiv_r_2exp(a_i.get_mpz_t(), a_i.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
            }
        }
        if (nuC >= Q) continue;  // term vanishes mod 2^Q
        pows(j, jx);
        for (std::size_t i = 0; i < nx; ++i) {
            tmp = num_u * jx[i];
            tmp <<= nuC;
            acc[i] += tmp;
            mpz_fdiv_r_2exp(acc[i].get_mpz_t(), acc[i].get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
        }
    }
    BigInt inv = inv_mod_pow2(den_u, Q);
    for (auto& a_i : acc) {
        a_i *= inv;
        mpz_fdiv_r_2exp(a_i.get_mpz_t(), a_i.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
    }
    return acc;
}

// Finishes P = T / n! given the odd-j sums mod 2^{prec + nu(n!) + 2}.
inline TwoAdic normalize_P(unsigned long n, const BigInt& t_sum, long prec, long vnf,
                           const BigInt& inv_un) {
    long Q = prec + vnf + 2;
    BigInt num = t_sum * inv_un;
    mpz_fdiv_r_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
    if (mod_pow2(num, vnf) != 0)
        throw std::logic_error("eval_P: odd-j sum not divisible by 2^nu(n!)");
    BigInt r;
    mpz_tdiv_q_2exp(r.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(vnf));
    return TwoAdic(mod_pow2(r, prec), prec);
}

// Odd part of n! mod 2^Q.
inline BigInt u_factorial_mod(unsigned long n, long Q) {
    BigInt u = 1;
    for (unsigned long i = 3; i <= n; ++i) {
        u *= odd_u64(i);
        mpz_fdiv_r_2exp(u.get_mpz_t(), u.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
    }
    return u;
}

}  // namespace detail

// T_n(x) = sum over odd j of C(n,j) j^x, mod 2^Q. x may be negative.
inline BigInt eval_T_mod(unsigned long n, const BigInt& x, long Q) {
    auto sums = detail::odd_binomial_sum(n, Q, 1, [&](unsigned long j, std::vector<BigInt>& out) {
        out[0] = pow_mod(BigInt(j), x, Q);
    });
    return sums[0];
}

// Exact T_n(x) for nonnegative x (sizes are the caller's business).
inline BigInt eval_T(unsigned long n, unsigned long x) {
    BigInt total = 0, c;
    for (unsigned long j = 1; j <= n; j += 2) {
        mpz_bin_uiui(c.get_mpz_t(), n, j);
        BigInt p;
        mpz_ui_pow_ui(p.get_mpz_t(), j, x);
        total += c * p;
    }
    return total;
}

// P_n(x) = T_n(x)/n! as a 2-adic integer, mod 2^prec. The odd-j sum is
// computed with nu(n!)+2 guard bits and the divisibility guaranteed by
// the nonnegativity of nu(P_n) is asserted, not assumed.
inline TwoAdic eval_P(unsigned long n, const BigInt& x, long prec) {
    if (n < 1) throw std::invalid_argument("eval_P: need n >= 1");
    if (prec < 1) throw std::invalid_argument("eval_P: need prec >= 1");
    long vnf = nu_factorial(n);
    long Q = prec + vnf + 2;
    BigInt t = eval_T_mod(n, x, Q);
    BigInt inv_un = inv_mod_pow2(detail::u_factorial_mod(n, Q), Q);
    return detail::normalize_P(n, t, prec, vnf, inv_un);
}

// P_n at an arithmetic progression x0, x0+step, ..., x0+(count-1)step.
// One modular exponentiation pair per j instead of one per point.
inline std::vector<TwoAdic> eval_P_progression(unsigned long n, const BigInt& x0,
                                               const BigInt& step, std::size_t count,
                                               long prec) {
    if (count == 0) return {};
    long vnf = nu_factorial(n);
    long Q = prec + vnf + 2;
    auto sums = detail::odd_binomial_sum(n, Q, count, [&](unsigned long j, std::vector<BigInt>& out) {
        BigInt cur = pow_mod(BigInt(j), x0, Q);
        BigInt mul = pow_mod(BigInt(j), step, Q);
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = cur;
            if (i + 1 < count) {
                cur *= mul;
                mpz_fdiv_r_2exp(cur.get_mpz_t(), cur.get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
            }
        }
    });
    BigInt inv_un = inv_mod_pow2(detail::u_factorial_mod(n, Q), Q);
    std::vector<TwoAdic> res;
    res.reserve(count);
    for (auto& s : sums) res.push_back(detail::normalize_P(n, s, prec, vnf, inv_un));
    return res;
}

// P_n at several points that share their high bits (the shared part of
// the exponent is raised once per j). Falls back to independent powm
// when the points share nothing useful.
inline std::vector<TwoAdic> eval_P_batch(unsigned long n, const std::vector<BigInt>& xs,
                                         long prec) {
    if (xs.empty()) return {};
    long vnf = nu_factorial(n);
    long Q = prec + vnf + 2;
    // find the smallest L so all xs agree above bit L
    long L = 0;
    bool shared = true;
    for (const auto& x : xs)
        if (x < 0) shared = false;
    if (shared && xs.size() > 1) {
        for (std::size_t i = 1; i < xs.size(); ++i) {
            BigInt d = xs[i] ^ xs[0];
            if (d != 0) L = std::max(L, lg(d) + 1);
        }
        if (L > 8) shared = false;  // the small-power table would outgrow its benefit
    } else {
        shared = false;
    }
    std::vector<BigInt> sums;
    if (!shared || xs.size() == 1) {
        sums = detail::odd_binomial_sum(n, Q, xs.size(), [&](unsigned long j, std::vector<BigInt>& out) {
            for (std::size_t i = 0; i < xs.size(); ++i) out[i] = pow_mod(BigInt(j), xs[i], Q);
        });
    } else {
        BigInt hi = xs[0] >> L;
        unsigned long max_r = 0;
        std::vector<unsigned long> rs(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            rs[i] = mod_pow2(xs[i], L).get_ui();
            max_r = std::max(max_r, rs[i]);
        }
        sums = detail::odd_binomial_sum(n, Q, xs.size(), [&](unsigned long j, std::vector<BigInt>& out) {
            BigInt jL = pow_mod(BigInt(j), BigInt(1) << L, Q);
            BigInt jH = pow_mod(jL, hi, Q);
            std::vector<BigInt> small(max_r + 1);
            small[0] = 1;
            for (unsigned long r = 1; r <= max_r; ++r) {
                small[r] = small[r - 1] * j;
                mpz_fdiv_r_2exp(small[r].get_mpz_t(), small[r].get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
            }
            for (std::size_t i = 0; i < xs.size(); ++i) {
                out[i] = jH * small[rs[i]];
                mpz_fdiv_r_2exp(out[i].get_mpz_t(), out[i].get_mpz_t(), static_cast<mp_bitcnt_t>(Q));
            }
        });
    }
    BigInt inv_un = inv_mod_pow2(detail::u_factorial_mod(n, Q), Q);
    std::vector<TwoAdic> res;
    res.reserve(xs.size());
    for (auto& s : sums) res.push_back(detail::normalize_P(n, s, prec, vnf, inv_un));
    return res;
}

// P_n at a truncated argument. The result carries exactly
// x.prec + 1 - lg(n) known bits (the periodicity modulus).
inline TwoAdic eval_P_truncated(unsigned long n, const TwoAdic& x) {
    long out_prec = x.prec + 1 - lg(n);
    if (out_prec < 1)
        throw std::invalid_argument("eval_P_truncated: argument precision below lg(n)");
    return eval_P(n, x.residue, out_prec);
}

// Stirling numbers of the second kind, triangular recurrence, cached.
inline BigInt stirling2(unsigned long x, unsigned long n) {
    if (n > x) return 0;
    if (n == 0) return x == 0 ? 1 : 0;
    static std::vector<std::vector<BigInt>> rows{{BigInt(1)}};  // rows[x][n], n <= x
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    while (rows.size() <= x) {
        std::size_t xx = rows.size();
        std::vector<BigInt> row(xx + 1);
        row[0] = 0;
        for (std::size_t k = 1; k <= xx; ++k) {
            BigInt up = (k < rows[xx - 1].size()) ? rows[xx - 1][k] : BigInt(0);
            row[k] = BigInt(k) * up + rows[xx - 1][k - 1];
        }
        rows.push_back(std::move(row));
    }
    return rows[x][n];
}

// Independent route: S(x,n) = (1/n!) sum_j (-1)^{n-j} C(n,j) j^x.
inline BigInt stirling2_altsum(unsigned long x, unsigned long n) {
    BigInt total = 0, c, p;
    for (unsigned long j = 0; j <= n; ++j) {
        mpz_bin_uiui(c.get_mpz_t(), n, j);
        if (j == 0)
            p = (x == 0) ? 1 : 0;
        else
            mpz_ui_pow_ui(p.get_mpz_t(), j, x);
        if ((n - j) % 2)
            total -= c * p;
        else
            total += c * p;
    }
    BigInt f;
    mpz_fac_ui(f.get_mpz_t(), n);
    if (total % f != 0) throw std::logic_error("stirling2_altsum: sum not divisible by n!");
    return total / f;
}

// ---- Phi_n(s) = (1/n!) sum_i C(n,2i+1) (2i)^s, with 0^0 = 1 ----

struct PhiExact {
    unsigned long n;
    unsigned long s;
    BigInt numerator;  // sum_i C(n,2i+1)(2i)^s; Phi = numerator / n!
    Valuation val;
};

namespace detail {

struct PhiCacheEntry {
    long nu_or_inf;        // kNuInfinity when the numerator vanishes
    std::uint64_t unit64;  // odd part mod 2^64 (0 when vanishing)
};

inline std::unordered_map<std::uint64_t, PhiCacheEntry>& phi_cache() {
    static std::unordered_map<std::uint64_t, PhiCacheEntry> m;
    return m;
}
inline std::mutex& phi_mutex() {
    static std::mutex m;
    return m;
}

inline std::uint64_t phi_key(unsigned long n, unsigned long s) {
    return (static_cast<std::uint64_t>(n) << 32) | s;
}

// Exact numerator; the binomial walks odd j = 2i+1 and the power base is 2i.
inline BigInt phi_numerator(unsigned long n, unsigned long s) {
    BigInt total = 0, c, p;
    for (unsigned long j = 1; j <= n; j += 2) {
        mpz_bin_uiui(c.get_mpz_t(), n, j);
        unsigned long base = j - 1;
        if (base == 0)
            p = (s == 0) ? 1 : 0;
        else
            mpz_ui_pow_ui(p.get_mpz_t(), base, s);
        total += c * p;
    }
    return total;
}

inline PhiCacheEntry phi_compute(unsigned long n, unsigned long s) {
    // modular first: enough bits to decide nu unless the value is
    // extraordinarily divisible, then exact fallback
    long vnf = nu_factorial(n);
    long Q = vnf + 66;
    auto sums = odd_binomial_sum(n, Q, 1, [&](unsigned long j, std::vector<BigInt>& out) {
        unsigned long base = j - 1;
        if (base == 0)
            out[0] = (s == 0) ? 1 : 0;
        else
            out[0] = pow_mod(BigInt(base), BigInt(s), Q);
    });
    BigInt num = sums[0];
    if (num != 0) {
        long v = nu(num);
        if (v < Q - 2) {
            BigInt u = odd_part(num);
            return PhiCacheEntry{v - vnf, mod_pow2(u, 64).get_ui()};
        }
    }
    BigInt exact = phi_numerator(n, s);
    if (exact == 0) return PhiCacheEntry{kNuInfinity, 0};
    return PhiCacheEntry{nu(exact) - vnf, mod_pow2(odd_part(exact), 64).get_ui()};
}

inline PhiCacheEntry phi_lookup(unsigned long n, unsigned long s) {
    std::uint64_t key = phi_key(n, s);
    {
        std::lock_guard<std::mutex> lock(phi_mutex());
        auto it = phi_cache().find(key);
        if (it != phi_cache().end()) return it->second;
    }
    PhiCacheEntry e = phi_compute(n, s);
    std::lock_guard<std::mutex> lock(phi_mutex());
    phi_cache().emplace(key, e);  // concurrent recomputations agree
    return e;
}

}  // namespace detail

// Valuation of Phi_n(s); infinity when Phi vanishes exactly.
inline Valuation phi_nu(unsigned long n, unsigned long s) {
    auto e = detail::phi_lookup(n, s);
    if (e.nu_or_inf == kNuInfinity) return Valuation::infinity();
    return Valuation::finite(e.nu_or_inf);
}

// Odd part of Phi_n(s) mod 2^64 (0 when Phi vanishes).
inline std::uint64_t phi_unit64(unsigned long n, unsigned long s) {
    return detail::phi_lookup(n, s).unit64;
}

// Exact value (numerator over n!) with its valuation.
inline PhiExact eval_phi(unsigned long n, unsigned long s) {
    BigInt num = detail::phi_numerator(n, s);
    Valuation v = (num == 0) ? Valuation::infinity() : Valuation::finite(nu(num) - nu_factorial(n));
    return PhiExact{n, s, num, v};
}

// (1/D!) sum_{j=0..D} C(D,j) j^x as an exact rational (0^0 = 1).
inline mpq_class eval_allj_sum(unsigned long delta, unsigned long x) {
    BigInt total = 0, c, p;
    for (unsigned long j = 0; j <= delta; ++j) {
        mpz_bin_uiui(c.get_mpz_t(), delta, j);
        if (j == 0)
            p = (x == 0) ? 1 : 0;
        else
            mpz_ui_pow_ui(p.get_mpz_t(), j, x);
        total += c * p;
    }
    BigInt f;
    mpz_fac_ui(f.get_mpz_t(), delta);
    mpq_class q(total);
    q /= mpq_class(f);
    q.canonicalize();
    return q;
}

// ---- odd parts of 2^e! and their limit ----

// U(2^e!) mod 2^prec via U(2^e!) = U(2^{e-1}!) * prod_{odd m < 2^e} m,
// never forming the factorial. O(2^e) multiplications.
inline TwoAdic u_factorial_pow2(unsigned e, long prec) {
    if (e < 1) throw std::invalid_argument("u_factorial_pow2: need e >= 1");
    if (e > 30) throw std::invalid_argument("u_factorial_pow2: e too large for the odd-product recursion");
    static std::unordered_map<std::uint64_t, BigInt> cache;
    static std::mutex mtx;
    std::uint64_t key = (static_cast<std::uint64_t>(e) << 32) | static_cast<std::uint64_t>(prec);
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return TwoAdic(it->second, prec);
    }
    BigInt u = 1;
    for (unsigned ee = 1; ee <= e; ++ee) {
        unsigned long lim = 1ul << ee;
        for (unsigned long m = 3; m < lim; m += 2) {
            u *= m;
            mpz_fdiv_r_2exp(u.get_mpz_t(), u.get_mpz_t(), static_cast<mp_bitcnt_t>(prec));
        }
    }
    {
        std::lock_guard<std::mutex> lock(mtx);
        cache.emplace(key, u);
    }
    return TwoAdic(u, prec);
}

// U(2^inf!) to prec bits: U(2^{e-1}!) stabilizes mod 2^e, so evaluating
// at e = prec pins the low prec bits.
inline TwoAdic u_2inf(long prec) {
    if (prec < 1 || prec > 30) throw std::invalid_argument("u_2inf: prec out of range (1..30)");
    return u_factorial_pow2(static_cast<unsigned>(prec), prec);
}

// P_{2^inf+D}(x) = (1/U(2^inf!)) (1/D!) sum_j C(D,j) j^x, x >= 0.
// Negative x is rejected: the limit identity is only asserted there.
inline TwoAdic eval_P_inf(unsigned long delta, long x, long prec) {
    if (delta < 1) throw std::invalid_argument("eval_P_inf: need delta >= 1");
    if (x < 0) throw std::invalid_argument("eval_P_inf: negative x not supported");
    BigInt total = 0, c, p;
    for (unsigned long j = 0; j <= delta; ++j) {
        mpz_bin_uiui(c.get_mpz_t(), delta, j);
        if (j == 0)
            p = (x == 0) ? 1 : 0;
        else
            mpz_ui_pow_ui(p.get_mpz_t(), j, static_cast<unsigned long>(x));
        total += c * p;
    }
    long vD = nu_factorial(delta);
    long sv = nu(total);
    if (sv < vD) throw std::logic_error("eval_P_inf: all-j sum valuation below nu(delta!)");
    BigInt fu;
    mpz_fac_ui(fu.get_mpz_t(), delta);
    BigInt unit = odd_part(total) * inv_mod_pow2(odd_part(fu), prec) % (BigInt(1) << prec);
    unit = unit * inv_mod_pow2(u_2inf(prec).residue, prec);
    return TwoAdic(unit << (sv - vD), prec);
}

}  // namespace pstirling

#endif
