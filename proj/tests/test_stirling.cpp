#include <pstirling/stirling.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace pstirling;

namespace {

// independent oracle: exact nu(P_n(x)) through the unreduced odd-j sum
long exact_nu_P(unsigned long n, unsigned long x) {
    BigInt t = eval_T(n, x);
    REQUIRE(t != 0);
    return nu(t) - nu_factorial(n);
}

}  // namespace

TEST_CASE("P_1 is constantly 1") {
    for (long x : {-5l, 0l, 3l, 17l, 1000l}) CHECK(eval_P(1, x, 40).residue == 1);
}

TEST_CASE("P_n(0) has valuation alpha(n)-1") {
    for (unsigned long n = 1; n <= 40; ++n) {
        Valuation v = valuation_of(eval_P(n, 0, 64));
        CHECK(v == Valuation::finite(alpha(n) - 1));
    }
}

TEST_CASE("modular evaluation matches the exact odd-j sum") {
    for (unsigned long n = 1; n <= 20; ++n)
        for (unsigned long x = 0; x <= 40; x += 3) {
            Valuation v = valuation_of(eval_P(n, x, 64));
            REQUIRE(v.is_finite());
            CHECK(v.value() == exact_nu_P(n, x));
        }
}

TEST_CASE("eval_T small values") {
    CHECK(eval_T(1, 5) == 1);
    CHECK(eval_T(3, 1) == 6);  // 3*1 + 1*3
}

TEST_CASE("the quoted valuation patterns sit just past the zeros") {
    // frozen from the exact oracle: the x=0-anchored sequences, and the
    // windows where the familiar 2,3,2,4,... / 7,8,7,9,... patterns occur
    std::vector<long> s29, s31;
    for (unsigned long x = 0; x <= 19; ++x) s29.push_back(exact_nu_P(29, 16 * x + 2));
    for (unsigned long x = 0; x <= 12; ++x) s31.push_back(exact_nu_P(31, 16 * x + 2));
    CHECK(s29 == std::vector<long>{2, 5, 2, 3, 2, 4, 2, 3, 2, 6, 2, 3, 2, 4, 2, 3, 2, 5, 2, 3});
    CHECK(std::vector<long>(s29.begin() + 10, s29.begin() + 19) ==
          std::vector<long>{2, 3, 2, 4, 2, 3, 2, 5, 2});
    CHECK(s31 == std::vector<long>{7, 8, 7, 14, 7, 8, 7, 9, 7, 8, 7, 10, 7});
    CHECK(std::vector<long>(s31.begin() + 4, s31.begin() + 12) ==
          std::vector<long>{7, 8, 7, 9, 7, 8, 7, 10});
    for (unsigned long x = 0; x <= 3; ++x) CHECK(exact_nu_P(23, 16 * x + 14) == 4);
}

TEST_CASE("truncated arguments lose exactly lg(n) bits plus one") {
    TwoAdic x(817, 10);
    CHECK(eval_P_truncated(5, x).prec == 9);
    CHECK_THROWS_AS(eval_P_truncated(5, TwoAdic(1, 1)), std::invalid_argument);

    // consistency: any lift of x agrees to the output precision
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        unsigned long n = 2 + rng() % 30;
        long t = lg(n) + 2 + static_cast<long>(rng() % 8);
        BigInt base = BigInt(rng()) % (BigInt(1) << t);
        TwoAdic trunc(base, t);
        TwoAdic out = eval_P_truncated(n, trunc);
        BigInt lift = base + (BigInt(rng()) << t);
        TwoAdic direct = eval_P(n, lift, out.prec);
        CHECK(direct.residue == out.residue);
    }

    // a class with no zeros: constant valuation 4 on 14 mod 16
    for (BigInt lift : std::vector<BigInt>{BigInt(14), BigInt(30), BigInt(14 + (7 << 4))}) {
        TwoAdic x14(lift, 12);
        CHECK(valuation_of(eval_P_truncated(23, x14)) == Valuation::finite(4));
    }
}

TEST_CASE("stirling numbers: recurrence vs alternating sum") {
    CHECK(stirling2(4, 2) == 7);
    for (unsigned long n = 0; n <= 24; ++n) {
        CHECK(stirling2(n, n) == 1);
        for (unsigned long x = 0; x < n; ++x) CHECK(stirling2(x, n) == 0);
    }
    for (unsigned long x = 0; x <= 30; ++x)
        for (unsigned long n = 0; n <= x; ++n) REQUIRE(stirling2(x, n) == stirling2_altsum(x, n));
}

TEST_CASE("the continuous approximation property of P_n") {
    // nu((-1)^{n+1} P_n(x) - S(x,n)) >= x - nu(n!) for x >= n
    for (unsigned long n = 1; n <= 12; ++n) {
        BigInt f;
        mpz_fac_ui(f.get_mpz_t(), n);
        for (unsigned long x = n; x <= n + 16; ++x) {
            mpq_class p(eval_T(n, x));
            p /= mpq_class(f);
            if (n % 2 == 0) p = -p;
            mpq_class d = p - mpq_class(stirling2(x, n));
            if (d == 0) continue;
            long v = nu(d.get_num()) - nu(d.get_den());
            CHECK(v >= static_cast<long>(x) - nu_factorial(n));
        }
    }
}

TEST_CASE("Phi values") {
    for (unsigned long n = 1; n <= 30; ++n) {
        PhiExact p = eval_phi(n, 0);  // 0^0 = 1: value 2^{n-1}/n!
        REQUIRE(p.val.is_finite());
        CHECK(p.val.value() == alpha(n) - 1);
    }
    CHECK(eval_phi(2, 1).val.is_infinite());
    CHECK(phi_nu(2, 1).is_infinite());

    // lower bound s - [n/2]
    for (unsigned long n = 1; n <= 40; ++n)
        for (unsigned long s = 0; s <= 60; s += 5) {
            Valuation v = phi_nu(n, s);
            long bound = static_cast<long>(s) - static_cast<long>(n / 2);
            CHECK(v.known_ge(bound));
            // dual route: the memoized valuation equals the exact one
            CHECK(v == eval_phi(n, s).val);
        }
}

TEST_CASE("all-j sums") {
    CHECK(eval_allj_sum(0, 0) == 1);
    // below the diagonal the all-j sum doubles the odd-j sum
    for (unsigned long d = 1; d <= 14; ++d)
        for (unsigned long x = 0; x < d; ++x) {
            BigInt f;
            mpz_fac_ui(f.get_mpz_t(), d);
            mpq_class odd2(2 * eval_T(d, x));
            odd2 /= mpq_class(f);
            CHECK(eval_allj_sum(d, x) == odd2);
        }
    // above it they agree to x - nu(d!) bits
    for (unsigned long d = 1; d <= 10; ++d)
        for (unsigned long x = d; x <= d + 8; ++x) {
            BigInt f;
            mpz_fac_ui(f.get_mpz_t(), d);
            mpq_class odd(eval_T(d, x));
            odd /= mpq_class(f);
            mpq_class diff = eval_allj_sum(d, x) - odd;
            if (diff == 0) continue;
            long v = nu(diff.get_num()) - nu(diff.get_den());
            CHECK(v >= static_cast<long>(x) - nu_factorial(d));
        }
}

TEST_CASE("odd parts of 2^e! and the limit") {
    CHECK(u_factorial_pow2(1, 20).residue == 1);
    // direct-factorial cross-check
    for (unsigned e = 1; e <= 7; ++e) {
        BigInt f;
        mpz_fac_ui(f.get_mpz_t(), 1ul << e);
        CHECK(u_factorial_pow2(e, e + 8).residue == mod_pow2(odd_part(f), e + 8));
    }
    // successive differences: nu = e for e >= 3; the e = 2 step moves bit 1
    TwoAdic prev = u_factorial_pow2(1, 24);
    for (unsigned e = 2; e <= 16; ++e) {
        TwoAdic cur = u_factorial_pow2(e, e + 6);
        BigInt d = mod_pow2(cur.residue - prev.residue, e + 4);
        REQUIRE(d != 0);
        CHECK(nu(d) == (e == 2 ? 1 : static_cast<long>(e)));
        prev = cur;
    }
    CHECK(backwards_binary(u_2inf(13), 13) == "1101000101101");
}

TEST_CASE("large-index limit evaluation") {
    // delta = 1, x = 0: the all-j sum is 2, so the value is 2/U(2^inf!)
    TwoAdic v = eval_P_inf(1, 0, 16);
    CHECK(valuation_of(v) == Valuation::finite(1));
    BigInt expect = mod_pow2(BigInt(2) * inv_mod_pow2(u_2inf(16).residue, 16), 16);
    CHECK(v.residue == expect);
    CHECK_THROWS_AS(eval_P_inf(1, -3, 16), std::invalid_argument);

    // Cauchy convergence of P_{2^e+delta}(x) at the expected rate
    for (unsigned long delta : {1ul, 3ul}) {
        for (unsigned long x : {2ul, 7ul}) {
            long prec = 14;
            TwoAdic lim = eval_P_inf(delta, static_cast<long>(x), prec);
            for (unsigned e = 10; e <= 13; ++e) {
                long t1 = (x > delta) ? lg(x - delta) + 1 : std::numeric_limits<long>::min();
                long t2 = lg(delta) - 1;
                long bound = static_cast<long>(e) - std::max(t1, t2);
                TwoAdic fin = eval_P((1ul << e) + delta, x, prec);
                Valuation dv = valuation_of(fin - lim);
                CHECK(dv.known_ge(std::min<long>(bound, prec)));
            }
        }
    }
}

TEST_CASE("progression and batch evaluators agree with the direct one") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 6; ++rep) {
        unsigned long n = 2 + rng() % 60;
        long prec = 24;
        BigInt x0 = BigInt(rng() % 1000);
        BigInt step = BigInt(1 + rng() % 64);
        auto prog = eval_P_progression(n, x0, step, 9, prec);
        for (std::size_t i = 0; i < prog.size(); ++i) {
            CHECK(prog[i].residue == eval_P(n, x0 + step * static_cast<long>(i), prec).residue);
        }
        BigInt hi = BigInt(rng() % 100000);
        std::vector<BigInt> xs;
        for (int i = 0; i < 7; ++i) xs.push_back((hi << 6) + (rng() % 64));
        auto batch = eval_P_batch(n, xs, prec);
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(batch[i].residue == eval_P(n, xs[i], prec).residue);
    }
}

TEST_CASE("periodicity in the exponent") {
    // nu(P_n(x+2^t) - P_n(x)) >= t+1-lg(n)
    std::mt19937_64 rng(29);
    for (int i = 0; i < 60; ++i) {
        unsigned long n = 2 + rng() % 63;
        long t = lg(n) + static_cast<long>(rng() % 10);
        BigInt x = BigInt(rng() % 4000);
        long prec = t + 4;
        TwoAdic a = eval_P(n, x + (BigInt(1) << t), prec);
        TwoAdic b = eval_P(n, x, prec);
        CHECK(valuation_of(a - b).known_ge(t + 1 - lg(n)));
    }
}
