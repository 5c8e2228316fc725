#include <pstirling/io.hpp>
#include <pstirling/verify.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace pstirling;

TEST_CASE("term valuations") {
    // the three-way minimum of the worked class 16x+10 of P_29
    CHECK(term_nu(29, 4, 10, 1, 2, {4, 10}) == Valuation::finite(2));
    CHECK(term_nu(29, 4, 10, 1, 2, {12, 2}) == Valuation::finite(2));
    CHECK(term_nu(29, 4, 10, 1, 2, {8, 6}) == Valuation::finite(2));
    // unit j-factor and odd kernel value at k = 0
    CHECK(term_nu(17, 3, 0, 1, 0, {8, 0}) == Valuation::finite(0));
    // far tail is washed out by the kernel lower bound
    Valuation tail = term_nu(29, 4, 10, 0, 2, {16, 14});
    CHECK(tail.known_ge(3));
    CHECK_THROWS_AS(term_nu(29, 4, 10, 0, 0, {1l << 9, 0}), std::invalid_argument);
}

TEST_CASE("minimal term sets") {
    MinTerms mt = enumerate_min_terms(29, 4, 10, 1, 2, 2);
    CHECK(mt.min_nu == 2);
    CHECK(mt.argmin == TermSet{{4, 10}, {12, 2}, {8, 6}});
    CHECK(mt.cutoff <= 17);

    for (unsigned e = 3; e <= 7; ++e) {
        MinTerms m1 = enumerate_min_terms((1ul << e) + 1, e - 1, 0, 1, 0, 0);
        CHECK(m1.min_nu == 0);
        CHECK(m1.argmin == TermSet{{1l << (e - 1), 0}});
    }
    // n = 2^{e+1} viewed at modulus 2^{e-1}
    MinTerms m16 = enumerate_min_terms(16, 2, 0, 1, 0, 0);
    CHECK(m16.min_nu == 0);
    CHECK(m16.argmin == TermSet{{4, 0}});
}

TEST_CASE("enumeration is sound against brute force") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 60; ++trial) {
        unsigned long n = 5 + rng() % 44;
        long m = 1 + static_cast<long>(rng() % 4);
        BigInt p = BigInt(rng()) % (BigInt(1) << m);
        BigInt x = BigInt(rng() % 64);
        long d = static_cast<long>(rng() % 3);
        MinTerms mt = enumerate_min_terms(n, m, p, x, d, 6);
        if (!mt.any_finite) continue;
        long J2 = 2 * mt.cutoff;
        long best = kNuInfinity;
        TermSet args;
        for (long j = 1; j <= std::min<long>(J2, 1l << (m + d)); ++j)
            for (long k = 0; j + k <= J2; ++k) {
                Valuation v = term_nu(n, m, p, x, d, {j, k});
                if (!v.is_finite()) continue;
                if (v.value() < best) {
                    best = v.value();
                    args = {{j, k}};
                } else if (v.value() == best) {
                    args.insert({j, k});
                }
            }
        REQUIRE(best == mt.min_nu);
        REQUIRE(args == mt.argmin);
    }
}

TEST_CASE("product family checks, small exponents") {
    for (unsigned e = 2; e <= 4; ++e)
        for (unsigned delta = 1; delta <= 4; ++delta) {
            Report rep = verify_theorem_four(e, delta);
            INFO("e=" << e << " delta=" << delta);
            for (const auto& c : rep.checks) INFO(c.check << ": " << c.detail);
            CHECK(rep.all_pass());
        }
}

TEST_CASE("single-zero family") {
    CHECK(single_admissible(23).size() > 0);
    for (unsigned long n : {17ul, 23ul, 29ul, 37ul, 41ul}) {
        Report rep = verify_theorem_single(n);
        INFO("n=" << n << ": " << (rep.checks.empty() ? "" : rep.checks[0].detail));
        CHECK(rep.all_pass());
    }
    // the worked instance: q = 1 for n = 23 gives minimum 1 at (8,1)
    MinTerms mt = enumerate_min_terms(23, 3, 1, 1, 0, 1);
    CHECK(mt.min_nu == 1);
    CHECK(mt.argmin == TermSet{{8, 1}});
}

TEST_CASE("double-zero family") {
    // n=29, p=0: pivot position l = 1; delta = 1 adds the split pair
    auto tuples = double_admissible(29);
    REQUIRE(!tuples.empty());
    MinTerms d0 = enumerate_min_terms(29, 4, 0, 1, 0, 3);
    CHECK(d0.min_nu == 3);
    CHECK(d0.argmin == TermSet{{14, 0}});
    MinTerms d1 = enumerate_min_terms(29, 4, 8, 1, 0, 3);
    CHECK(d1.min_nu == 3);
    CHECK(d1.argmin == TermSet{{14, 0}, {6, 8}, {8, 6}});

    for (unsigned long n : {25ul, 29ul, 31ul, 49ul, 53ul}) {
        Report rep = verify_theorem_double(n);
        INFO("n=" << n);
        for (const auto& c : rep.checks) INFO(c.check << ": " << c.detail);
        CHECK(rep.all_pass());
    }
}

TEST_CASE("combined-terms class of P_31") {
    // class 16x+2: every difference term with j+k <= 19 has valuation
    // at least 4, yet the full sums land at exactly 7 for all d --
    // the cancellation case the enumeration alone cannot settle
    for (long x = 0; x <= 7; ++x)
        for (long j = 1; j <= 19; ++j)
            for (long k = 0; j + k <= 19; ++k) {
                Valuation v = term_nu(31, 4, 2, x, 4, {j, k});
                CHECK(v.known_ge(4));
            }
    long prec = 16;
    for (long d = 0; d <= 6; ++d) {
        auto vals = eval_P_progression(31, 2, 16, static_cast<std::size_t>(8 + (1l << d)), prec);
        for (long x = 0; x <= 7; ++x) {
            Valuation dv = valuation_of(vals[static_cast<std::size_t>(x + (1l << d))] -
                                        vals[static_cast<std::size_t>(x)]);
            CHECK(dv == Valuation::finite(d + 7));
        }
    }
}

TEST_CASE("identity suite, reduced ranges") {
    IdentityRanges r;
    r.sumid_n_max = 16;
    r.sumid_d_max = 6;
    r.stirowr_n_max = 10;
    r.stirowr_k_max = 14;
    r.refine_n_max = 20;
    r.dplus1_b_max = 3;
    r.dplus1_d_max = 4;
    r.dfact_e_max = 8;
    Report rep = verify_identity_suite(r);
    for (const auto& c : rep.checks) INFO(c.check << " " << c.params << ": " << c.detail);
    CHECK(rep.all_pass());
}

TEST_CASE("factorial-shift congruence agrees with exact rationals") {
    // independent oracle at small sizes: exact fractions
    for (unsigned e = 1; e <= 6; ++e)
        for (unsigned long d = 1; d < (1ul << e); ++d) {
            long K = static_cast<long>((1ul << e) + d) - 1 - alpha(d);
            BigInt fd, fe, fed;
            mpz_fac_ui(fd.get_mpz_t(), d);
            mpz_fac_ui(fe.get_mpz_t(), 1ul << e);
            mpz_fac_ui(fed.get_mpz_t(), (1ul << e) + d);
            mpq_class a(BigInt(1) << K);
            a /= mpq_class(fd * fe);
            mpq_class b(BigInt(1) << K);
            b /= mpq_class(fed);
            mpq_class diff = a - b;
            long bound = static_cast<long>(e) - lg(d);
            bool exact_holds = diff == 0 || (nu(diff.get_num()) - nu(diff.get_den())) >= bound;
            // the library's formulation
            TwoAdic c = binomial_mod(BigInt((1ul << e) + d), d, e + 2);
            bool lib_holds = bound <= 0 || mod_pow2(c.residue - 1, bound) == 0;
            REQUIRE(exact_holds == lib_holds);
            REQUIRE(exact_holds);
        }
}

TEST_CASE("valuation formula with corrections") {
    CorrectionTable corr =
        load_corrections(std::string(PSTIRLING_DATA_DIR) + "/valuation_corrections.json");
    REQUIRE(corr.special.size() == 5);
    REQUIRE(corr.special.at(29) == std::make_pair(9l, 19l));

    FinderLimits lim;
    Atlas atlas = build_atlas(1, 13, lim);
    for (unsigned long n = 1; n <= 13; ++n) {
        CgenResult res = verify_cgen(atlas, n, 200, corr);
        INFO("n=" << n << " " << res.first_mismatch);
        CHECK(res.mismatches == 0);
        CHECK(res.checked > 190);
    }

    // the worked instance: z = 16x+10 for n = 29 reduces to nu(x-x0)+2
    Atlas a29 = build_atlas(29, 29, lim);
    auto zeros = zeros_of(a29, 29);
    REQUIRE(zeros.size() == 12);
    std::mt19937_64 rng(91);
    for (int i = 0; i < 30; ++i) {
        BigInt x = BigInt(rng()) % (BigInt(1) << 20);
        BigInt z = (x << 4) + 10;
        auto rhs = valuation_formula_rhs(29, z, zeros, corr);
        if (!rhs) continue;
        CHECK(probe_nu(29, z, 4096) == Valuation::finite(*rhs));
    }
}

TEST_CASE("theorem-backed annotation") {
    FinderLimits lim;
    lim.witness_depth = 24;
    Atlas atlas = build_atlas(17, 20, lim);
    annotate_theorem_backed(atlas);
    for (unsigned long n = 17; n <= 20; ++n) {
        long backed = 0;
        for (const auto* z : zeros_of(atlas, n))
            if (z->status == "theorem:four") ++backed;
        CHECK(backed == 8);  // one per class mod 8
    }
}
